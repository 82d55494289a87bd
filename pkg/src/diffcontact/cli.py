"""Command-line entry point: gradient tables, optimizations and the stiffness sweep.

    diffcontact grads|optimize|sweep-stiffness --task <t> --models <list>|all
                --out <dir> [--set key=value]... [--config file] [--check]

Every run writes CSV, markdown and SVG files plus a ``*.meta.json`` sidecar
holding the resolved parameters.  Output is deterministic: running the same
command twice produces identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from typing import Any, Optional, Sequence

from . import __version__
from .contact import MODEL_NAMES, Compliant, uses_toi
from .optimize import (
    QUANTITIES,
    GradReport,
    LearningCurve,
    classify,
    default_config,
    gradient_descent,
    gradient_report,
    relative_error,
)
from .svg import Plot
from .tasks import (
    MODEL_KEYS,
    TASK_KEYS,
    TASK_NAMES,
    TaskSpec,
    build_task,
    default_model,
    simulate,
    task3_optimal_control,
)

log = logging.getLogger("diffcontact")

RUN_KEYS = ("lr", "iters", "h", "checkpoint", "k_n_values")
ALLOWED_KEYS = TASK_KEYS + MODEL_KEYS + RUN_KEYS
INT_KEYS = {"N", "iters", "checkpoint", "pbd_iterations"}
DEFAULT_SWEEP = (100.0, 1000.0, 1.0e4, 1.0e5)

# values used by --check
TASK3_OPTIMUM = 1.3965
TASK3_INITIAL = 2.06
TASK2_TOI_V0 = (10.18, -4.16)
TASK2_NOTOI_VX = -2.49


class UsageError(Exception):
    pass


# --- overrides ------------------------------------------------------------------------


def parse_value(key: str, text: str):
    text = text.strip()
    try:
        if key == "k_n_values":
            vals = tuple(float(t) for t in text.split(",") if t.strip())
            if not vals:
                raise ValueError
            return vals
        if key in INT_KEYS:
            return int(text)
        return float(text)
    except ValueError:
        raise UsageError(f"bad value for {key}: {text!r}") from None


def parse_assignment(item: str) -> tuple[str, Any]:
    if "=" not in item:
        raise UsageError(f"expected key=value, got {item!r}")
    key, _, value = item.partition("=")
    key = key.strip()
    if key not in ALLOWED_KEYS:
        raise UsageError(f"unknown key {key!r}; allowed: {', '.join(ALLOWED_KEYS)}")
    return key, parse_value(key, value)


def read_config(path: str) -> dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    out = {}
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if line:
            k, v = parse_assignment(line)
            out[k] = v
    return out


def resolve_overrides(config: Optional[str], sets: Sequence[str]) -> dict[str, Any]:
    out = read_config(config) if config else {}
    for item in sets or ():
        k, v = parse_assignment(item)
        out[k] = v
    return out


def _task_overrides(o):
    return {k: v for k, v in o.items() if k in TASK_KEYS}


def _model_overrides(o):
    return {k: v for k, v in o.items() if k in MODEL_KEYS}


def resolve_models(spec: str, task_name: str) -> list[str]:
    if spec.strip() == "all":
        names = list(MODEL_NAMES)
        if task_name == "task2-friction":
            # the direct velocity impulse has no friction model
            names = [n for n in names if not n.startswith("direct")]
        return names
    names = [n.strip() for n in spec.split(",") if n.strip()]
    for n in names:
        if n not in MODEL_NAMES:
            raise UsageError(f"unknown model {n!r}; expected one of {', '.join(MODEL_NAMES)}")
        if task_name == "task2-friction" and n.startswith("direct"):
            raise UsageError(f"model {n!r} does not support friction")
    return names


# --- formatting ----------------------------------------------------------------------------


def fmt_csv(v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    if not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return format(v, ".9g")


def fmt_md(v) -> str:
    if v is None:
        return "n/a"
    s = f"{v:.4f}"
    return "0.0000" if s == "-0.0000" else s


def write_csv(path: str, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([c if isinstance(c, str) else fmt_csv(c) for c in r])
    _write_text(path, buf.getvalue())


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_meta(path: str, meta: dict) -> None:
    _write_text(path, json.dumps(meta, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, tuple):
        return list(o)
    return str(o)


def task_meta(task: TaskSpec) -> dict:
    sc = task.scene
    meta = {
        "task": task.name,
        "T": task.horizon_T,
        "N": task.steps_N,
        "dt": task.dt,
        "gravity": list(sc.gravity.values()),
        "restitution_e": sc.restitution_e,
        "friction_mu": sc.friction_mu,
        "balls": [
            {"pos": list(b.pos.values()), "vel": list(b.vel.values()),
             "radius": b.radius, "mass": b.mass}
            for b in sc.balls
        ],
        "planes": [{"normal": list(p.normal.values()), "offset": p.offset} for p in sc.planes],
        "loss": {"terminal": task.loss.terminal, "ball": task.loss.ball,
                 "target": list(task.loss.target.values()), "epsilon": task.loss.epsilon},
        "initial_control": list(task.controls[0].values()) if task.controls else None,
    }
    for k in ("wall_x", "derived_defaults"):
        if k in task.metadata:
            meta[k] = task.metadata[k]
    return meta


def model_meta(model) -> dict:
    d = asdict(model)
    d["name"] = model.name
    return d


def base_meta(command: str, task: TaskSpec, models, overrides) -> dict:
    return {
        "version": __version__,
        "command": command,
        "overrides": {k: overrides[k] for k in sorted(overrides)},
        "task": task_meta(task),
        "models": [model_meta(m) for m in models],
    }


# --- grads ---------------------------------------------------------------------------------


def _grads_job(args):
    task_name, model_name, overrides, h = args
    task = build_task(task_name, _task_overrides(overrides))
    model = default_model(model_name, task, _model_overrides(overrides))
    return gradient_report(task, [model], include_analytic=False, h=h)


def _merge_reports(task: TaskSpec, parts: Sequence[GradReport], h) -> GradReport:
    merged = gradient_report(task, [], include_analytic=True, h=h)
    for p in parts:
        merged.rows.extend(p.rows)
        merged.models.extend(p.models)
        merged.errors.update(p.errors)
    return merged


def _map(fn, jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def grads_markdown(report: GradReport) -> str:
    q = report.quantities
    lines = [f"# Gradients at iteration 0: {report.task}", ""]
    lines.append("| source | " + " | ".join(q) + " |")
    lines.append("|---" * (len(q) + 1) + "|")
    if report.has_analytic():
        vals = [f"**{fmt_md(report.analytic(x))}**" for x in q]
        lines.append("| **analytic** | " + " | ".join(vals) + " |")
    for m in report.models:
        lines.append(f"| {m} | " + " | ".join(fmt_md(report.tape(m, x)) for x in q) + " |")
    if report.models:
        lines += ["", "Finite differences (central, forward simulation without tape):", ""]
        lines.append("| model | " + " | ".join(q) + " |")
        lines.append("|---" * (len(q) + 1) + "|")
        for m in report.models:
            cells = []
            for x in q:
                v = report.fd(m, x)
                cells.append("skipped" if v is None else fmt_md(v))
            lines.append(f"| {m} | " + " | ".join(cells) + " |")
        skipped = [r for r in report.rows if r.source == "finite-difference" and r.value is None]
        if skipped:
            lines += ["", "Skipped entries sit within h of a change in contact structure."]
    for m, err in sorted(report.errors.items()):
        lines += ["", f"{m}: failed ({err})"]
    return "\n".join(lines) + "\n"


def grads_rows(report: GradReport):
    rows = []
    if not report.models and report.has_analytic():
        for x in report.quantities:
            rows.append(("analytic", x, None, None, report.analytic(x)))
    for m in report.models:
        for x in report.quantities:
            a = report.analytic(x) if report.has_analytic() else None
            rows.append((m, x, report.tape(m, x), report.fd(m, x), a))
    return rows


def check_grads(report: GradReport, models) -> list[str]:
    """Mismatches against the acceptance tolerances for gradient tables."""
    problems = []
    by_name = {m.name: m for m in models}
    for m in report.models:
        for x in report.quantities:
            t, f = report.tape(m, x), report.fd(m, x)
            if f is not None and relative_error(t, f) > 1e-3:
                problems.append(f"{m} {x}: tape {t:.6g} vs finite difference {f:.6g}")
    for m, err in report.errors.items():
        problems.append(f"{m}: {err}")
    if report.task == "task1" and report.has_analytic():
        for m in report.models:
            if uses_toi(by_name[m]):
                for x in report.quantities:
                    if round(report.tape(m, x), 4) != round(report.analytic(x), 4):
                        problems.append(f"{m} {x}: {report.tape(m, x):.4f} vs analytic "
                                        f"{report.analytic(x):.4f}")
    if report.task == "task3" and "pbd" in report.models:
        for x in report.quantities[:4]:
            t, a = report.tape("pbd", x), report.analytic(x)
            if abs(t - a) > 0.15 * abs(a):
                problems.append(f"pbd {x}: {t:.4f} more than 15% from analytic {a:.4f}")
    return problems


def cmd_grads(args, overrides) -> int:
    task = build_task(args.task, _task_overrides(overrides))
    names = resolve_models(args.models, args.task)
    models = [default_model(n, task, _model_overrides(overrides)) for n in names]
    h = float(overrides.get("h", 1e-5))
    parts = _map(_grads_job, [(args.task, n, overrides, h) for n in names], args.jobs)
    report = _merge_reports(task, parts, h)

    out = args.out
    stem = os.path.join(out, f"{args.task}_grads")
    _write_text(stem + ".md", grads_markdown(report))
    write_csv(stem + ".csv", ("model", "quantity", "tape_grad", "fd_grad", "analytic_grad"),
              grads_rows(report))
    meta = base_meta("grads", task, models, overrides)
    meta["finite_difference_h"] = h
    meta["quantities"] = [{"quantity": q, "parameter": list(k)} for k, q in QUANTITIES[task.name]]
    write_meta(stem + ".meta.json", meta)
    print(grads_markdown(report), end="")
    if args.check:
        return _report_check(check_grads(report, models))
    return 0


def _report_check(problems: list[str]) -> int:
    for p in problems:
        print(f"CHECK FAILED: {p}", file=sys.stderr)
    if problems:
        return 1
    print("check passed")
    return 0


# --- optimize ------------------------------------------------------------------------------


def _opt_config(task, overrides):
    kw = {}
    if "lr" in overrides:
        kw["learning_rate"] = float(overrides["lr"])
    if "iters" in overrides:
        kw["iterations"] = int(overrides["iters"])
    if "checkpoint" in overrides:
        kw["checkpoint_every"] = int(overrides["checkpoint"])
    return default_config(task, **kw)


def _opt_job(args) -> LearningCurve:
    task_name, model_name, overrides = args
    task = build_task(task_name, _task_overrides(overrides))
    model = default_model(model_name, task, _model_overrides(overrides))
    return gradient_descent(task, model, _opt_config(task, overrides))


def _param_names(task: TaskSpec) -> list[str]:
    if task.name == "task3":
        return []
    return ["vx0", "vy0"]


def write_curve(path: str, task: TaskSpec, curve: LearningCurve) -> None:
    names = _param_names(task)
    rows = []
    for r in curve.records:
        params = list(r.params) if (names and r.params is not None) else [None] * len(names)
        rows.append([r.iter, r.loss] + params)
    write_csv(path, ["iter", "loss"] + names, rows)


def trajectory_plot(task: TaskSpec, model, curve: LearningCurve) -> Plot:
    plot = Plot(title=f"{task.name} / {curve.model}: trajectories", xlabel="x", ylabel="y",
                equal_aspect=True)
    initial = curve.initial_result
    if initial is None:
        initial = simulate(task, model)
    runs = [("initial", initial, True)]
    if curve.config.iterations > 0 and curve.final_result is not None:
        runs.append(("final", curve.final_result, False))
    for label, res, dashed in runs:
        for b in range(len(task.scene.balls)):
            pts = [frame[b] for frame in res.trajectory]
            name = f"{label} ball {b + 1}" if len(task.scene.balls) > 1 else label
            plot.add(pts, name, dashed=dashed)
    tgt = task.loss.target.values()
    plot.add([tgt], "target", marker=True, color="#000000")
    for p in task.scene.planes:
        nx, ny = p.normal.values()
        if abs(ny) == 1.0:
            plot.hlines.append((p.offset * ny, "ground"))
        elif abs(nx) == 1.0:
            plot.vlines.append((p.offset * nx, "wall"))
    return plot


def write_controls(out: str, task: TaskSpec, curve: LearningCurve, optimum) -> None:
    stem = os.path.join(out, f"controls_{task.name}_{curve.model}")
    n_steps = task.steps_N
    rows = []
    snaps = [r for r in curve.records if r.params is not None]
    for r in snaps:
        for n in range(n_steps):
            ux, uy = r.params[2 * n], r.params[2 * n + 1]
            rows.append([r.iter, n, ux, uy, math.hypot(ux, uy)])
    write_csv(stem + ".csv", ("iter", "step", "ux", "uy", "magnitude"), rows)

    plot = Plot(title=f"{task.name} / {curve.model}: control magnitude", xlabel="step",
                ylabel="|u|")
    for r in snaps:
        if r is snaps[0] or r is snaps[-1]:
            mags = [(n, math.hypot(r.params[2 * n], r.params[2 * n + 1])) for n in range(n_steps)]
            plot.add(mags, f"iteration {r.iter}")
    dt = task.dt
    plot.add([(n, optimum.magnitude((n + 0.5) * dt)) for n in range(n_steps)],
             "analytic optimum", dashed=True, color="#000000")
    plot.save(stem + ".svg")


def summary_markdown(task: TaskSpec, curves: Sequence[LearningCurve]) -> str:
    lines = [f"# Optimization summary: {task.name}", ""]
    if task.name == "task3":
        lines.append("| model | initial loss | final loss | iterations | status |")
        lines.append("|---|---|---|---|---|")
    else:
        lines.append("| model | initial loss | final loss | v_x0 | v_y0 | trajectory | status |")
        lines.append("|---|---|---|---|---|---|---|")
    for c in curves:
        status = f"unstable at iteration {c.unstable_at}" if c.unstable else "ok"
        if not c.records:
            lines.append(f"| {c.model} | n/a | n/a | | | | {status} |")
            continue
        init, fin = f"{c.initial_loss:.6g}", f"{c.final_loss:.6g}"
        if task.name == "task3":
            lines.append(f"| {c.model} | {init} | {fin} | {c.records[-1].iter} | {status} |")
        else:
            vx, vy = c.final_params
            lines.append(f"| {c.model} | {init} | {fin} | {fmt_md(vx)} | {fmt_md(vy)} | "
                         f"{classify(c)} | {status} |")
    lines += ["", "Losses are recorded before each parameter update."]
    return "\n".join(lines) + "\n"


def check_optimize(task: TaskSpec, models, curves) -> list[str]:
    problems = []
    for m, c in zip(models, curves):
        if c.unstable or not c.records:
            problems.append(f"{c.model}: unstable ({c.message})")
            continue
        if task.name == "task3":
            if uses_toi(m) and abs(c.final_loss - TASK3_OPTIMUM) > 0.02 * TASK3_OPTIMUM:
                problems.append(f"{c.model}: final loss {c.final_loss:.5f} not within 2% of "
                                f"{TASK3_OPTIMUM}")
            if not isinstance(m, Compliant) and \
                    abs(c.initial_loss - TASK3_INITIAL) > 0.02 * TASK3_INITIAL:
                problems.append(f"{c.model}: initial loss {c.initial_loss:.5f} not within 2% "
                                f"of {TASK3_INITIAL}")
        elif task.name in ("task2", "task2-friction"):
            if c.final_loss > 1e-3:
                problems.append(f"{c.model}: final loss {c.final_loss:.3g} above 1e-3")
            if task.name == "task2" and not isinstance(m, Compliant) and m.name != "pbd":
                vx, vy = c.final_params
                mode = classify(c)
                if uses_toi(m):
                    ok = mode == "Trajectory 1" and all(
                        abs(a - b) <= 0.1 * abs(b) for a, b in zip((vx, vy), TASK2_TOI_V0))
                else:
                    ok = mode == "Trajectory 2" and \
                        abs(vx - TASK2_NOTOI_VX) <= 0.1 * abs(TASK2_NOTOI_VX)
                if not ok:
                    problems.append(f"{c.model}: ended at ({vx:.4f}, {vy:.4f}), {mode}")
    return problems


def cmd_optimize(args, overrides) -> int:
    task = build_task(args.task, _task_overrides(overrides))
    names = resolve_models(args.models, args.task)
    models = [default_model(n, task, _model_overrides(overrides)) for n in names]
    cfg = _opt_config(task, overrides)
    curves = _map(_opt_job, [(args.task, n, overrides) for n in names], args.jobs)
    optimum = task3_optimal_control() if task.name == "task3" else None

    out = args.out
    for model, curve in zip(models, curves):
        write_curve(os.path.join(out, f"curve_{task.name}_{curve.model}.csv"), task, curve)
        trajectory_plot(task, model, curve).save(
            os.path.join(out, f"traj_{task.name}_{curve.model}.svg"))
        if task.name == "task3" and cfg.iterations > 0:
            write_controls(out, task, curve, optimum)
    summary = summary_markdown(task, curves)
    _write_text(os.path.join(out, f"summary_{task.name}.md"), summary)
    meta = base_meta("optimize", task, models, overrides)
    meta["optimizer"] = asdict(cfg)
    meta["loss_recorded"] = "before update"
    if optimum is not None:
        meta["analytic_optimum"] = asdict(optimum)
    meta["runs"] = [
        {"model": c.model, "iterations_recorded": len(c.records), "unstable": c.unstable,
         "unstable_at": c.unstable_at, "message": c.message}
        for c in curves
    ]
    write_meta(os.path.join(out, f"optimize_{task.name}.meta.json"), meta)
    print(summary, end="")
    if args.check:
        return _report_check(check_optimize(task, models, curves))
    return 0


# --- stiffness sweep ------------------------------------------------------------------------


def _kn_label(k: float) -> str:
    return format(k, "g").replace("+", "")


def _sweep_job(args) -> LearningCurve:
    task_name, k_n, overrides = args
    o = dict(overrides)
    o["k_n"] = k_n
    task = build_task(task_name, _task_overrides(o))
    model = default_model("compliant", task, _model_overrides(o))
    return gradient_descent(task, model, _opt_config(task, o))


def check_sweep(ks, curves) -> list[str]:
    expected = {100.0: 2.39, 1000.0: 2.06, 1.0e4: 2.06}
    problems = []
    for k, c in zip(ks, curves):
        if k in expected:
            if not c.records:
                problems.append(f"k_n={_kn_label(k)}: no loss recorded")
            elif abs(c.initial_loss - expected[k]) > 0.05:
                problems.append(f"k_n={_kn_label(k)}: initial loss {c.initial_loss:.4f}, "
                                f"expected {expected[k]} +/- 0.05")
    return problems


def cmd_sweep(args, overrides) -> int:
    if args.models not in ("all", "compliant"):
        raise UsageError("sweep-stiffness runs the compliant model only")
    ks = tuple(overrides.get("k_n_values", DEFAULT_SWEEP))
    task = build_task(args.task, _task_overrides(overrides))
    curves = _map(_sweep_job, [(args.task, k, overrides) for k in ks], args.jobs)

    out = args.out
    plot = Plot(title=f"{task.name}: compliant stiffness sweep", xlabel="iteration",
                ylabel="loss", logy=True)
    lines = [f"# Stiffness sweep: {task.name}, compliant model", "",
             "| k_n | k_d | initial loss | final loss | status |", "|---|---|---|---|---|"]
    models = []
    for k, c in zip(ks, curves):
        o = dict(overrides)
        o["k_n"] = k
        model = default_model("compliant", task, _model_overrides(o))
        models.append(model)
        write_curve(os.path.join(out, f"curve_{task.name}_compliant_kn{_kn_label(k)}.csv"),
                    task, c)
        plot.add([(r.iter, r.loss) for r in c.records], f"k_n = {_kn_label(k)}")
        status = f"unstable at iteration {c.unstable_at}" if c.unstable else "ok"
        init = f"{c.initial_loss:.4f}" if c.records else "n/a"
        fin = f"{c.final_loss:.4f}" if c.records else "n/a"
        lines.append(f"| {_kn_label(k)} | {model.k_d:.6g} | {init} | {fin} | {status} |")
    plot.save(os.path.join(out, f"sweep_{task.name}.svg"))
    table = "\n".join(lines) + "\n"
    _write_text(os.path.join(out, f"sweep_{task.name}.md"), table)
    meta = base_meta("sweep-stiffness", task, models, overrides)
    meta["optimizer"] = asdict(_opt_config(task, overrides))
    meta["k_n_values"] = list(ks)
    meta["loss_recorded"] = "before update"
    meta["runs"] = [{"k_n": k, "unstable": c.unstable, "unstable_at": c.unstable_at,
                     "message": c.message} for k, c in zip(ks, curves)]
    write_meta(os.path.join(out, f"sweep_{task.name}.meta.json"), meta)
    print(table, end="")
    if args.check:
        return _report_check(check_sweep(ks, curves))
    return 0


# --- entry point ------------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="diffcontact", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, default_task in (("grads", None), ("optimize", None), ("sweep-stiffness", "task3")):
        p = sub.add_parser(name)
        p.add_argument("--task", choices=TASK_NAMES, required=default_task is None,
                       default=default_task)
        p.add_argument("--models", default="all" if name != "sweep-stiffness" else "compliant",
                       help="comma-separated model names, or 'all'")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help=f"override; keys: {', '.join(ALLOWED_KEYS)}")
        p.add_argument("--config", help="file of key=value lines; --set wins over it")
        p.add_argument("--check", action="store_true",
                       help="exit 1 when results fall outside the acceptance tolerances")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


COMMANDS = {"grads": cmd_grads, "optimize": cmd_optimize, "sweep-stiffness": cmd_sweep}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = resolve_overrides(args.config, args.set)
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        try:
            os.makedirs(args.out, exist_ok=True)
        except OSError as exc:
            raise UsageError(f"cannot create output directory {args.out}: {exc}") from None
        if args.command == "sweep-stiffness" and args.task != "task3":
            raise UsageError("sweep-stiffness is defined for task3")
        return COMMANDS[args.command](args, overrides)
    except UsageError as exc:
        print(f"diffcontact: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"diffcontact: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"diffcontact: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
