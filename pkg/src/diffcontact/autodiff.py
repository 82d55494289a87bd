"""Scalar reverse-mode automatic differentiation.

Every operation on a :class:`TapeVar` appends one node to its :class:`Tape`
holding the parent indices and the local partial derivatives.  A single
reverse sweep then yields the adjoint of every node.  Plain Python floats
(and constant-marked vars) take part in arithmetic without growing the tape,
so the same simulation code runs either on floats or on tape variables.

Ties in ``maximum``/``minimum`` send the gradient to the second argument and
``fabs`` uses the right-sided derivative (+1) at zero.
"""

from __future__ import annotations

import math
from typing import Sequence, Union

__all__ = [
    "Tape",
    "TapeVar",
    "TapeError",
    "GradVector",
    "Scalar",
    "constant",
    "value_of",
    "sqrt",
    "maximum",
    "minimum",
    "fabs",
    "clamp",
    "select",
    "supported_primitives",
]

_NO_PARENT = -1
_isfinite = math.isfinite


class TapeError(ArithmeticError):
    """Raised for inadmissible operations (non-finite partials, bad domains)."""

    def __init__(self, kind: str, node: int, message: str):
        super().__init__(f"{kind} (node {node}): {message}")
        self.kind = kind
        self.node = node


class Tape:
    """Append-only list of nodes ``(kind, parent1, partial1, parent2, partial2)``.

    Parents always precede their children, so the node order is already a
    topological order.  ``capacity`` is accepted as a sizing hint only; Python
    lists grow amortized and are never shrunk while recording.
    """

    __slots__ = ("nodes", "capacity")

    def __init__(self, capacity: int = 0):
        self.nodes: list[tuple] = []
        self.capacity = capacity

    def __len__(self) -> int:
        return len(self.nodes)

    def var(self, value: float) -> "TapeVar":
        """Register a new independent input."""
        value = float(value)
        if not _isfinite(value):
            raise TapeError("input", len(self.nodes), f"non-finite value {value!r}")
        self.nodes.append(("input", _NO_PARENT, 0.0, _NO_PARENT, 0.0))
        return TapeVar(value, len(self.nodes) - 1, self)

    def record(
        self,
        kind: str,
        inputs: Sequence["Scalar"],
        value: float,
        partials: Sequence[float],
    ) -> "TapeVar":
        """Append a node with explicit local partials (at most two parents)."""
        if len(inputs) != len(partials):
            raise ValueError(f"{kind}: {len(inputs)} inputs but {len(partials)} partials")
        if len(inputs) > 2:
            raise ValueError(f"{kind}: at most two parents per node")
        parents = [_NO_PARENT, _NO_PARENT]
        ds = [0.0, 0.0]
        for k, (x, d) in enumerate(zip(inputs, partials)):
            d = float(d)
            if not _isfinite(d):
                raise TapeError(kind, len(self.nodes), f"non-finite partial {d!r}")
            if type(x) is TapeVar and x.index >= 0:
                if x.tape is not self:
                    raise ValueError(f"{kind}: input belongs to a different tape")
                parents[k] = x.index
                ds[k] = d
        self.nodes.append((kind, parents[0], ds[0], parents[1], ds[1]))
        return TapeVar(float(value), len(self.nodes) - 1, self)

    def _push1(self, kind: str, value: float, a: "TapeVar", da: float) -> "TapeVar":
        nodes = self.nodes
        if not _isfinite(da):
            raise TapeError(kind, len(nodes), f"non-finite partial {da!r}")
        nodes.append((kind, a.index, da, _NO_PARENT, 0.0))
        return TapeVar(value, len(nodes) - 1, self)

    def _push2(
        self, kind: str, value: float, a: "TapeVar", da: float, b: "TapeVar", db: float
    ) -> "TapeVar":
        nodes = self.nodes
        if not (_isfinite(da) and _isfinite(db)):
            raise TapeError(kind, len(nodes), f"non-finite partials ({da!r}, {db!r})")
        nodes.append((kind, a.index, da, b.index, db))
        return TapeVar(value, len(nodes) - 1, self)

    def backward(self, output: "TapeVar") -> "GradVector":
        """One reverse sweep seeded at ``output``."""
        n = len(self.nodes)
        adj = [0.0] * n
        if type(output) is not TapeVar or output.index < 0:
            return GradVector(adj, self)
        if output.tape is not self:
            raise ValueError("output does not belong to this tape")
        adj[output.index] = 1.0
        nodes = self.nodes
        for i in range(output.index, -1, -1):
            g = adj[i]
            if g == 0.0:
                continue
            _, i1, d1, i2, d2 = nodes[i]
            if i1 >= 0:
                adj[i1] += g * d1
            if i2 >= 0:
                adj[i2] += g * d2
        return GradVector(adj, self)


class GradVector:
    """Adjoints indexed by node id; ``grad[var]`` reads a variable's gradient."""

    __slots__ = ("adjoints", "tape")

    def __init__(self, adjoints: list[float], tape: Tape):
        self.adjoints = adjoints
        self.tape = tape

    def __getitem__(self, x: "Scalar") -> float:
        if type(x) is TapeVar and x.index >= 0:
            if x.tape is not self.tape:
                raise ValueError("variable belongs to a different tape")
            return self.adjoints[x.index]
        return 0.0

    def __len__(self) -> int:
        return len(self.adjoints)


def _binary(kind, value, a, da, b, db):
    # a and b are TapeVars; either may be constant-marked
    if a.index < 0:
        if b.index < 0:
            return TapeVar(value)
        return b.tape._push1(kind, value, b, db)
    if b.index < 0:
        return a.tape._push1(kind, value, a, da)
    if a.tape is not b.tape:
        raise ValueError(f"{kind}: operands belong to different tapes")
    return a.tape._push2(kind, value, a, da, b, db)


def _unary(kind, value, a, da):
    if a.index < 0:
        return TapeVar(value)
    return a.tape._push1(kind, value, a, da)


class TapeVar:
    """A tracked scalar.  ``index == -1`` marks a constant."""

    __slots__ = ("value", "index", "tape")

    def __init__(self, value: float, index: int = _NO_PARENT, tape: Tape | None = None):
        self.value = value
        self.index = index
        self.tape = tape

    @property
    def is_constant(self) -> bool:
        return self.index < 0

    def __repr__(self) -> str:
        if self.index < 0:
            return f"TapeVar({self.value!r}, const)"
        return f"TapeVar({self.value!r}, node={self.index})"

    def __float__(self) -> float:
        return float(self.value)

    # arithmetic

    def __add__(self, other):
        if type(other) is TapeVar:
            return _binary("add", self.value + other.value, self, 1.0, other, 1.0)
        if other == 0.0:
            return self
        return _unary("add", self.value + other, self, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        if type(other) is TapeVar:
            return _binary("sub", self.value - other.value, self, 1.0, other, -1.0)
        if other == 0.0:
            return self
        return _unary("sub", self.value - other, self, 1.0)

    def __rsub__(self, other):
        return _unary("sub", other - self.value, self, -1.0)

    def __mul__(self, other):
        if type(other) is TapeVar:
            return _binary(
                "mul", self.value * other.value, self, other.value, other, self.value
            )
        if other == 1.0:
            return self
        return _unary("mul", self.value * other, self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if type(other) is TapeVar:
            b = other.value
            if b == 0.0:
                raise TapeError("div", _next_index(self, other), "division by zero")
            q = self.value / b
            return _binary("div", q, self, 1.0 / b, other, -q / b)
        if other == 0.0:
            raise TapeError("div", _next_index(self), "division by zero")
        if other == 1.0:
            return self
        return _unary("div", self.value / other, self, 1.0 / other)

    def __rtruediv__(self, other):
        b = self.value
        if b == 0.0:
            raise TapeError("div", _next_index(self), "division by zero")
        q = other / b
        return _unary("div", q, self, -q / b)

    def __neg__(self):
        return _unary("neg", -self.value, self, -1.0)

    def __pos__(self):
        return self

    def __pow__(self, p):
        if type(p) is TapeVar:
            raise TypeError("only constant exponents are supported")
        if p == 2:
            return _unary("square", self.value * self.value, self, 2.0 * self.value)
        if p == 1:
            return self
        x = self.value
        if x < 0.0 and p != int(p):
            raise TapeError("pow", _next_index(self), f"negative base {x!r}")
        return _unary("pow", x**p, self, p * x ** (p - 1))

    # comparisons act on values and never touch the tape

    def __lt__(self, other):
        return self.value < value_of(other)

    def __le__(self, other):
        return self.value <= value_of(other)

    def __gt__(self, other):
        return self.value > value_of(other)

    def __ge__(self, other):
        return self.value >= value_of(other)


Scalar = Union[float, TapeVar]


def _next_index(*xs) -> int:
    for x in xs:
        if type(x) is TapeVar and x.tape is not None:
            return len(x.tape)
    return -1


def constant(value: float) -> TapeVar:
    return TapeVar(float(value))


def value_of(x: Scalar) -> float:
    return x.value if type(x) is TapeVar else x


def sqrt(x: Scalar) -> Scalar:
    if type(x) is not TapeVar:
        return math.sqrt(x)
    v = x.value
    if v < 0.0:
        raise TapeError("sqrt", _next_index(x), f"negative argument {v!r}")
    s = math.sqrt(v)
    if x.index < 0:
        return TapeVar(s)
    if s == 0.0:
        raise TapeError("sqrt", _next_index(x), "infinite derivative at 0")
    return x.tape._push1("sqrt", s, x, 0.5 / s)


def maximum(a: Scalar, b: Scalar) -> Scalar:
    """max(a, b); at a tie the result is ``b``."""
    if value_of(a) > value_of(b):
        return a
    return b


def minimum(a: Scalar, b: Scalar) -> Scalar:
    """min(a, b); at a tie the result is ``b``."""
    if value_of(a) < value_of(b):
        return a
    return b


def fabs(x: Scalar) -> Scalar:
    if type(x) is not TapeVar:
        return abs(x)
    if x.value >= 0.0:
        return x
    return -x


def clamp(x: Scalar, lo: Scalar, hi: Scalar) -> Scalar:
    return minimum(maximum(x, lo), hi)


def select(cond: bool, a: Scalar, b: Scalar) -> Scalar:
    """``a`` if ``cond`` else ``b``; only the taken branch carries gradient."""
    return a if cond else b


def supported_primitives() -> tuple[str, ...]:
    return (
        "add", "sub", "mul", "div", "neg", "sqrt",
        "min", "max", "abs", "clamp", "select",
    )
