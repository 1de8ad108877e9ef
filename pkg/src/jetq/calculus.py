"""Wirtinger-style calculus on kernel expressions.

Derivatives in the z slot act only on z variables and derivatives in the wb
slot only on wb variables, so mixed partials of K(z, w-bar) reduce to
ordinary partials in 2m independent complex variables.  Differentiation
returns canonical trees (see :mod:`jetq.expr`), which makes mixed partials
taken in different orders structurally identical.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import mpmath

from . import expr as E
from .expr import KernelExpr

DEFAULT_ORDER_CAP = 8

ParameterBinding = dict[str, float]


class EvalDomainError(ValueError):
    """Point lies outside the principal-branch safe domain of the kernel."""


class OrderCapError(ValueError):
    """Requested derivative order exceeds the configured cap."""


@dataclass(frozen=True)
class EvalPoint:
    """Point pair (z, w); wb variables read conj(w)."""

    z: tuple[complex, ...]
    w: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(complex(c) for c in self.z))
        object.__setattr__(self, "w", tuple(complex(c) for c in self.w))
        if len(self.z) != len(self.w):
            raise ValueError("z and w must have the same dimension")

    @classmethod
    def diagonal(cls, z) -> "EvalPoint":
        z = tuple(complex(c) for c in z)
        return cls(z, z)

    @property
    def dimension(self) -> int:
        return len(self.z)


@dataclass(frozen=True)
class DerivativeIndex:
    """Multi-index pair: orders in z1..zm and in wb1..wbm."""

    z: tuple[int, ...]
    wb: tuple[int, ...]

    def __post_init__(self):
        if any(n < 0 for n in self.z + self.wb):
            raise ValueError("derivative orders must be non-negative")

    @property
    def total_order(self) -> int:
        return sum(self.z) + sum(self.wb)

    @classmethod
    def single(cls, m: int, slot: str, index: int, order: int = 1) -> "DerivativeIndex":
        zi = [0] * m
        wi = [0] * m
        (zi if slot == "z" else wi)[index - 1] = order
        return cls(tuple(zi), tuple(wi))


# ---------------------------------------------------------------------------
# symbolic differentiation

def _diff_step(e: KernelExpr, slot: str, index: int, memo: dict) -> KernelExpr:
    got = memo.get(id(e))
    if got is not None:
        return got
    k = e.kind
    if k in ("const", "param"):
        out = E.const(0)
    elif k == "var":
        out = E.const(1 if (e.slot == slot and e.index == index) else 0)
    elif k == "add":
        out = E.cadd(*(_diff_step(a, slot, index, memo) for a in e.args))
    elif k == "mul":
        terms = []
        for i, a in enumerate(e.args):
            da = _diff_step(a, slot, index, memo)
            if da.kind == "const" and da.value == 0:
                continue
            terms.append(E.cmul(*e.args[:i], da, *e.args[i + 1:]))
        out = E.cadd(*terms) if terms else E.const(0)
    elif k == "pow":
        base, expo = e.args
        dbase = _diff_step(base, slot, index, memo)
        if dbase.kind == "const" and dbase.value == 0:
            out = E.const(0)
        else:
            out = E.cmul(expo, E.cpow(base, E.cadd(expo, E.const(-1))), dbase)
    elif k == "log":
        (u,) = e.args
        out = E.cmul(_diff_step(u, slot, index, memo), E.cpow(u, E.const(-1)))
    elif k == "exp":
        (u,) = e.args
        out = E.cmul(e, _diff_step(u, slot, index, memo))
    else:  # sub/div/neg never appear in canonical trees
        raise AssertionError(f"non-canonical node {k!r} reached differentiation")
    memo[id(e)] = out
    return out


def differentiate(expr: KernelExpr, idx: DerivativeIndex,
                  cap: int = DEFAULT_ORDER_CAP) -> KernelExpr:
    """Exact symbolic mixed partial; z orders first, then wb orders."""
    if idx.total_order > cap:
        raise OrderCapError(f"total order {idx.total_order} exceeds cap {cap}")
    out = E.canonicalize(expr)
    for slot, orders in (("z", idx.z), ("wb", idx.wb)):
        for i, n in enumerate(orders, start=1):
            for _ in range(n):
                out = _diff_step(out, slot, i, {})
    return out


def diff_z(expr: KernelExpr, index: int, order: int = 1) -> KernelExpr:
    out = E.canonicalize(expr)
    for _ in range(order):
        out = _diff_step(out, "z", index, {})
    return out


def diff_wb(expr: KernelExpr, index: int, order: int = 1) -> KernelExpr:
    out = E.canonicalize(expr)
    for _ in range(order):
        out = _diff_step(out, "wb", index, {})
    return out


# ---------------------------------------------------------------------------
# evaluation

def _lookup(e: KernelExpr, point: EvalPoint, params: ParameterBinding) -> complex:
    if e.slot == "z":
        if e.index > len(point.z):
            raise ValueError(f"variable z{e.index} outside point dimension")
        return point.z[e.index - 1]
    if e.index > len(point.w):
        raise ValueError(f"variable wb{e.index} outside point dimension")
    return point.w[e.index - 1].conjugate()


def _is_integer(x: float) -> bool:
    return abs(x - round(x)) < 1e-12


def evaluate(expr: KernelExpr, point: EvalPoint,
             params: ParameterBinding | None = None) -> complex:
    """Evaluate with z_i := point.z[i], wb_i := conj(point.w[i]).

    pow uses the principal branch; non-integer exponents require the base to
    have positive real part (the declared safe domain).
    """
    params = params or {}
    memo: dict[int, complex] = {}

    def ev(e: KernelExpr) -> complex:
        got = memo.get(id(e))
        if got is not None:
            return got
        k = e.kind
        if k == "const":
            v = e.value
        elif k == "var":
            v = _lookup(e, point, params)
        elif k == "param":
            try:
                v = complex(params[e.name])
            except KeyError:
                raise KeyError(f"parameter {e.name!r} is not bound") from None
        elif k == "add":
            v = sum(ev(a) for a in e.args)
        elif k == "sub":
            v = ev(e.args[0]) - ev(e.args[1])
        elif k == "mul":
            v = 1 + 0j
            for a in e.args:
                v *= ev(a)
        elif k == "div":
            den = ev(e.args[1])
            if den == 0:
                raise EvalDomainError("division by zero")
            v = ev(e.args[0]) / den
        elif k == "neg":
            v = -ev(e.args[0])
        elif k == "pow":
            ex = ev(e.args[1])
            if abs(ex.imag) > 1e-12:
                raise EvalDomainError("pow exponent must evaluate to a real number")
            base = ev(e.args[0])
            if _is_integer(ex.real):
                n = int(round(ex.real))
                if base == 0:
                    if n < 0:
                        raise EvalDomainError("zero base with negative exponent")
                    v = complex(0 ** n)
                else:
                    v = base ** n
            elif base.real <= 0:
                raise EvalDomainError(
                    "pow base outside the principal-branch safe region (Re <= 0)")
            else:
                v = base ** ex.real
        elif k == "log":
            u = ev(e.args[0])
            if u == 0:
                raise EvalDomainError("log of zero")
            v = cmath.log(u)
        else:
            v = cmath.exp(ev(e.args[0]))
        memo[id(e)] = v
        return v

    return ev(expr)


def _evaluate_mp(expr: KernelExpr, zvals, wbvals, params: ParameterBinding):
    """mpmath-precision tree evaluation; zvals/wbvals are mpc sequences."""
    memo: dict[int, mpmath.mpc] = {}

    def ev(e: KernelExpr):
        got = memo.get(id(e))
        if got is not None:
            return got
        k = e.kind
        if k == "const":
            v = mpmath.mpc(e.value)
        elif k == "var":
            v = zvals[e.index - 1] if e.slot == "z" else wbvals[e.index - 1]
        elif k == "param":
            v = mpmath.mpc(params[e.name])
        elif k == "add":
            v = mpmath.mpc(0)
            for a in e.args:
                v += ev(a)
        elif k == "sub":
            v = ev(e.args[0]) - ev(e.args[1])
        elif k == "mul":
            v = mpmath.mpc(1)
            for a in e.args:
                v *= ev(a)
        elif k == "div":
            v = ev(e.args[0]) / ev(e.args[1])
        elif k == "neg":
            v = -ev(e.args[0])
        elif k == "pow":
            v = ev(e.args[0]) ** ev(e.args[1])
        elif k == "log":
            v = mpmath.log(ev(e.args[0]))
        else:
            v = mpmath.exp(ev(e.args[0]))
        memo[id(e)] = v
        return v

    return ev(expr)


# ---------------------------------------------------------------------------
# curvature coefficient of a scalar metric

def mixed_log_derivative(kernel: KernelExpr, i: int, j: int, z,
                         params: ParameterBinding | None = None) -> complex:
    """d-bar_i d_j log K at the diagonal pair (z, z).

    Computed as (K * K_ij - K_j * K_i) / K^2 with K_j = d_j K, K_i = dbar_i K
    and K_ij the mixed partial, all evaluated at (z, z).  Requires the
    diagonal value K(z, z) to be real and positive.
    """
    point = EvalPoint.diagonal(z)
    k0 = evaluate(kernel, point, params)
    if abs(k0.imag) > 1e-9 * (1 + abs(k0)) or k0.real <= 0:
        raise EvalDomainError(f"metric K(z,z) = {k0} is not positive at {z}")
    base = E.canonicalize(kernel)
    kj = diff_z(base, j)
    ki = diff_wb(base, i)
    kij = diff_wb(kj, i)
    vj = evaluate(kj, point, params)
    vi = evaluate(ki, point, params)
    vij = evaluate(kij, point, params)
    return (k0 * vij - vj * vi) / (k0 * k0)


# ---------------------------------------------------------------------------
# finite-difference oracle

def fd_mixed_derivative(kernel: KernelExpr, idx: DerivativeIndex, point: EvalPoint,
                        params: ParameterBinding | None = None,
                        step: float = 1e-4, dps: int = 40) -> complex:
    """Central finite-difference estimate of a mixed partial.

    z and w are perturbed as independent complex variables (a wb derivative
    perturbs w by a real step, which shifts conj(w) by the same amount).  The
    difference quotients are evaluated in mpmath working precision so the
    1/step^n roundoff amplification at higher orders stays harmless.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    params = params or {}
    _check_margin(kernel, point, params, 4 * step)
    m = point.dimension
    # one (slot, variable) entry per elementary derivative
    stack: list[tuple[str, int]] = []
    for i, n in enumerate(idx.z, start=1):
        stack += [("z", i)] * n
    for i, n in enumerate(idx.wb, start=1):
        stack += [("wb", i)] * n

    with mpmath.workdps(dps):
        h = mpmath.mpf(step)
        zc = [mpmath.mpc(c) for c in point.z]
        wbc = [mpmath.mpc(c.conjugate()) for c in point.w]

        def rec(depth: int, zv, wbv):
            if depth == len(stack):
                return _evaluate_mp(kernel, zv, wbv, params)
            slot, i = stack[depth]
            plus = list(zv), list(wbv)
            minus = list(zv), list(wbv)
            sel = 0 if slot == "z" else 1
            plus[sel][i - 1] += h
            minus[sel][i - 1] -= h
            return (rec(depth + 1, plus[0], plus[1])
                    - rec(depth + 1, minus[0], minus[1])) / (2 * h)

        out = rec(0, zc, wbc)
        return complex(out)


def _pow_nodes(e: KernelExpr, acc: list[KernelExpr]) -> None:
    if e.kind == "pow":
        acc.append(e)
    for a in e.args:
        _pow_nodes(a, acc)


def _check_margin(kernel: KernelExpr, point: EvalPoint,
                  params: ParameterBinding, margin: float) -> None:
    """Branch-sensitive pow bases must stay clear of the cut by ``margin``."""
    nodes: list[KernelExpr] = []
    _pow_nodes(E.canonicalize(kernel), nodes)
    for node in nodes:
        ex = evaluate(node.args[1], EvalPoint((), ()), params)
        base = evaluate(node.args[0], point, params)
        if not _is_integer(ex.real):
            if base.real <= margin:
                raise EvalDomainError(
                    f"insufficient domain margin: pow base Re = {base.real:.3g} <= {margin:.3g}")
        elif ex.real < 0 and abs(base) <= margin:
            raise EvalDomainError(
                f"insufficient domain margin: pow base |.| = {abs(base):.3g} <= {margin:.3g}")
