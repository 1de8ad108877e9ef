"""Jet kernels, Toeplitz jet matrices, curvature and its hypersurface split.

The hypersurface is always the coordinate slice {z1 = 0}; all jets are taken
in the normal direction z1.  Kernels stated in other coordinates are brought
into this form with :func:`jetq.expr.substitute_affine`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import expr as E
from .calculus import (EvalDomainError, EvalPoint, ParameterBinding, diff_wb,
                       diff_z, evaluate, mixed_log_derivative)
from .expr import KernelExpr


@dataclass(frozen=True)
class MatrixKernelValue:
    """k x k jet kernel matrix (entry (l, j) = d1^l dbar1^j K) at a point pair."""

    matrix: np.ndarray
    order: int
    point: EvalPoint

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


@dataclass(frozen=True)
class CurvatureSplit:
    """Blocks of the curvature coefficient matrix at a hypersurface point.

    trans is the (1,1) coefficient, tan the tangential (2..m) block and
    angle the (1, j) row entries for j = 2..m.
    """

    tan: np.ndarray
    trans: float
    angle: np.ndarray

    def assemble(self) -> np.ndarray:
        m = self.tan.shape[0] + 1
        full = np.zeros((m, m), dtype=complex)
        full[0, 0] = self.trans
        full[0, 1:] = self.angle
        full[1:, 0] = np.conj(self.angle)
        full[1:, 1:] = self.tan
        return full


@dataclass(frozen=True)
class ConnectionMatrix:
    """2 x 2 matrix of 1-forms: dz and dz-bar coefficient arrays per entry."""

    dz: np.ndarray      # shape (2, 2, m)
    dzbar: np.ndarray   # shape (2, 2, m)

    def compatibility_defect(self) -> float:
        """Max entry of theta + theta* (zero for a metric connection)."""
        # conjugating a form swaps dz and dz-bar coefficients
        star_dz = np.conj(np.swapaxes(self.dzbar, 0, 1))
        star_dzbar = np.conj(np.swapaxes(self.dz, 0, 1))
        return float(max(np.max(np.abs(self.dz + star_dz)),
                         np.max(np.abs(self.dzbar + star_dzbar))))


@lru_cache(maxsize=256)
def _jet_table(kernel: KernelExpr, k: int) -> tuple[tuple[KernelExpr, ...], ...]:
    """Derivative trees d1^l dbar1^j kernel for 0 <= l, j < k."""
    rows = []
    row0 = E.canonicalize(kernel)
    for _ in range(k):
        row = [row0]
        for _ in range(k - 1):
            row.append(diff_wb(row[-1], 1))
        rows.append(tuple(row))
        row0 = diff_z(row0, 1)
    return tuple(rows)


def jet_kernel(kernel: KernelExpr, k: int, point: EvalPoint,
               params: ParameterBinding | None = None) -> MatrixKernelValue:
    """Order-k jet kernel matrix at a point pair."""
    if k < 1:
        raise ValueError("jet order must be at least 1")
    table = _jet_table(kernel, k)
    mat = np.empty((k, k), dtype=complex)
    for l in range(k):
        for j in range(k):
            mat[l, j] = evaluate(table[l][j], point, params)
    return MatrixKernelValue(mat, k, point)


def jet_metric(kernel: KernelExpr, k: int, z,
               params: ParameterBinding | None = None) -> np.ndarray:
    """Jet kernel at the diagonal pair (z, z): the hermitian jet metric."""
    return jet_kernel(kernel, k, EvalPoint.diagonal(z), params).matrix


def toeplitz_jet_matrix(f: KernelExpr, k: int, z,
                        params: ParameterBinding | None = None) -> np.ndarray:
    """Lower triangular matrix with entry (l, j) = binom(l, j) d1^(l-j) f(z)."""
    if E.contains_var(f, "wb"):
        raise ValueError("jet matrices are defined for holomorphic symbols only")
    point = EvalPoint.diagonal(z)
    derivs = [E.canonicalize(f)]
    for _ in range(k - 1):
        derivs.append(diff_z(derivs[-1], 1))
    vals = [evaluate(d, point, params) for d in derivs]
    mat = np.zeros((k, k), dtype=complex)
    for l in range(k):
        for j in range(l + 1):
            mat[l, j] = math.comb(l, j) * vals[l - j]
    return mat


def curvature_matrix(kernel: KernelExpr, z,
                     params: ParameterBinding | None = None) -> np.ndarray:
    """Coefficient matrix [dbar_i d_j log K](z, z); hermitian for K(z,z) > 0."""
    m = len(z)
    mat = np.empty((m, m), dtype=complex)
    for i in range(1, m + 1):
        for j in range(i, m + 1):
            mat[i - 1, j - 1] = mixed_log_derivative(kernel, i, j, z, params)
            if j != i:
                mat[j - 1, i - 1] = mat[i - 1, j - 1].conjugate()
    return mat


def curvature_split(full: np.ndarray) -> CurvatureSplit:
    """Split a hermitian coefficient matrix into trans, tan and angle blocks."""
    full = np.asarray(full, dtype=complex)
    if full.ndim != 2 or full.shape[0] != full.shape[1]:
        raise ValueError("curvature matrix must be square")
    if np.max(np.abs(full - full.conj().T)) > 1e-8 * (1 + np.max(np.abs(full))):
        raise ValueError("curvature matrix must be hermitian")
    return CurvatureSplit(tan=full[1:, 1:].copy(),
                          trans=float(full[0, 0].real),
                          angle=full[0, 1:].copy())


def second_fundamental_form(kernel: KernelExpr, z,
                            params: ParameterBinding | None = None) -> np.ndarray:
    """Components -dbar_i(d1 log h) / sqrt(d1 dbar1 log h) at (z, z), i = 1..m."""
    m = len(z)
    trans = mixed_log_derivative(kernel, 1, 1, z, params)
    if trans.real <= 0 or abs(trans.imag) > 1e-9 * (1 + abs(trans)):
        raise EvalDomainError(f"transverse curvature {trans} is not positive at {z}")
    root = math.sqrt(trans.real)
    out = np.empty(m, dtype=complex)
    out[0] = -trans / root
    for i in range(2, m + 1):
        out[i - 1] = -mixed_log_derivative(kernel, i, 1, z, params) / root
    return out


def secfund_from_split(split: CurvatureSplit) -> np.ndarray:
    """Reassemble the second fundamental form from the curvature blocks.

    Uses hermiticity of the coefficient matrix: dbar_i d1 log h is the
    conjugate of the angle entry (1, i).
    """
    if split.trans <= 0:
        raise EvalDomainError("transverse curvature must be positive")
    root = math.sqrt(split.trans)
    return np.concatenate(([-split.trans / root],
                           -np.conj(split.angle) / root)).astype(complex)


def _log_derivative_expr(kernel: KernelExpr) -> dict[str, KernelExpr]:
    """Symbolic d1 log K, dbar1 log K and d1 dbar1 log K as expressions."""
    k0 = E.canonicalize(kernel)
    kz = diff_z(k0, 1)
    kw = diff_wb(k0, 1)
    kzw = diff_wb(kz, 1)
    inv = E.cpow(k0, E.const(-1))
    inv2 = E.cpow(k0, E.const(-2))
    return {
        "d1": E.cmul(kz, inv),
        "dbar1": E.cmul(kw, inv),
        "d1dbar1": E.cadd(E.cmul(kzw, inv), E.cneg(E.cmul(kz, kw, inv2))),
    }


def connection_matrix(kernel: KernelExpr, z,
                      params: ParameterBinding | None = None) -> ConnectionMatrix:
    """Canonical connection of the order-2 jet inclusion in an orthonormal frame.

    theta11 = (d - dbar) log h / 2
    theta12 = -dbar(d1 log h) / sqrt(d1 dbar1 log h)
    theta21 = d(dbar1 log h) / sqrt(d1 dbar1 log h)
    theta22 = (d - dbar)(h * d1 dbar1 log h) / (2 h * d1 dbar1 log h)
    """
    m = len(z)
    point = EvalPoint.diagonal(z)
    k0 = E.canonicalize(kernel)
    parts = _log_derivative_expr(kernel)

    h = evaluate(k0, point, params)
    if abs(h.imag) > 1e-9 * (1 + abs(h)) or h.real <= 0:
        raise EvalDomainError(f"metric K(z,z) = {h} is not positive at {z}")
    c11 = evaluate(parts["d1dbar1"], point, params)
    if c11.real <= 0:
        raise EvalDomainError("transverse curvature must be positive")
    root = math.sqrt(c11.real)

    g = E.cmul(k0, parts["d1dbar1"])  # h * d1 dbar1 log h as an expression
    gval = h * c11

    dz = np.zeros((2, 2, m), dtype=complex)
    dzbar = np.zeros((2, 2, m), dtype=complex)
    for i in range(1, m + 1):
        dlog_i = evaluate(diff_z(k0, i), point, params) / h
        dbarlog_i = evaluate(diff_wb(k0, i), point, params) / h
        dz[0, 0, i - 1] = 0.5 * dlog_i
        dzbar[0, 0, i - 1] = -0.5 * dbarlog_i
        dzbar[0, 1, i - 1] = -evaluate(diff_wb(parts["d1"], i), point, params) / root
        dz[1, 0, i - 1] = evaluate(diff_z(parts["dbar1"], i), point, params) / root
        dz[1, 1, i - 1] = 0.5 * evaluate(diff_z(g, i), point, params) / gval
        dzbar[1, 1, i - 1] = -0.5 * evaluate(diff_wb(g, i), point, params) / gval
    return ConnectionMatrix(dz=dz, dzbar=dzbar)


def frame_change_check(g: KernelExpr, s_kernel: KernelExpr, k: int, point: EvalPoint,
                       params: ParameterBinding | None = None) -> tuple[bool, float]:
    """Verify the jet frame-change rule [d1^l (g s)] = (jet matrix of g) [d1^l s].

    Returns (holds within 1e-10, max residual).  g must be holomorphic.
    """
    if E.contains_var(g, "wb"):
        raise ValueError("frame changes are by holomorphic functions")
    gval = evaluate(g, point, params)
    if gval == 0:
        raise EvalDomainError("frame change must be non-vanishing at the point")
    prod = E.canonicalize(E.mul(g, s_kernel))
    left = np.empty(k, dtype=complex)
    right_vec = np.empty(k, dtype=complex)
    dp, ds = prod, E.canonicalize(s_kernel)
    for l in range(k):
        left[l] = evaluate(dp, point, params)
        right_vec[l] = evaluate(ds, point, params)
        dp = diff_z(dp, 1)
        ds = diff_z(ds, 1)
    jg = toeplitz_jet_matrix(g, k, point.z, params)
    resid = float(np.max(np.abs(left - jg @ right_vec)))
    return resid <= 1e-10, resid
