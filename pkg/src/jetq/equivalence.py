"""Order-k equivalence of hermitian metrics along the slice {z1 = 0}.

Two positive metrics rho and rho-tilde are equivalent to order k when the
k x k array of mixed differential operators (tangential block, mixed
normal/tangential vectors, and the pure-normal scalar block) annihilates
log(rho-tilde / rho) on the hypersurface.  Vanishing is decided numerically
on a sample grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as E
from .calculus import (EvalDomainError, EvalPoint, ParameterBinding, diff_wb,
                       diff_z, evaluate)
from .expr import KernelExpr
from .geometry import CurvatureSplit, curvature_matrix, curvature_split, jet_kernel

DEFAULT_TOL = 1e-8
DEFAULT_SEED = 0x6A657471
DEFAULT_RADII = (0.0, 0.15, 0.3, 0.45, 0.6)


@dataclass(frozen=True)
class DkResult:
    """Evaluation of the k x k operator array on a function at (0, z')."""

    tan_block: np.ndarray                  # (m-1, m-1), from dbar' d'
    row_vectors: tuple[np.ndarray, ...]    # j = 1..k-1, from dbar' d1^j
    col_vectors: tuple[np.ndarray, ...]    # i = 1..k-1, from dbar1^i d'
    scalar_block: np.ndarray               # (k-1, k-1), from dbar1^i d1^j
    zprime: tuple[complex, ...]

    def max_abs(self) -> dict[str, float]:
        def mx(a) -> float:
            arrs = a if isinstance(a, tuple) else (a,)
            vals = [np.max(np.abs(x)) for x in arrs if x.size]
            return float(max(vals)) if vals else 0.0
        return {
            "tan": mx(self.tan_block),
            "rows": mx(self.row_vectors),
            "cols": mx(self.col_vectors),
            "scalar": mx(self.scalar_block),
        }


@dataclass(frozen=True)
class EquivalenceReport:
    verdict: str                       # "equivalent" | "not-equivalent"
    residuals: dict[str, float]        # per-block maxima over all samples
    samples: tuple[tuple[complex, ...], ...]
    tol: float
    order: int
    per_sample: tuple[dict[str, float], ...] = field(default=())

    @property
    def equivalent(self) -> bool:
        return self.verdict == "equivalent"

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0


def default_hypersurface_samples(m: int, radius: float = 0.6, n_random: int = 4,
                                 seed: int = DEFAULT_SEED) -> list[tuple[complex, ...]]:
    """Deterministic tangential sample grid: real radii plus seeded complex points."""
    if m < 1:
        raise ValueError("dimension must be >= 1")
    if m == 1:
        return [()]
    radii = [r * radius / DEFAULT_RADII[-1] for r in DEFAULT_RADII]
    pts = [tuple(complex(r) for _ in range(m - 1)) for r in radii]
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        mod = rng.uniform(0.1, radius, size=m - 1)
        arg = rng.uniform(0, 2 * math.pi, size=m - 1)
        pts.append(tuple(mod * np.exp(1j * arg)))
    return pts


def _surface_point(zprime) -> EvalPoint:
    return EvalPoint.diagonal((0j,) + tuple(complex(c) for c in zprime))


def dk_apply(kernel_new: KernelExpr, kernel_ref: KernelExpr, k: int, zprime,
             params: ParameterBinding | None = None) -> DkResult:
    """Apply the order-k operator array to log(rho_new / rho_ref) at (0, z').

    Both metrics are kernel diagonals and must be positive at the sample.
    """
    if k < 1:
        raise ValueError("order must be >= 1")
    zprime = tuple(complex(c) for c in zprime)
    m = len(zprime) + 1
    point = _surface_point(zprime)
    for kern in (kernel_new, kernel_ref):
        val = evaluate(kern, point, params)
        if val.real <= 0 or abs(val.imag) > 1e-9 * (1 + abs(val)):
            raise EvalDomainError(f"metric is not positive at {point.z}")

    g = E.cadd(E.clog(E.canonicalize(kernel_new)),
               E.cneg(E.clog(E.canonicalize(kernel_ref))))

    # normal z-derivatives g, d1 g, d1^2 g, ...
    gz = [g]
    for _ in range(k - 1):
        gz.append(diff_z(gz[-1], 1))
    # then normal wb-derivatives of each
    gzw = []
    for col in gz:
        row = [col]
        for _ in range(k - 1):
            row.append(diff_wb(row[-1], 1))
        gzw.append(row)

    def ev(e: KernelExpr) -> complex:
        return evaluate(e, point, params)

    tan = np.empty((m - 1, m - 1), dtype=complex)
    for i in range(2, m + 1):
        for j in range(2, m + 1):
            tan[i - 2, j - 2] = ev(diff_wb(diff_z(g, j), i))

    rows = tuple(
        np.array([ev(diff_wb(gz[j], i)) for i in range(2, m + 1)], dtype=complex)
        for j in range(1, k))
    cols = tuple(
        np.array([ev(diff_z(gzw[0][i], j)) for j in range(2, m + 1)], dtype=complex)
        for i in range(1, k))

    scalar = np.empty((k - 1, k - 1), dtype=complex)
    for i in range(1, k):
        for j in range(1, k):
            scalar[i - 1, j - 1] = ev(gzw[j][i])

    return DkResult(tan_block=tan, row_vectors=rows, col_vectors=cols,
                    scalar_block=scalar, zprime=zprime)


def order_k_equivalent(kernel_a: KernelExpr, kernel_b: KernelExpr, k: int,
                       samples=None, tol: float = DEFAULT_TOL,
                       params: ParameterBinding | None = None,
                       dimension: int | None = None) -> EquivalenceReport:
    """Decide order-k equivalence of two metrics on a hypersurface sample grid."""
    if dimension is None:
        dimension = max(E.max_var_index(kernel_a), E.max_var_index(kernel_b), 1)
    if samples is None:
        samples = default_hypersurface_samples(dimension)
    samples = [tuple(complex(c) for c in s) for s in samples]
    if not samples:
        raise ValueError("at least one sample point is required")

    per_sample = []
    worst: dict[str, float] = {}
    for s in samples:
        res = dk_apply(kernel_b, kernel_a, k, s, params).max_abs()
        per_sample.append(res)
        for key, val in res.items():
            worst[key] = max(worst.get(key, 0.0), val)
    verdict = "equivalent" if max(worst.values()) <= tol else "not-equivalent"
    return EquivalenceReport(verdict=verdict, residuals=worst,
                             samples=tuple(samples), tol=tol, order=k,
                             per_sample=tuple(per_sample))


def rank2_invariants(kernel: KernelExpr, zprime,
                     params: ParameterBinding | None = None) -> CurvatureSplit:
    """The invariant triple {tan, trans, angle} at a hypersurface point."""
    zprime = tuple(complex(c) for c in zprime)
    if not zprime:
        raise ValueError("no tangential directions exist in dimension 1")
    z0 = (0j,) + zprime
    return curvature_split(curvature_matrix(kernel, z0, params))


# ---------------------------------------------------------------------------
# Toeplitz congruence and intertwining

def _toeplitz(values: list[complex], k: int) -> np.ndarray:
    mat = np.zeros((k, k), dtype=complex)
    for p, v in enumerate(values[:k]):
        for l in range(k - p):
            mat[l + p, l] = v
    return mat


def _taylor_normalized(jet: np.ndarray) -> np.ndarray:
    """Rescale a raw-derivative jet matrix to Taylor coefficients."""
    k = jet.shape[0]
    d = np.array([1 / math.factorial(n) for n in range(k)])
    return jet * np.outer(d, d)


def toeplitz_congruence_check(kernel_new: KernelExpr, kernel_ref: KernelExpr,
                              psi_coeffs, k: int, zprime,
                              params: ParameterBinding | None = None) -> float:
    """Residual of J(rho_new) = Psi J(rho_ref) Psi* at (0, z').

    psi_coeffs are holomorphic expressions (or scalars) for the sub-diagonal
    generators psi_0..; jet matrices are compared in Taylor-coefficient
    normalization, where the congruence is exactly Toeplitz.
    """
    zprime = tuple(complex(c) for c in zprime)
    point = _surface_point(zprime)
    psi_vals = [evaluate(c, point, params) if isinstance(c, KernelExpr) else complex(c)
                for c in psi_coeffs]
    if not psi_vals or psi_vals[0] == 0:
        raise ValueError("psi_0 must be non-vanishing at the sample")
    psi = _toeplitz(psi_vals, k)
    j_new = _taylor_normalized(jet_kernel(kernel_new, k, point, params).matrix)
    j_ref = _taylor_normalized(jet_kernel(kernel_ref, k, point, params).matrix)
    return float(np.max(np.abs(j_new - psi @ j_ref @ psi.conj().T)))


def intertwine_check(psi_coeffs, f: KernelExpr, k: int, z,
                     params: ParameterBinding | None = None) -> float:
    """Residual of Psi Jf - Jf Psi with both factors Toeplitz-assembled.

    The module symbol f enters through the Taylor coefficients of its normal
    derivatives at z, matching the normalization of the congruence check.
    """
    point = EvalPoint.diagonal(z)
    psi_vals = [evaluate(c, point, params) if isinstance(c, KernelExpr) else complex(c)
                for c in psi_coeffs]
    psi = _toeplitz(psi_vals, k)
    derivs = [E.canonicalize(f)]
    for _ in range(k - 1):
        derivs.append(diff_z(derivs[-1], 1))
    f_vals = [evaluate(d, point, params) / math.factorial(p)
              for p, d in enumerate(derivs)]
    jf = _toeplitz(f_vals, k)
    return float(np.max(np.abs(psi @ jf - jf @ psi)))


def rank2_metric_relations(h00, h10, h01, h11, alpha, beta, zprime=(),
                           params: ParameterBinding | None = None) -> dict[str, complex]:
    """Transform order-2 metric coefficients by the holomorphic pair (alpha, beta).

    h00 -> |a|^2 h00,  h10 -> |a|^2 (h10 + b h00),  h01 -> |a|^2 (h01 + conj(b) h00),
    h11 -> |a|^2 (h11 + conj(b) h10 + b h01 + |b|^2 h00).
    """
    point = _surface_point(zprime)

    def val(x) -> complex:
        return evaluate(x, point, params) if isinstance(x, KernelExpr) else complex(x)

    a, b = val(alpha), val(beta)
    h00, h10, h01, h11 = map(complex, (h00, h10, h01, h11))
    if h00.real <= 0:
        raise ValueError("h00 must be positive")
    aa = abs(a) ** 2
    return {
        "h00": aa * h00,
        "h10": aa * (h10 + b * h00),
        "h01": aa * (h01 + b.conjugate() * h00),
        "h11": aa * (h11 + b.conjugate() * h10 + b * h01 + abs(b) ** 2 * h00),
    }
