"""The rank-2 quotient of the weighted bi-disc module along the diagonal.

The weighted module on the bi-disc has reproducing kernel
(1 - z1 wb1)^(-lambda) (1 - z2 wb2)^(-mu); monomials are orthogonal with
||z1^a z2^b||^2 = 1 / (c_a(lambda) c_b(mu)), where c_n is the coefficient of
x^n in (1 - x)^(-lambda).  Compressing multiplication by the coordinates to
the complement of the functions vanishing to order 2 on the diagonal
{z1 = z2} yields a block weighted shift with 2 x 2 blocks.  Everything here
is computed twice: from closed forms and from a brute-force truncated
construction in the monomial basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr as E
from .calculus import (DerivativeIndex, EvalPoint, differentiate, diff_z,
                       evaluate, mixed_log_derivative)
from .expr import KernelExpr
from .geometry import jet_kernel

MAX_ORACLE_DEGREE = 60


@dataclass(frozen=True)
class ModuleParams:
    """Weights of the two disc factors; both must be positive."""

    lam: float
    mu: float

    def __post_init__(self):
        if self.lam <= 0 or self.mu <= 0:
            raise ValueError("weights lam, mu must be strictly positive")


@dataclass(frozen=True)
class GramData:
    """Degree-p Gram quantities of the order-2 jet generators."""

    p: int
    norm_g1_sq: float
    inner_g1_g2: float
    norm_g2_sq: float
    norm_f2_sq: float

    def __post_init__(self):
        if self.norm_g1_sq <= 0:
            raise ValueError("||g1||^2 must be positive")
        cs = self.inner_g1_g2 ** 2 - self.norm_g1_sq * self.norm_g2_sq
        if cs > 1e-9 * (1 + self.norm_g1_sq * self.norm_g2_sq):
            raise ValueError("Cauchy-Schwarz violated")


@dataclass(frozen=True)
class ShiftBlock:
    """Degree-p 2x2 blocks of the compressed coordinate multiplications."""

    p: int
    m1: np.ndarray
    m2: np.ndarray


@dataclass(frozen=True)
class HomogBundleParams:
    """Parameters of the homogeneous rank-2 bundle family on the bi-disc."""

    alpha: float
    delta: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0 or self.delta <= 0:
            raise ValueError("alpha and delta must be positive")
        if self.alpha * self.delta - self.beta ** 2 <= 0:
            raise ValueError("jet metric positivity requires alpha*delta - beta^2 > 0")


# ---------------------------------------------------------------------------
# weights

def binom_neg(lam: float, n: int) -> float:
    """Coefficient of x^n in (1 - x)^(-lam): lam(lam+1)...(lam+n-1)/n!.

    Zero for n < 0, one for n = 0.
    """
    if n < 0:
        return 0.0
    out = 1.0
    for i in range(n):
        out *= (lam + i) / (i + 1)
    return out


def gram_data(params: ModuleParams, p: int) -> GramData:
    """Closed-form Gram data at degree p."""
    if p < 0:
        raise ValueError("degree must be non-negative")
    s = params.lam + params.mu
    g1 = binom_neg(s, p)
    b = params.mu * binom_neg(s + 1, p - 1)
    c = params.mu * (binom_neg(s + 2, p - 1) + params.mu * binom_neg(s + 2, p - 2))
    f2 = g1 * (g1 * c - b * b)
    return GramData(p=p, norm_g1_sq=g1, inner_g1_g2=b, norm_g2_sq=c, norm_f2_sq=f2)


def gram_identity_residual(params: ModuleParams, p: int) -> float:
    """Relative defect of ||g1||^2 ||g2||^2 - <g1,g2>^2 against its closed form."""
    g = gram_data(params, p)
    lhs = g.norm_g1_sq * g.norm_g2_sq - g.inner_g1_g2 ** 2
    s = params.lam + params.mu
    rhs = (params.lam * params.mu / s) * binom_neg(s, p) * binom_neg(s + 2, p - 1)
    return abs(lhs - rhs) / (1 + abs(rhs))


def shift_blocks(params: ModuleParams, p: int) -> ShiftBlock:
    """Closed-form degree-p blocks of the compressed multiplications.

    The off-diagonal entry of the second block carries -sqrt(lam/mu) in place
    of sqrt(mu/lam); the diagonal entries agree.  (Confirmed against the
    brute-force construction; see tests.)
    """
    lam, mu = params.lam, params.mu
    s = lam + mu
    alpha = math.sqrt(binom_neg(s, p) / binom_neg(s, p + 1))
    x = math.sqrt(s + 1) / math.sqrt((s + p) * (s + p + 1))
    beta1 = math.sqrt(mu / lam) * x
    beta2 = -math.sqrt(lam / mu) * x
    eta_num, eta_den = binom_neg(s + 2, p - 1), binom_neg(s + 2, p)
    eta = math.sqrt(eta_num / eta_den)
    m1 = np.array([[alpha, 0.0], [beta1, eta]], dtype=complex)
    m2 = np.array([[alpha, 0.0], [beta2, eta]], dtype=complex)
    return ShiftBlock(p=p, m1=m1, m2=m2)


# ---------------------------------------------------------------------------
# brute-force truncated construction

@dataclass(frozen=True)
class BruteForceQuotient:
    """Orthonormal quotient basis and compressed operator blocks up to p_max.

    basis[p] is a pair of coefficient vectors over the monomials
    z1^(p-l) z2^l, l = 0..p; e2 at degree 0 is the zero vector.  blocks[p]
    holds the degree-p to degree-(p+1) block pair (m1, m2).
    """

    params: ModuleParams
    p_max: int
    basis: tuple[tuple[np.ndarray, np.ndarray], ...]
    gram: tuple[GramData, ...]
    blocks: tuple[ShiftBlock, ...]


def brute_force_quotient(params: ModuleParams, p_max: int) -> BruteForceQuotient:
    """Build basis and blocks from first principles in the monomial basis."""
    if p_max > MAX_ORACLE_DEGREE:
        raise ValueError(f"degree overflow: p_max must be <= {MAX_ORACLE_DEGREE}")
    lam, mu = params.lam, params.mu
    cl = [binom_neg(lam, n) for n in range(p_max + 2)]
    cm = [binom_neg(mu, n) for n in range(p_max + 2)]

    def weights(p: int) -> np.ndarray:
        # diagonal Gram of the monomials z1^(p-l) z2^l
        return np.array([1.0 / (cl[p - l] * cm[l]) for l in range(p + 1)])

    def inner(u: np.ndarray, v: np.ndarray, w: np.ndarray) -> complex:
        return complex(np.sum(u * np.conj(v) * w))

    basis: list[tuple[np.ndarray, np.ndarray]] = []
    gram: list[GramData] = []
    for p in range(p_max + 2):
        w = weights(p)
        g1 = np.array([cl[p - l] * cm[l] for l in range(p + 1)], dtype=complex)
        g2 = np.array([l * cl[p - l] * cm[l] for l in range(p + 1)], dtype=complex)
        a = -inner(g1, g1, w).real
        b = inner(g2, g1, w).real
        c = inner(g2, g2, w).real
        f2 = b * g1 + a * g2
        nf2 = inner(f2, f2, w).real
        e1 = g1 / math.sqrt(-a)
        e2 = f2 / math.sqrt(nf2) if nf2 > 0 else np.zeros_like(f2)
        basis.append((e1, e2))
        gram.append(GramData(p=p, norm_g1_sq=-a, inner_g1_g2=b,
                             norm_g2_sq=c, norm_f2_sq=nf2))

    def mult_z1(u: np.ndarray) -> np.ndarray:
        # z1 * z1^(p-l) z2^l keeps the z2-degree index l
        return np.concatenate([u, [0j]])

    def mult_z2(u: np.ndarray) -> np.ndarray:
        return np.concatenate([[0j], u])

    blocks: list[ShiftBlock] = []
    for p in range(p_max + 1):
        w = weights(p + 1)
        tgt1, tgt2 = basis[p + 1]
        mats = []
        for mult in (mult_z1, mult_z2):
            mat = np.zeros((2, 2), dtype=complex)
            for col, src in enumerate(basis[p]):
                img = mult(src)
                mat[0, col] = inner(img, tgt1, w)
                mat[1, col] = inner(img, tgt2, w)
            mats.append(mat)
        blocks.append(ShiftBlock(p=p, m1=mats[0], m2=mats[1]))

    return BruteForceQuotient(params=params, p_max=p_max,
                              basis=tuple(basis[: p_max + 1]),
                              gram=tuple(gram[: p_max + 1]),
                              blocks=tuple(blocks))


def assemble_operator(blocks, which: int, p_max: int | None = None) -> np.ndarray:
    """Full truncated block weighted shift from 2x2 blocks (which in {1, 2})."""
    blocks = list(blocks)
    if p_max is not None:
        blocks = blocks[:p_max]
    n = 2 * (len(blocks) + 1)
    out = np.zeros((n, n), dtype=complex)
    for p, blk in enumerate(blocks):
        mat = blk.m1 if which == 1 else blk.m2
        out[2 * (p + 1): 2 * (p + 2), 2 * p: 2 * (p + 1)] = mat
    return out


def shift_contraction_margin(params: ModuleParams, p_max: int = 25) -> float:
    """Largest singular value of the truncated compressed multiplication.

    Exploratory check only: observed <= 1 + 1e-10 when lam + mu >= 2.
    """
    blocks = [shift_blocks(params, p) for p in range(p_max + 1)]
    op = assemble_operator(blocks, 1)
    return float(np.linalg.svd(op, compute_uv=False)[0])


# ---------------------------------------------------------------------------
# kernels and restricted matrix kernel

def bidisc_kernel(lam: float, mu: float) -> KernelExpr:
    """(1 - z1 wb1)^(-lam) (1 - z2 wb2)^(-mu) with literal exponents."""
    return E.parse_kernel(f"(1 - z1*wb1)^(-{lam}) * (1 - z2*wb2)^(-{mu})", 2)


def bidisc_u_kernel(lam: float, mu: float) -> KernelExpr:
    """The same kernel in diagonal coordinates with the normal variable first.

    New variables (v1, v2) satisfy z1 = v1 + v2, z2 = v2 - v1, so the
    diagonal {z1 = z2} becomes the coordinate slice {v1 = 0} and v2 is the
    tangential coordinate u1.
    """
    return E.substitute_affine(bidisc_kernel(lam, mu), [[1, 1], [-1, 1]])


def quotient_kernel_restricted(params: ModuleParams, z: complex) -> np.ndarray:
    """Closed-form 2x2 matrix kernel of the quotient on the diagonal."""
    z = complex(z)
    t = abs(z) ** 2
    if t >= 1:
        raise ValueError("|z| must be < 1")
    lam, mu = params.lam, params.mu
    s = lam + mu
    k00 = (1 - t) ** (-s)
    k01 = mu * z * (1 - t) ** (-s - 1)
    # d/dt of t (1-t)^(-s-1)
    dtt = (1 - t) ** (-s - 1) + t * (s + 1) * (1 - t) ** (-s - 2)
    k11 = (mu ** 2 / s) * dtt + (mu * lam / s) * (1 - t) ** (-s - 2)
    return np.array([[k00, k01], [k01.conjugate(), k11]], dtype=complex)


def quotient_kernel_via_jets(params: ModuleParams, z: complex) -> np.ndarray:
    """The same matrix from the symbolic jet kernel.

    The diagonal's normal derivative acts through the second coordinate, so
    the jet engine (which always differentiates z1) sees the factors in
    swapped order.
    """
    swapped = bidisc_kernel(params.mu, params.lam)
    return jet_kernel(swapped, 2, EvalPoint.diagonal((z, z))).matrix


def jet_frame_image(params: ModuleParams, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Images of the degree-p orthonormal vectors under the jet map.

    Returns two coefficient pairs (a, b): the image is (a z^p, b z^(p-1)) for
    the first vector and (0, b z^(p-1)) for the second.
    """
    lam, mu = params.lam, params.mu
    s = lam + mu
    e1 = np.array([
        math.sqrt(binom_neg(s, p)),
        mu * math.sqrt(p / s) * math.sqrt(binom_neg(s + 1, p - 1)),
    ])
    e2 = np.array([0.0, math.sqrt(lam * mu / s) * math.sqrt(binom_neg(s + 2, p - 1))])
    return e1, e2


def quotient_kernel_series(params: ModuleParams, z: complex, p_max: int) -> np.ndarray:
    """Partial sum of the frame-image rank-one expansion of the matrix kernel."""
    z = complex(z)
    out = np.zeros((2, 2), dtype=complex)
    for p in range(p_max + 1):
        c1, c2 = jet_frame_image(params, p)
        zp = z ** p
        zp1 = z ** (p - 1) if p >= 1 else 0j
        for coeff in (c1, c2):
            vec = np.array([coeff[0] * zp, coeff[1] * zp1])
            out += np.outer(vec, vec.conj())
    return out


# ---------------------------------------------------------------------------
# homogeneity

def _mobius_inverse(a: complex, theta: float):
    """Inverse of z -> e^(i theta) (z - a) / (1 - conj(a) z) and its derivative."""
    phase = complex(math.cos(theta), -math.sin(theta))  # e^(-i theta)

    def inv(zv: complex) -> complex:
        return (phase * zv + a) / (1 + a.conjugate() * phase * zv)

    def dinv(zv: complex) -> complex:
        return phase * (1 - abs(a) ** 2) / (1 + a.conjugate() * phase * zv) ** 2

    return inv, dinv


def mobius_pullback_curvature(curv_field, a1: complex, a2: complex,
                              th1: float, th2: float, z) -> np.ndarray:
    """Congruence transform of a curvature field by a pair of disc automorphisms.

    Returns D(phi^-1)(z)* curv(phi^-1(z)) D(phi^-1)(z) with the diagonal
    Jacobian of the componentwise inverse map.
    """
    inv1, dinv1 = _mobius_inverse(complex(a1), th1)
    inv2, dinv2 = _mobius_inverse(complex(a2), th2)
    z = tuple(complex(c) for c in z)
    pre = (inv1(z[0]), inv2(z[1]))
    jac = np.diag([dinv1(z[0]), dinv2(z[1])])
    base = np.asarray(curv_field(pre), dtype=complex)
    return jac.conj().T @ base @ jac


def homog_bundle_metric(hb: HomogBundleParams) -> KernelExpr:
    """Sesqui-holomorphic metric of the homogeneous rank-2 bundle family.

    (1 - z1 wb2)^(-beta) (1 - z2 wb1)^(-beta) (1 - z1 wb1)^(-alpha)
    (1 - z2 wb2)^(-delta); the diagonal is the squared frame norm with
    modulus factor |1 - w1 conj(w2)|^(-2 beta), written as a product of two
    sesqui-holomorphic factors rather than an abs node.  The family is
    symmetric under beta -> -beta; this orientation puts +2 beta on the
    tangential diagonal of the restricted curvature, so the parameters here
    are exactly the ones reported by :func:`homog_curvature_restriction`.
    """
    nb = -hb.beta
    cross = f"({nb})" if nb < 0 else f"{nb}"
    text = (f"(1 - z1*wb2)^{cross} * (1 - z2*wb1)^{cross}"
            f" * (1 - z1*wb1)^(-{hb.alpha}) * (1 - z2*wb2)^(-{hb.delta})")
    return E.parse_kernel(text, 2)


def homog_u_metric(hb: HomogBundleParams) -> KernelExpr:
    """The homogeneous metric in diagonal coordinates, normal variable first."""
    return E.substitute_affine(homog_bundle_metric(hb), [[1, 1], [-1, 1]])


def homog_curvature_restriction(hb: HomogBundleParams, u1: complex) -> np.ndarray:
    """Closed-form curvature restriction in (u1, u2) ordering at (u1, 0)."""
    u1 = complex(u1)
    if abs(u1) >= 1:
        raise ValueError("|u1| must be < 1")
    a, d, b = hb.alpha, hb.delta, hb.beta
    scale = (1 - abs(u1) ** 2) ** -2
    return scale * np.array([[a + d + 2 * b, a - d], [a - d, a + d - 2 * b]],
                            dtype=float)


def homog_curvature_symbolic(hb: HomogBundleParams, u1: complex) -> np.ndarray:
    """Curvature of the diagonal-coordinate metric at (0, u1), reindexed to (u1, u2)."""
    ku = homog_u_metric(hb)
    mat = np.empty((2, 2), dtype=complex)
    z0 = (0j, complex(u1))
    for i in (1, 2):
        for j in (1, 2):
            mat[i - 1, j - 1] = mixed_log_derivative(ku, i, j, z0)
    return mat[::-1, ::-1]  # swap (v1, v2) = (u2, u1) back to (u1, u2) order


def solve_homog_metric_coeffs(a: float, b: float, c: float, u1: complex) -> dict[str, complex]:
    """Normal-expansion metric coefficients reproducing a prescribed restriction.

    a00 = (1-|u1|^2)^(-a), a10 = b conj(u1) (1-|u1|^2)^(-a-1),
    a11 = a00 (1-|u1|^2)^(-2) (c + b^2 |u1|^2).
    """
    u1 = complex(u1)
    t = abs(u1) ** 2
    if t >= 1:
        raise ValueError("|u1| must be < 1")
    a00 = (1 - t) ** (-a)
    a10 = b * u1.conjugate() * (1 - t) ** (-a - 1)
    a11 = a00 * (1 - t) ** (-2) * (c + b * b * t)
    return {"a00": complex(a00), "a10": complex(a10), "a11": complex(a11)}


def homog_coeff_reconstruction(a: float, b: float, c: float, u1: complex) -> dict[str, float]:
    """Residuals of the three curvature relations against prescribed (a, b, c).

    The first relation is checked symbolically through the one-variable
    metric (1 - z1 wb1)^(-a); the other two by direct arithmetic on the
    closed-form coefficients.
    """
    u1 = complex(u1)
    t = abs(u1) ** 2
    scale = (1 - t) ** -2
    coeffs = solve_homog_metric_coeffs(a, b, c, u1)
    a00, a10, a11 = coeffs["a00"], coeffs["a10"], coeffs["a11"]

    a00_expr = E.parse_kernel(f"(1 - z1*wb1)^(-{a})", 1)
    r11 = abs(mixed_log_derivative(a00_expr, 1, 1, (u1,)) - a * scale)

    # d-bar_1 of the closed forms in the tangential variable
    da00 = a * u1 * (1 - t) ** (-a - 1)
    da10 = b * (1 - t) ** (-a - 1) + b * t * (a + 1) * (1 - t) ** (-a - 2)
    r12 = abs((a00 * da10 - a10 * da00) / a00 ** 2 - b * scale)
    r22 = abs((a11 * a00 - abs(a10) ** 2) / a00 ** 2 - c * scale)
    return {"r11": float(r11), "r12": float(r12), "r22": float(r22)}


# ---------------------------------------------------------------------------
# truncated reproducing-property checks

def truncated_kernel_check(params: ModuleParams, degree_cap: int, z, w) -> dict[str, float]:
    """Residuals of the truncated kernel expansion and the eigenvector relation.

    Compares sum_{a,b <= cap} c_a c_b (z1 conj(w1))^a (z2 conj(w2))^b with the
    closed form, and checks M_i* applied to the coefficient vector of K(., w)
    against conj(w_i) times that vector away from the truncation boundary.
    """
    if degree_cap < 1:
        raise ValueError("degree cap must be positive")
    z = tuple(complex(c) for c in z)
    w = tuple(complex(c) for c in w)
    lam, mu = params.lam, params.mu
    cl = np.array([binom_neg(lam, n) for n in range(degree_cap + 1)])
    cm = np.array([binom_neg(mu, n) for n in range(degree_cap + 1)])

    x1, x2 = z[0] * w[0].conjugate(), z[1] * w[1].conjugate()
    p1 = cl * np.array([x1 ** n for n in range(degree_cap + 1)])
    p2 = cm * np.array([x2 ** n for n in range(degree_cap + 1)])
    series = complex(p1.sum() * p2.sum())
    closed = (1 - x1) ** (-lam) * (1 - x2) ** (-mu)
    kernel_resid = abs(series - closed)

    # coefficient vector of K(., w) in the orthonormal monomial basis
    sq1 = np.sqrt(cl) * np.array([w[0].conjugate() ** n for n in range(degree_cap + 1)])
    sq2 = np.sqrt(cm) * np.array([w[1].conjugate() ** n for n in range(degree_cap + 1)])
    vec = np.outer(sq1, sq2)
    # adjoint of multiplication by z1 shifts down the first index
    shift1 = np.sqrt(cl[:-1] / cl[1:])
    adj1 = np.zeros_like(vec)
    adj1[:-1, :] = shift1[:, None] * vec[1:, :]
    shift2 = np.sqrt(cm[:-1] / cm[1:])
    adj2 = np.zeros_like(vec)
    adj2[:, :-1] = shift2[None, :] * vec[:, 1:]
    interior = degree_cap // 2
    r1 = np.max(np.abs(adj1 - w[0].conjugate() * vec)[:interior, :interior])
    r2 = np.max(np.abs(adj2 - w[1].conjugate() * vec)[:interior, :interior])
    return {"kernel": float(kernel_resid), "eigen": float(max(r1, r2))}


# ---------------------------------------------------------------------------
# module action on the truncated quotient

def _taylor_coeffs(f: KernelExpr, n: int, params=None) -> list[complex]:
    """Taylor coefficients at 0 of a one-variable holomorphic expression."""
    if E.contains_var(f, "wb") or E.max_var_index(f) > 1:
        raise ValueError("expected a holomorphic expression in one variable")
    origin = EvalPoint.diagonal((0j,))
    out = []
    d = E.canonicalize(f)
    for p in range(n):
        out.append(evaluate(d, origin, params) / math.factorial(p))
        d = diff_z(d, 1)
    return out


def quotient_module_action(f0: KernelExpr, f1: KernelExpr, params: ModuleParams,
                           p_max: int, bindings=None) -> np.ndarray:
    """Assemble f0(U) + f1(U) N on the truncated quotient basis.

    U is the compressed multiplication by the tangential coordinate
    (u1 = (z1 + z2)/2), N the nilpotent compressed normal coordinate
    (u2 = (z1 - z2)/2); f0, f1 are one-variable holomorphic expressions whose
    Taylor expansions at 0 are used through the truncation degree.  The basis
    covers degrees 0..p_max.
    """
    blocks = [shift_blocks(params, p) for p in range(p_max)]
    m1 = assemble_operator(blocks, 1)
    m2 = assemble_operator(blocks, 2)
    u = (m1 + m2) / 2
    nil = (m1 - m2) / 2
    dim = u.shape[0]

    def poly(fm: KernelExpr) -> np.ndarray:
        coeffs = _taylor_coeffs(fm, dim, bindings)
        out = np.zeros((dim, dim), dtype=complex)
        acc = np.eye(dim, dtype=complex)
        for c in coeffs:
            if c != 0:
                out += c * acc
            acc = acc @ u
            if not acc.any():
                break
        return out

    return poly(f0) + poly(f1) @ nil


def compress_polynomial_action(f: KernelExpr, params: ModuleParams,
                               p_max: int, bindings=None) -> np.ndarray:
    """Direct compression of multiplication by a polynomial f(z1, z2).

    Brute-force oracle for :func:`quotient_module_action`: multiplies each
    quotient basis vector by f in the monomial basis and projects back.
    """
    bf = brute_force_quotient(params, p_max + 1)
    lam, mu = params.lam, params.mu
    cl = [binom_neg(lam, n) for n in range(p_max + 2)]
    cm = [binom_neg(mu, n) for n in range(p_max + 2)]

    # f as monomial coefficients for z1^a z2^b, degree a + b <= p_max + 1
    fc: dict[tuple[int, int], complex] = {}
    origin = EvalPoint.diagonal((0j, 0j))
    work = E.canonicalize(f)
    for deg in range(p_max + 2):
        for a in range(deg + 1):
            b = deg - a
            d = differentiate(work, DerivativeIndex((a, b), (0, 0)), cap=2 * (p_max + 2))
            val = evaluate(d, origin, bindings) / (math.factorial(a) * math.factorial(b))
            if val != 0:
                fc[(a, b)] = val

    def mono_coeffs(p: int, vec: np.ndarray) -> dict[tuple[int, int], complex]:
        return {(p - l, l): vec[l] for l in range(p + 1) if vec[l] != 0}

    def project(poly: dict[tuple[int, int], complex], q: int, tgt: np.ndarray) -> complex:
        w = [1.0 / (cl[q - l] * cm[l]) for l in range(q + 1)]
        out = 0j
        for l in range(q + 1):
            coeff = poly.get((q - l, l), 0j)
            if coeff:
                out += coeff * tgt[l].conjugate() * w[l]
        return out

    dim = 2 * (p_max + 1)
    out = np.zeros((dim, dim), dtype=complex)
    for p in range(p_max + 1):
        for col_idx, src in enumerate(bf.basis[p]):
            prod: dict[tuple[int, int], complex] = {}
            for (a, b), cf in fc.items():
                for (sa, sb), sv in mono_coeffs(p, src).items():
                    key = (a + sa, b + sb)
                    prod[key] = prod.get(key, 0j) + cf * sv
            for q in range(p_max + 1):
                tgt1, tgt2 = bf.basis[q]
                qpoly = {k: v for k, v in prod.items() if sum(k) == q}
                if not qpoly:
                    continue
                out[2 * q, 2 * p + col_idx] = project(qpoly, q, tgt1)
                out[2 * q + 1, 2 * p + col_idx] = project(qpoly, q, tgt2)
    return out
