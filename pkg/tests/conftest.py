"""Shared generators for randomized kernel tests.

All kernels produced here are analytic on the closed polydisc of radius 0.45
with every pow base staying well inside the right half plane, so symbolic and
finite-difference evaluation are both safe.
"""

from __future__ import annotations

import numpy as np

from jetq import expr as E
from jetq.expr import KernelExpr


def random_point(rng: np.random.Generator, m: int, radius: float = 0.4) -> tuple:
    mod = rng.uniform(0.05, radius, size=m)
    arg = rng.uniform(0, 2 * np.pi, size=m)
    return tuple(mod * np.exp(1j * arg))


def _ball_factor(rng: np.random.Generator, m: int) -> KernelExpr:
    coeffs = rng.uniform(0.2, 0.8, size=m) / m
    expo = rng.uniform(0.5, 2.5)
    terms = [E.cmul(E.const(-c), E.z(i + 1), E.wb(i + 1)) for i, c in enumerate(coeffs)]
    base = E.cadd(E.const(1), *terms)
    return E.cpow(base, E.const(-round(expo, 3)))


def _cross_factor(rng: np.random.Generator, m: int) -> KernelExpr:
    if m < 2:
        return _ball_factor(rng, m)
    i, j = rng.choice(m, size=2, replace=False) + 1
    c = round(rng.uniform(0.1, 0.4), 3)
    e = round(rng.uniform(0.3, 1.2), 3) * rng.choice([-1.0, 1.0])
    f1 = E.cpow(E.cadd(E.const(1), E.cmul(E.const(-c), E.z(int(i)), E.wb(int(j)))), E.const(e))
    f2 = E.cpow(E.cadd(E.const(1), E.cmul(E.const(-c), E.z(int(j)), E.wb(int(i)))), E.const(e))
    return E.cmul(f1, f2)


def _unit_square(rng: np.random.Generator, m: int) -> KernelExpr:
    # |g|^2 for g = 1 + sum a_i z_i with small real coefficients
    coeffs = [round(c, 3) for c in rng.uniform(-0.3, 0.3, size=m)]
    gz = E.cadd(E.const(1), *(E.cmul(E.const(a), E.z(i + 1)) for i, a in enumerate(coeffs)))
    gw = E.cadd(E.const(1), *(E.cmul(E.const(a), E.wb(i + 1)) for i, a in enumerate(coeffs)))
    return E.cmul(gz, gw)


def _exp_factor(rng: np.random.Generator, m: int) -> KernelExpr:
    c = round(rng.uniform(-0.5, 0.5), 3)
    terms = [E.cmul(E.const(c), E.z(i + 1), E.wb(i + 1)) for i in range(m)]
    return E.cexp(E.cadd(*terms))


def random_hermitian_kernel(rng: np.random.Generator, m: int) -> KernelExpr:
    """Random kernel with K(z, w) = conj(K(w, z)) and positive diagonal."""
    factories = [_ball_factor, _cross_factor, _unit_square, _exp_factor]
    n = rng.integers(1, 4)
    picks = rng.choice(len(factories), size=n)
    return E.cmul(*(factories[i](rng, m) for i in picks))


def random_safe_expression(rng: np.random.Generator, m: int) -> KernelExpr:
    """Random expression that is analytic on the test polydisc (not
    necessarily hermitian): products, sums and logs of safe factors."""
    k = random_hermitian_kernel(rng, m)
    roll = rng.random()
    if roll < 0.25:
        other = _ball_factor(rng, m)
        return E.cadd(k, other)
    if roll < 0.45:
        base = E.cadd(E.const(1), E.cmul(E.const(-round(rng.uniform(0.2, 0.6), 3)),
                                         E.z(1), E.wb(1)))
        return E.cmul(k, E.clog(E.cadd(E.const(2), base)))
    return k
