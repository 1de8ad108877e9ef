import math

import numpy as np
import pytest

from conftest import random_hermitian_kernel, random_point
from jetq import expr as E
from jetq.calculus import EvalDomainError, EvalPoint
from jetq.geometry import (connection_matrix, curvature_matrix, curvature_split,
                           frame_change_check, jet_kernel, jet_metric,
                           second_fundamental_form, secfund_from_split,
                           toeplitz_jet_matrix)


def _bidisc(lam, mu):
    return E.parse_kernel(f"(1 - z1*wb1)^(-{lam})*(1 - z2*wb2)^(-{mu})", 2)


def _u_bidisc(lam, mu):
    return E.substitute_affine(_bidisc(lam, mu), [[1, 1], [-1, 1]])


class TestJetKernel:
    def test_product_kernel_at_origin(self):
        jm = jet_kernel(_bidisc(3, 2), 2, EvalPoint.diagonal((0, 0))).matrix
        assert np.allclose(jm, np.diag([1.0, 3.0]), atol=1e-14)

    def test_order_one_is_scalar_kernel(self):
        k = _bidisc(1.3, 0.7)
        for _ in range(5):
            rng = np.random.default_rng(3)
            pt = EvalPoint(random_point(rng, 2), random_point(rng, 2))
            from jetq.calculus import evaluate
            assert jet_kernel(k, 1, pt).matrix[0, 0] == pytest.approx(evaluate(k, pt))

    def test_diagonal_hermitian_and_psd(self):
        rng = np.random.default_rng(11)
        for lam in (0.5, 1.0, 2.5):
            for _ in range(4):
                r = rng.uniform(0, 0.9)
                th = rng.uniform(0, 2 * np.pi)
                z = (r * np.exp(1j * th),)
                k = E.parse_kernel(f"(1 - z1*wb1)^(-{lam})", 1)
                for order in (2, 3, 4):
                    jv = jet_kernel(k, order, EvalPoint.diagonal(z))
                    assert jv.hermiticity_defect() <= 1e-12 * np.max(np.abs(jv.matrix))
                    eig = np.linalg.eigvalsh(jv.matrix)
                    assert eig.min() >= -1e-10 * max(1, eig.max())


class TestToeplitzJetMatrix:
    def test_coordinate_at_zero(self):
        mat = toeplitz_jet_matrix(E.z(1), 2, (0,))
        assert np.allclose(mat, [[0, 0], [1, 0]])

    def test_constant_gives_identity(self):
        for k in (1, 2, 4):
            assert np.allclose(toeplitz_jet_matrix(E.const(1), k, (0.3,)), np.eye(k))

    def test_square_at_one(self):
        mat = toeplitz_jet_matrix(E.parse_kernel("z1^2", 1), 3, (1,))
        assert np.allclose(mat, [[1, 0, 0], [2, 1, 0], [2, 4, 1]])

    def test_defining_function_nilpotent(self):
        mat = toeplitz_jet_matrix(E.z(1), 3, (0,))
        assert np.allclose(np.triu(mat), 0)
        assert np.allclose(np.linalg.matrix_power(mat, 3), 0)

    def test_rejects_anti_holomorphic(self):
        with pytest.raises(ValueError):
            toeplitz_jet_matrix(E.wb(1), 2, (0,))

    def test_leibniz_property(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            cs = rng.uniform(-1, 1, size=6).round(3)
            f = E.parse_kernel(f"{cs[0]} + {cs[1]}*z1 + {cs[2]}*z1^2", 1)
            g = E.parse_kernel(f"{cs[3]} + {cs[4]}*z1 + {cs[5]}*z1^3", 1)
            z = (complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)),)
            lhs = toeplitz_jet_matrix(E.mul(f, g), 4, z)
            rhs = toeplitz_jet_matrix(f, 4, z) @ toeplitz_jet_matrix(g, 4, z)
            assert np.max(np.abs(lhs - rhs)) <= 1e-10


class TestCurvature:
    def test_bidisc_at_origin(self):
        assert np.allclose(curvature_matrix(_bidisc(1.5, 2.5), (0, 0)),
                           np.diag([1.5, 2.5]), atol=1e-13)

    def test_diagonal_coordinates_restriction(self):
        lam, mu = 1.5, 2.5
        ku = _u_bidisc(lam, mu)
        for u1 in (0, 0.2, 0.45j, 0.3 - 0.3j):
            got = curvature_matrix(ku, (0, u1))
            scale = (1 - abs(u1) ** 2) ** -2
            want = scale * np.array([[lam + mu, lam - mu], [lam - mu, lam + mu]])
            assert np.max(np.abs(got - want)) <= 1e-10 * scale

    def test_single_slot_kernel_off_diagonal_zero(self):
        k = E.parse_kernel("(1 - z1*wb1)^(-2)", 2)
        mat = curvature_matrix(k, (0.2, 0.3))
        assert abs(mat[0, 1]) < 1e-13 and abs(mat[1, 0]) < 1e-13


class TestCurvatureSplit:
    def test_paper_restriction_example(self):
        lam, mu = 2.0, 1.0
        full = np.array([[lam + mu, lam - mu], [lam - mu, lam + mu]], dtype=complex)
        sp = curvature_split(full)
        assert sp.trans == pytest.approx(lam + mu)
        assert np.allclose(sp.tan, [[lam + mu]])
        assert np.allclose(sp.angle, [lam - mu])

    def test_diagonal_matrix_zero_angle(self):
        sp = curvature_split(np.diag([2.0, 3.0, 4.0]))
        assert np.allclose(sp.angle, 0)

    def test_dimension_one(self):
        sp = curvature_split(np.array([[5.0]]))
        assert sp.tan.size == 0 and sp.angle.size == 0 and sp.trans == 5.0

    def test_assemble_round_trip(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        h = a + a.conj().T
        assert np.allclose(curvature_split(h).assemble(), h)


class TestSecondFundamentalForm:
    def test_product_kernel_tangential_components_vanish(self):
        k = _bidisc(1.5, 2.0)
        sff = second_fundamental_form(k, (0.2, 0.4))
        assert np.max(np.abs(sff[1:])) < 1e-12

    def test_ball_kernel_direct_vs_reassembly(self):
        ball = E.parse_kernel("(1 - z1*wb1 - z2*wb2)^(-2)", 2)
        z = (0, 0.5)
        direct = second_fundamental_form(ball, z)
        re = secfund_from_split(curvature_split(curvature_matrix(ball, z)))
        assert np.max(np.abs(direct - re)) <= 1e-10

    def test_flat_slice_gives_zero_tangential(self):
        # metric constant in z1 near the slice up to |z1|^2 terms only
        k = E.parse_kernel("(1 - z1*wb1)^(-2)", 2)
        sff = second_fundamental_form(k, (0.0, 0.3))
        assert np.max(np.abs(sff[1:])) < 1e-12

    def test_vanishing_transverse_curvature_rejected(self):
        k = E.parse_kernel("(1 - z2*wb2)^(-2)", 2)
        with pytest.raises(EvalDomainError):
            second_fundamental_form(k, (0.1, 0.2))


class TestConnectionMatrix:
    def test_metric_compatibility_disc(self):
        theta = connection_matrix(E.parse_kernel("(1 - z1*wb1)^(-2)", 1), (0.4,))
        assert theta.compatibility_defect() <= 1e-10

    def test_theta12_equals_second_fundamental_form(self):
        ball = E.parse_kernel("(1 - z1*wb1 - z2*wb2)^(-1.5)", 2)
        z = (0.1 + 0.2j, 0.3)
        theta = connection_matrix(ball, z)
        sff = second_fundamental_form(ball, z)
        assert np.max(np.abs(theta.dzbar[0, 1] - sff)) <= 1e-12
        assert np.max(np.abs(theta.dz[0, 1])) == 0

    def test_rotation_invariant_kernel_theta11_vanishes_at_origin(self):
        theta = connection_matrix(E.parse_kernel("(1 - z1*wb1)^(-2)", 1), (0,))
        assert np.max(np.abs(theta.dz[0, 0])) < 1e-14
        assert np.max(np.abs(theta.dzbar[0, 0])) < 1e-14

    def test_compatibility_random_kernels(self):
        rng = np.random.default_rng(31)
        anchor1 = E.parse_kernel("(1 - z1*wb1)^(-2)", 1)
        anchor2 = E.parse_kernel("(1 - z1*wb1)^(-2)", 2)
        for _ in range(10):
            m = int(rng.integers(1, 3))
            # anchor keeps the transverse curvature strictly positive
            k = E.cmul(anchor1 if m == 1 else anchor2, random_hermitian_kernel(rng, m))
            theta = connection_matrix(k, random_point(rng, m, 0.35))
            assert theta.compatibility_defect() <= 1e-10


class TestFrameChange:
    def test_identity_frame(self):
        s = E.parse_kernel("(1 - z1*wb1)^(-1)", 1)
        ok, resid = frame_change_check(E.const(1), s, 3, EvalPoint((0.2,), (0.1,)))
        assert ok and resid == 0

    def test_exponential_frame(self):
        s = E.parse_kernel("(1 - z1*wb1)^(-1)", 1)
        g = E.parse_kernel("exp(z1)", 1)
        ok, resid = frame_change_check(g, s, 3, EvalPoint((0.2,), (0.1,)))
        assert ok and resid <= 1e-12

    def test_affine_frame_degree_one(self):
        g = E.parse_kernel("z1 + 2", 1)
        ok, resid = frame_change_check(g, E.const(1), 2, EvalPoint.diagonal((0.3,)))
        assert ok and resid == 0

    def test_vanishing_frame_rejected(self):
        with pytest.raises(EvalDomainError):
            frame_change_check(E.z(1), E.const(1), 2, EvalPoint.diagonal((0,)))
