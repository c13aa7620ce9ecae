import json
from fractions import Fraction

import numpy as np
import pytest

from ellipdiff.expr import (
    BlockDiag,
    Const,
    DenominatorIdenticallyZero,
    DenominatorZero,
    ExplicitMatrix,
    HigherOrderPole,
    MatInv,
    MatMul,
    NotElliptic,
    Quot,
    ZAtom,
    const,
    expr_from_json,
    expr_to_json,
    matrix_from_json,
    matrix_to_json,
    residue_at,
    residue_sum_fundamental,
    wp_e,
    z_var,
    zeta_e,
)
from ellipdiff.weierstrass import make_lattice, wp_eval, zeta_eval

L = make_lattice(1.0, 0.3 + 1.1j)


def g_p_expr(p, q, lattice=L):
    return const(p) * zeta_e(q, 0.0, lattice) - zeta_e(p * q, 0.0, lattice)


def g_q_expr(p, q, lattice=L):
    return const(q) * zeta_e(p, 0.0, lattice) - zeta_e(p * q, 0.0, lattice)


class TestEval:
    def test_const_times_z(self):
        e = const(3) * z_var()
        assert abs(e.eval(2j) - 6j) < 1e-15

    def test_zeta_atom_passthrough(self):
        e = zeta_e(1, 0.0, L)
        z = 0.23 + 0.11j
        assert e.eval(z) == zeta_eval(L, z)

    def test_wp_atom_with_shift(self):
        e = wp_e(2, 0.1j, L, deriv=1)
        z = 0.2 + 0.05j
        assert abs(e.eval(z) - wp_eval(L, 2 * z - 0.1j, derivative=1)) < 1e-14

    def test_quot_raises_on_zero(self):
        e = Quot(const(1), z_var())
        with pytest.raises(DenominatorZero):
            e.eval(0.0)

    def test_g_p_finite_generic(self):
        e = g_p_expr(2, 3)
        assert np.isfinite(e.eval(0.17 + 0.09j))


class TestSubstituteScale:
    def test_z_divide(self):
        e = z_var().substitute_scale(2)
        assert abs(e.eval(1.0) - 0.5) < 1e-15

    def test_roundtrip_identity(self):
        e = g_p_expr(2, 3) + z_var() ** 3
        back = e.substitute_scale(5).substitute_scale(5, "multiply")
        for z in (0.2, 0.1 + 0.21j):
            assert abs(back.eval(z) - e.eval(z)) < 1e-12

    def test_compose_equals_product(self):
        e = zeta_e(1, 0.0, L)
        twice = e.substitute_scale(2).substitute_scale(3)
        once = e.substitute_scale(6)
        z = 0.31 + 0.14j
        assert abs(twice.eval(z) - once.eval(z)) < 1e-13

    def test_eval_agreement(self):
        e = g_p_expr(2, 3) * z_var() + const(2)
        s = e.substitute_scale(3)
        rng = np.random.default_rng(7)
        for _ in range(10):
            z = complex(*rng.uniform(0.1, 0.3, 2))
            assert abs(s.eval(z) - e.eval(z / 3)) < 1e-10 * max(1, abs(e.eval(z / 3)))

    def test_g_p_functional_identity(self):
        # p*zeta(qz) - zeta(pqz) under z -> z/q becomes p*zeta(z) - zeta(pz)
        p, q = 2, 3
        e = g_p_expr(p, q).substitute_scale(q)
        f = const(p) * zeta_e(1, 0.0, L) - zeta_e(p, 0.0, L)
        z = 0.27 + 0.13j
        assert abs(e.eval(z) - f.eval(z)) < 1e-12


class TestLaurent:
    def test_zeta_leading_terms(self):
        s = zeta_e(1, 0.0, L).laurent_at0(6)
        assert abs(s.coeff(-1) - 1) < 1e-14
        assert abs(s.coeff(3) + L.G(4)) < 1e-14
        assert abs(s.coeff(5) + L.G(6)) < 1e-14

    def test_g_p_residue_coeff(self):
        p, q = 2, 3
        s = g_p_expr(p, q).laurent_at0(4)
        # residue p/q - 1/(pq) = (p^2-1)/(pq)
        assert abs(s.coeff(-1) - (p * p - 1) / (p * q)) < 1e-12

    def test_series_matches_eval(self):
        e = g_p_expr(2, 3) * z_var() + zeta_e(2, 0.0, L) ** 2
        s = e.laurent_at0(24)
        z = 1e-2
        assert abs(s.evaluate(z) - e.eval(z)) < 1e-8 * max(1, abs(e.eval(z)))

    def test_scale_commutes_with_laurent(self):
        e = g_p_expr(2, 3) + z_var() ** 2
        a = e.substitute_scale(5).laurent_at0(10)
        b = e.laurent_at0(10).scale_argument(5)
        assert a.allclose(b, 1e-10)

    def test_quot_identically_zero(self):
        e = Quot(const(1), const(0))
        with pytest.raises(DenominatorIdenticallyZero):
            e.laurent_at0(4)

    def test_shifted_atom_regular(self):
        z0 = 0.2 + 0.1j
        e = zeta_e(1, z0, L)
        s = e.laurent_at0(10)
        assert s.valuation() >= 0
        assert abs(s.evaluate(0.01) - e.eval(0.01)) < 1e-9

    def test_shifted_atom_lattice_translate(self):
        # z0 a lattice point: the atom has the pole at 0 shifted by eta
        w = L.omega1
        e = zeta_e(1, -w, L)  # zeta(z + omega1)
        s = e.laurent_at0(10)
        assert s.valuation() == -1
        z = 0.02 + 0.01j
        assert abs(s.evaluate(z) - e.eval(z)) < 1e-8 * max(1, abs(e.eval(z)))


class TestResidues:
    def test_zeta_residue_one(self):
        assert abs(residue_at(zeta_e(1, 0.0, L), 0.0) - 1) < 1e-10

    def test_g_p_residue_half(self):
        assert abs(residue_at(g_p_expr(2, 3), 0.0) - 0.5) < 1e-9

    def test_double_pole_rejected(self):
        with pytest.raises(HigherOrderPole):
            residue_at(wp_e(1, 0.0, L), 0.0)

    def test_residue_sum_zero(self):
        e = g_p_expr(2, 3)
        assert abs(residue_sum_fundamental(e)) < 1e-8

    def test_not_elliptic_rejected(self):
        with pytest.raises(NotElliptic):
            residue_sum_fundamental(zeta_e(1, 0.0, L))


class TestGRelation:
    @pytest.mark.parametrize("pq", [(2, 3), (3, 4), (2, 5)])
    def test_g_relation(self, pq):
        p, q = pq
        gp = g_p_expr(p, q)
        gq = g_q_expr(p, q)
        rng = np.random.default_rng(11)
        for _ in range(5):
            z = complex(*rng.uniform(0.07, 0.21, 2))
            lhs = gp.eval(z) - q * gp.substitute_scale(q).eval(z)
            rhs = gq.eval(z) - p * gq.substitute_scale(p).eval(z)
            assert abs(lhs - rhs) < 1e-9 * max(1, abs(lhs))

    def test_g_p_small_lattice_periodicity(self):
        p, q = 2, 3
        gp = g_p_expr(p, q)
        rng = np.random.default_rng(13)
        for _ in range(5):
            z = complex(*rng.uniform(0.05, 0.2, 2))
            for w in (L.omega1 / q, L.omega2 / q):
                assert abs(gp.eval(z + w) - gp.eval(z)) < 1e-9 * max(1, abs(gp.eval(z)))


class TestJSON:
    def test_expr_roundtrip(self):
        e = g_p_expr(2, 3) * z_var(Fraction(1, 2)) + const(1 + 2j) ** 2
        d = expr_to_json(e)
        json.dumps(d)  # must be serializable
        back = expr_from_json(d)
        z = 0.19 + 0.08j
        assert abs(back.eval(z) - e.eval(z)) < 1e-12 * max(1, abs(e.eval(z)))

    def test_matrix_roundtrip(self):
        M = MatMul(
            ExplicitMatrix([[const(1), g_p_expr(2, 3)], [const(0), const(2)]]),
            MatInv(ExplicitMatrix([[const(1), zeta_e(6, 0.0, L)], [const(0), const(1)]])),
        )
        d = matrix_to_json(M)
        json.dumps(d)
        back = matrix_from_json(d)
        z = 0.23 + 0.11j
        assert np.allclose(back.eval_at(z), M.eval_at(z), atol=1e-12)


class TestMatrixExpr:
    def test_matinv_eval(self):
        M = ExplicitMatrix([[const(1), z_var()], [const(0), const(1)]])
        got = MatInv(M).eval_at(0.5)
        assert np.allclose(got, [[1, -0.5], [0, 1]])

    def test_matinv_series(self):
        M = ExplicitMatrix([[const(1), z_var()], [const(0), const(1)]])
        S = MatInv(M).laurent_at0(5)
        assert abs(S.entries[0][1].coeff(1) + 1) < 1e-14

    def test_blockdiag(self):
        B = BlockDiag([ExplicitMatrix([[const(2)]]),
                       ExplicitMatrix([[const(1), z_var()], [const(0), const(1)]])])
        got = B.eval_at(0.3)
        assert np.allclose(got, [[2, 0, 0], [0, 1, 0.3], [0, 0, 1]])
        S = B.laurent_at0(4)
        assert abs(S.entries[1][2].coeff(1) - 1) < 1e-14

    def test_substitute_scale_matmul(self):
        A = ExplicitMatrix([[const(1), zeta_e(2, 0.0, L)], [const(0), const(1)]])
        M = MatMul(A, MatInv(A))
        S = M.substitute_scale(3)
        z = 0.4 + 0.2j
        assert np.allclose(S.eval_at(z), M.eval_at(z / 3), atol=1e-10)
