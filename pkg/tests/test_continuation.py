import numpy as np
import pytest

from ellipdiff.canonical import special_pair, t_special, unipotent_U
from ellipdiff.continuation import (
    RADIUS_CAP,
    ContinuedGauge,
    constancy_probe,
    continue_gauge,
    contraction_depth,
    radius_estimate,
    two_route_agreement,
)
from ellipdiff.diffmod import DifferencePair
from ellipdiff.expr import ExplicitMatrix, const, z_var
from ellipdiff.series import SeriesMatrix
from ellipdiff.weierstrass import make_lattice

L = make_lattice(1.0, 0.3 + 1.1j)


def rank1_one_plus_z(N=30):
    # C(z) = prod_{m>=0} (1 + z/2^m)^{-1} solves C(z/2) * 1 = (1+z) C(z)
    A = ExplicitMatrix([[const(1) + z_var()]])
    from ellipdiff.series import LaurentSeries

    prod = LaurentSeries.one(N)
    for m in range(80):
        prod = prod * LaurentSeries(0, [1.0, 0.5 ** m], N)
    C = SeriesMatrix([[prod.invert()]])
    return A, C


class TestRadius:
    def test_constant_matrix_sentinel(self):
        A0 = np.diag([2.0, 0.5])
        A = SeriesMatrix.from_constant(A0, 10)
        assert radius_estimate(A, A0, 2) == RADIUS_CAP

    def test_one_plus_z(self):
        A = SeriesMatrix.from_coeff_matrices(0, [np.eye(1), np.eye(1)], 20)
        r = radius_estimate(A, np.eye(1), 2)
        assert abs(r - 1.0) < 1e-10

    def test_empirical_divergence(self):
        # A = 1 + 3z: the inverse series has radius 1/3
        A = SeriesMatrix.from_coeff_matrices(0, [np.eye(1), 3 * np.eye(1)], 20)
        r = radius_estimate(A, np.eye(1), 2)
        assert abs(r - 1 / 3) < 1e-10

    def test_contraction_depth(self):
        assert contraction_depth(np.eye(2), 2) == 1
        assert contraction_depth(np.diag([8.0, 1.0]), 2) >= 4


class TestContinue:
    def test_constant_pair_identity(self):
        A0 = np.diag([2.0, 1.5])
        A = ExplicitMatrix.from_constant(A0)
        g = ContinuedGauge(A, A0, SeriesMatrix.identity(2, 10), RADIUS_CAP, 2)
        for z in (0.3, 2.0 + 1.0j, 17.0):
            assert np.allclose(continue_gauge(g, z), np.eye(2), atol=1e-12)

    def test_rank1_product_oracle(self):
        A, C = rank1_one_plus_z()
        g = ContinuedGauge(A, np.eye(1), C, 1.0, 2)
        val = continue_gauge(g, 1.0)[0, 0]
        oracle = 1.0
        for m in range(200):
            oracle /= 1 + 2.0 ** (-m)
        assert abs(val - oracle) < 1e-10

    def test_path_independence(self):
        A, C = rank1_one_plus_z()
        g = ContinuedGauge(A, np.eye(1), C, 1.0, 2)
        a = continue_gauge(g, 0.7 + 0.2j)
        b = continue_gauge(g, 0.7 + 0.2j, extra_steps=3)
        assert np.abs(a - b).max() < 1e-9


class TestSpecialPair:
    def _gauge(self, r=2, p=2, q=3, N=24):
        P = special_pair(r, p, q, L)
        U = unipotent_U(r, p * q, 0.0, L)
        C = U.laurent_at0(N)
        radius = 0.8 * L.shortest / (p * q)
        return P, ContinuedGauge(P.A, t_special(r, p), C, radius, p)

    def test_constancy_probe_passes(self):
        P, g = self._gauge()
        rep = constancy_probe(P, g, B0=t_special(2, 3), tol=1e-7)
        assert rep.passed
        assert rep.n_points == 20

    def test_corrupted_A0_fails(self):
        P, g = self._gauge()
        g_bad = ContinuedGauge(g.A, g.A0 + np.array([[0.0, 0.3], [0.0, 0.0]]),
                               g.C_series, g.radius, g.p)
        rep = constancy_probe(P, g_bad, tol=1e-7)
        assert not rep.passed

    def test_two_route_agreement(self):
        P, g = self._gauge()
        worst = two_route_agreement(P, g, t_special(2, 3))
        assert worst < 1e-7

    def test_rank3_constancy(self):
        P, g = self._gauge(r=3)
        rep = constancy_probe(P, g, B0=t_special(3, 3), tol=1e-7, n_points=10)
        assert rep.passed
