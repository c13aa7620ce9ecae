import numpy as np
import pytest

from ellipdiff.descent import (
    LaurentPolynomial,
    NotSatisfied,
    Obstructed,
    Obstruction,
    ScalingSolution,
    r_ring_membership_demo,
    scaling_residual,
    solve_scaling_equation,
    solve_triangular_system,
)
from ellipdiff.weierstrass import make_lattice

L = make_lattice(1.0, 0.3 + 1.1j)


class TestLaurentPolynomial:
    def test_arithmetic(self):
        a = LaurentPolynomial({-1: 2.0, 3: 1.0})
        b = LaurentPolynomial({-1: -2.0, 0: 5.0})
        assert (a + b).support == [0, 3]
        assert (a - a).is_zero()
        assert (a * b)[-1] == 10.0
        assert (a * b)[2] == -2.0
        assert (a * b)[-2] == -4.0

    def test_scale_argument(self):
        a = LaurentPolynomial({2: 1.0, -1: 4.0})
        s = a.scale_argument(0.5)
        assert s[2] == 0.25
        assert s[-1] == 8.0

    def test_evaluate(self):
        a = LaurentPolynomial({-1: 1.0, 1: 1.0})
        assert abs(a.evaluate(2.0) - 2.5) < 1e-15

    def test_zero_coefficients_dropped(self):
        a = LaurentPolynomial({0: 0.0, 1: 1.0})
        assert a.support == [1]


class TestScalingEquation:
    def test_worked_example(self):
        # t=3, p=2, g=z^2: h2 = 1/(1/4 - 3) = -4/11
        sol = solve_scaling_equation(3.0, LaurentPolynomial({2: 1.0}), 2)
        assert isinstance(sol, ScalingSolution)
        assert abs(sol.h[2] - (-4.0 / 11.0)) < 1e-15
        assert scaling_residual(sol.h, 3.0, LaurentPolynomial({2: 1.0}), 2).is_zero()

    def test_zero_rhs(self):
        sol = solve_scaling_equation(0.37, LaurentPolynomial.zero(), 2)
        assert sol.h.is_zero()
        assert sol.free_exponents == ()

    def test_resonant_free_parameter(self):
        # t = p^{-n} with g_n = 0: one-parameter family, default 0
        sol = solve_scaling_equation(2.0 ** -3, LaurentPolynomial({1: 1.0}), 2)
        assert isinstance(sol, ScalingSolution)
        assert sol.free_exponents == (3,)
        assert scaling_residual(sol.h, 2.0 ** -3,
                                LaurentPolynomial({1: 1.0}), 2).is_zero()

    def test_resonant_obstruction(self):
        out = solve_scaling_equation(2.0 ** -2, LaurentPolynomial({2: 5.0}), 2)
        assert isinstance(out, Obstruction)
        assert out.exponent == 2
        assert out.coefficient == 5.0

    def test_substitution_exact_random(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            p = int(rng.integers(2, 6))
            exps = rng.choice(np.arange(-6, 7), size=4, replace=False)
            g = LaurentPolynomial({int(n): complex(rng.normal(), rng.normal())
                                   for n in exps})
            t = complex(rng.normal(), rng.normal()) * 1.3
            sol = solve_scaling_equation(t, g, p)
            if isinstance(sol, Obstruction):
                continue
            assert scaling_residual(sol.h, t, g, p).is_zero()
            assert set(sol.h.support) <= set(g.support)

    def test_support_bound(self):
        sol = solve_scaling_equation(3.0 ** -1, LaurentPolynomial({-2: 1.0, 5: 2.0}), 3)
        assert set(sol.h.support) <= {-2, 5, 1}


class TestTriangularSystem:
    def test_diagonal_identity_case(self):
        T = np.diag([0.5, 0.25])
        h = [LaurentPolynomial({1: 1.0}), LaurentPolynomial({2: 1.0})]
        out = solve_triangular_system(T, h, 2)
        assert out[0] == h[0]
        assert out[1] == h[1]

    def test_upper_triangular_coupling(self):
        # h1 = z, h2 = z^2 + c z with h_j(z/p) = sum_i T[i,j] h_i:
        # column 2: h2(z/2) = T12 h1 + T22 h2
        # pick T22 = 1/4, T12 = c(1/2 - 1/4) with c = 3
        c = 3.0
        T = np.array([[0.5, c * 0.25], [0.0, 0.25]])
        h = [LaurentPolynomial({1: 1.0}),
             LaurentPolynomial({2: 1.0, 1: c})]
        out = solve_triangular_system(T, h, 2)
        for got, want in zip(out, h):
            assert (got - want).is_zero() or all(
                abs((got - want)[n]) < 1e-9 for n in (got - want).support)

    def test_random_conjugated_diagonal_roundtrip(self):
        rng = np.random.default_rng(4)
        p = 2
        for _ in range(20):
            exps = [int(n) for n in rng.choice(np.arange(-3, 5), size=3,
                                               replace=False)]
            D = np.diag([p ** -n for n in exps]).astype(complex)
            V = rng.normal(size=(3, 3)) + 0.3 * rng.normal(size=(3, 3)) * 1j
            if abs(np.linalg.det(V)) < 0.1:
                continue
            T = np.linalg.inv(V).T @ D @ V.T
            # y_i = z^{exps[i]} satisfies y(z/p) = D y; h = V^t^{-1}... use
            # h_k = sum_i V[i,k] y_i so that h(z/p) = T^t h with T above
            h = []
            for k in range(3):
                h.append(LaurentPolynomial(
                    {exps[i]: V[i, k] for i in range(3)}))
            Tmat = V.T @ D @ np.linalg.inv(V.T)
            # relation: h(z/p) = M h(z) with M = V^t D V^{-t}; the solver
            # wants T with T^t = M
            out = solve_triangular_system(Tmat.T, h, p)
            for got, want in zip(out, h):
                d = got - want
                assert all(abs(d[n]) < 1e-7 for n in d.support)

    def test_not_satisfied(self):
        T = np.diag([0.5, 0.25])
        h = [LaurentPolynomial({1: 1.0}), LaurentPolynomial({3: 1.0})]
        with pytest.raises(NotSatisfied):
            solve_triangular_system(T, h, 2)

    def test_singular_rejected(self):
        with pytest.raises(ValueError):
            solve_triangular_system(np.zeros((2, 2)), [LaurentPolynomial(),
                                                       LaurentPolynomial()], 2)


class TestMembershipDemo:
    def test_z_trivial(self):
        rep = r_ring_membership_demo("z", L, 2, 3)
        assert rep.passed
        assert rep.max_residual < 1e-10

    def test_zeta_member(self):
        rep = r_ring_membership_demo("zeta", L, 2, 3)
        assert rep.passed, rep.details

    def test_composite_member(self):
        rep = r_ring_membership_demo("composite", L, 2, 3)
        assert rep.passed, rep.details

    def test_unknown_rejected(self):
        with pytest.raises(ValueError):
            r_ring_membership_demo("wp", L, 2, 3)
