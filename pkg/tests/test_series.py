import numpy as np
import pytest

from ellipdiff.series import LaurentSeries, SeriesMatrix, SingularMatrix, ZeroSeries


def geom(N):
    # 1/(1-z) truncated
    return LaurentSeries(0, [1.0] * (N + 1), N)


class TestLaurentSeries:
    def test_monomial_roundtrip(self):
        s = LaurentSeries.monomial(-3, 5, 2.5)
        assert s.valuation() == -3
        assert s.coeff(-3) == 2.5
        assert s.coeff(0) == 0

    def test_add_mul_consistency(self):
        a = LaurentSeries(0, [1, 2, 3], 2)
        b = LaurentSeries(0, [4, 5], 2)
        c = a * b
        # (1+2z+3z^2)(4+5z) = 4 + 13z + 22z^2 + O(z^3)
        assert np.allclose(c.coeff_array(0, 2), [4, 13, 22])

    def test_invert_geometric(self):
        one_minus_z = LaurentSeries(0, [1.0, -1.0], 8)
        inv = one_minus_z.invert()
        assert np.allclose(inv.coeff_array(0, inv.order), np.ones(inv.order + 1))

    def test_invert_with_pole(self):
        s = LaurentSeries(1, [2.0, 1.0], 8)  # 2z + z^2
        inv = s.invert()
        assert inv.valuation() == -1
        prod = s * inv
        assert abs(prod.coeff(0) - 1) < 1e-12
        for n in range(1, prod.order + 1):
            assert abs(prod.coeff(n)) < 1e-12

    def test_invert_zero_raises(self):
        with pytest.raises(ZeroSeries):
            LaurentSeries.zero(5).invert()

    def test_scale_argument(self):
        s = LaurentSeries(-1, [1.0, 0.0, 3.0], 4)  # z^-1 + 3z
        t = s.scale_argument(2)
        assert abs(t.coeff(-1) - 2.0) < 1e-15
        assert abs(t.coeff(1) - 1.5) < 1e-15

    def test_scale_argument_composes(self):
        s = LaurentSeries(0, [1.0, 2.0, 3.0, 4.0], 3)
        t = s.scale_argument(2).scale_argument(3)
        u = s.scale_argument(6)
        assert t.allclose(u, 1e-14)

    def test_derivative_antiderivative(self):
        s = LaurentSeries(0, [5.0, 1.0, 2.0, 3.0], 3)
        d = s.derivative()
        back = d.antiderivative()
        # constant term is lost
        assert np.allclose(back.coeff_array(1, 3), s.coeff_array(1, 3))

    def test_antiderivative_rejects_residue(self):
        s = LaurentSeries(-1, [1.0], 3)
        with pytest.raises(ValueError):
            s.antiderivative()

    def test_pow(self):
        s = LaurentSeries(0, [1.0, 1.0], 6)
        c = s.pow(4)
        assert np.allclose(c.coeff_array(0, 4), [1, 4, 6, 4, 1])

    def test_evaluate(self):
        s = geom(30)
        assert abs(s.evaluate(0.5) - 2.0) < 1e-8

    def test_truncation_order_tracking(self):
        a = LaurentSeries(1, [1.0], 5)   # z known through z^5
        b = LaurentSeries(0, [1.0, 1.0], 3)
        c = a * b
        assert c.order == 4  # limited by b


class TestSeriesMatrix:
    def test_identity_matmul(self):
        rng = np.random.default_rng(0)
        M = SeriesMatrix.from_coeff_matrices(0, [rng.normal(size=(3, 3)) for _ in range(4)], 3)
        I = SeriesMatrix.identity(3, 3)
        assert (I @ M).allclose(M, 1e-14)

    def test_invert_roundtrip(self):
        rng = np.random.default_rng(1)
        coeffs = [np.eye(3) + 0.3 * rng.normal(size=(3, 3))] + [
            0.5 * rng.normal(size=(3, 3)) for _ in range(5)
        ]
        M = SeriesMatrix.from_coeff_matrices(0, coeffs, 5)
        Minv = M.invert()
        prod = M @ Minv
        assert prod.allclose(SeriesMatrix.identity(3, prod.order), 1e-10)

    def test_invert_with_valuation(self):
        rng = np.random.default_rng(2)
        coeffs = [np.eye(2) + 0.2 * rng.normal(size=(2, 2)), rng.normal(size=(2, 2))]
        M = SeriesMatrix.from_coeff_matrices(1, coeffs, 6)  # valuation 1
        Minv = M.invert()
        prod = M @ Minv
        assert prod.allclose(SeriesMatrix.identity(2, prod.order), 1e-10)

    def test_invert_singular_raises(self):
        M = SeriesMatrix.from_coeff_matrices(0, [np.zeros((2, 2)), np.eye(2)], 4)
        # leading matrix of z*I is invertible after shift, but a genuinely
        # singular leading block must raise
        N = SeriesMatrix.from_coeff_matrices(
            0, [np.array([[1.0, 0.0], [0.0, 0.0]])], 4
        )
        M.invert()
        with pytest.raises(SingularMatrix):
            N.invert()

    def test_scale_argument(self):
        rng = np.random.default_rng(3)
        coeffs = [rng.normal(size=(2, 2)) for _ in range(3)]
        M = SeriesMatrix.from_coeff_matrices(0, coeffs, 2)
        S = M.scale_argument(2)
        for z in (0.1, 0.2 + 0.1j):
            assert np.allclose(S.evaluate(z), M.evaluate(z / 2), atol=1e-12)

    def test_evaluate_matches_coeffs(self):
        rng = np.random.default_rng(4)
        coeffs = [rng.normal(size=(2, 2)) for _ in range(4)]
        M = SeriesMatrix.from_coeff_matrices(0, coeffs, 3)
        z = 0.3
        expect = sum(c * z ** k for k, c in enumerate(coeffs))
        assert np.allclose(M.evaluate(z), expect, atol=1e-14)
