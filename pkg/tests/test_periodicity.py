import numpy as np
import pytest

from ellipdiff.periodicity import (
    BudgetExceeded,
    DimensionMismatch,
    DivisorSection,
    HypothesisViolated,
    SEquivParams,
    Window,
    closure_equals_modN,
    cocycle_check,
    periodic_after_modification,
    pullback_scale,
    s_equivalent,
    synthesize_scenario,
)
from ellipdiff.weierstrass import make_lattice

L = make_lattice(1.0, 0.3 + 1.1j)
W = Window(-2.0, 2.0, -2.0, 2.0)


class TestDivisorSection:
    def test_merge_and_cancel(self):
        s = DivisorSection(W, [(0.1, 2), (0.1 + 5e-10, 3)])
        assert s.mult_at(0.1) == 5
        s.add_point(0.1, -5)
        assert s.mult_at(0.1) == 0
        assert not s.support

    def test_clipping_warns(self):
        s = DivisorSection(W)
        with pytest.warns(UserWarning):
            s.add_point(5.0, 1)
        assert not s.support

    def test_add_sub_equals(self):
        a = DivisorSection(W, [(0.2, 1), (0.5j, -2)])
        b = DivisorSection(W, [(0.5j, -2), (0.2, 1)])
        assert a.equals(b)
        assert not (a + b).equals(a)
        assert (a - b).equals(DivisorSection(W))

    def test_with_mult_replaces(self):
        a = DivisorSection(W, [(0.0, 4)])
        b = a.with_mult(0.0, 1)
        assert b.mult_at(0.0) == 1
        assert a.mult_at(0.0) == 4


class TestSEquivalent:
    P = SEquivParams(primes=(2,), modulus=5)

    def test_zero_matches_only_zero(self):
        assert s_equivalent([0], [0], self.P)
        assert not s_equivalent([0], [5], self.P)
        assert not s_equivalent([5], [0], self.P)

    def test_order_and_deprived_part(self):
        # 12 = 2^2*3, 32*... pick 2^2*13 = 52: 3 ≡ 13 mod 5
        assert s_equivalent([12], [52], self.P)
        # same deprived class, different 2-order
        assert not s_equivalent([12], [24], self.P)
        # same order, deprived parts 3 vs 7: differ mod 5
        assert not s_equivalent([12], [28], self.P)

    def test_negative_entries(self):
        # -12 has deprived part -3 ≡ 2 mod 5; 2^2*7 = 28 has 7 ≡ 2
        assert s_equivalent([-12], [28], self.P)

    def test_vector_and_mismatch(self):
        assert s_equivalent([12, 0], [52, 0], self.P)
        assert not s_equivalent([12, 1], [52, 2], self.P)
        with pytest.raises(DimensionMismatch):
            s_equivalent([1], [1, 2], self.P)

    def test_two_primes(self):
        P = SEquivParams(primes=(2, 3), modulus=7)
        # 30 = 2*3*5 and 114 = 2*3*19: deprived parts 5 and 19 agree mod 7
        assert s_equivalent([30], [114], P)
        # 60 = 2^2*3*5 has a different 2-order
        assert not s_equivalent([30], [60], P)

    def test_is_equivalence_on_samples(self):
        rng = np.random.default_rng(3)
        xs = [int(x) for x in rng.integers(-50, 51, size=30)]
        for a in xs:
            assert s_equivalent([a], [a], self.P)
            for b in xs:
                assert s_equivalent([a], [b], self.P) == s_equivalent([b], [a], self.P)


class TestClosure:
    def test_coprime_closure_holds(self):
        ok, witness = closure_equals_modN(2, 3, 5, box_bound=30,
                                          slack_bound=10_000)
        assert ok, witness

    def test_coprime_closure_holds_other_modulus(self):
        ok, _ = closure_equals_modN(3, 5, 8, box_bound=30, slack_bound=10_000)
        assert ok

    def test_non_coprime_fails(self):
        ok, witness = closure_equals_modN(2, 4, 5, box_bound=30,
                                          slack_bound=10_000)
        assert not ok
        assert witness is not None

    def test_dimension_two_small(self):
        ok, _ = closure_equals_modN(2, 3, 4, box_bound=8, slack_bound=60, d=2)
        assert ok

    def test_budget_guard(self):
        with pytest.raises(BudgetExceeded):
            closure_equals_modN(2, 3, 5, box_bound=30, slack_bound=10_000, d=2)


class TestCocycle:
    def test_pullback_moves_points(self):
        s = DivisorSection(W, [(0.3 + 0.1j, 1)])
        t = pullback_scale(s, 2)
        assert t.mult_at(0.6 + 0.2j) == 1
        assert len(t.support) == 1

    def _recursed(self, divA, p, depth=40):
        # s(x) = sum_{m>=1} divA(p^m x) solves pullback(s) = divA + s,
        # up to a truncation point inside the origin core
        s = DivisorSection(W)
        for z, m in divA.support:
            for k in range(1, depth):
                s.add_point(z / p ** k, m)
        return s

    def test_recursion_gives_cocycle(self):
        divA = DivisorSection(W, [(1.1 + 0.7j, 2), (-1.3j, -1), (0.4, 3)])
        s = self._recursed(divA, 2)
        assert cocycle_check(s, divA, 2)

    def test_broken_cocycle_detected(self):
        divA = DivisorSection(W, [(1.0 + 0.2j, 1)])
        s = self._recursed(divA, 2)
        s_bad = s.with_mult(0.5 + 0.1j, 2)
        assert cocycle_check(s, divA, 2)
        assert not cocycle_check(s_bad, divA, 2)

    def test_small_perturbation_detected(self):
        divA = DivisorSection(W, [(1.0 + 0.2j, 1)])
        s = self._recursed(divA, 2)
        i = s._find(0.5 + 0.1j)
        z, m = s.support[i]
        s.support[i] = (z + 1e-3, m)
        assert not cocycle_check(s, divA, 2)


class TestPeriodicModification:
    def test_good_scenarios_pass(self):
        rng = np.random.default_rng(7)
        for p, q, k in [(2, 3, 1), (2, 3, 2), (3, 4, 1), (2, 5, 1), (3, 5, 1)]:
            s, dA, dB = synthesize_scenario(L, p, q, k, rng)
            v = periodic_after_modification(s, dA, dB, p, q, L)
            assert v.periodic, (p, q, k, v.detail)
            # the repair only touches 0
            diff = (v.s_prime - s).support
            assert all(abs(z) < 1e-9 for z, _ in diff)
            # idempotent: modified section passes unchanged
            v2 = periodic_after_modification(v.s_prime, dA, dB, p, q, L)
            assert v2.periodic
            assert v2.s_prime.equals(v.s_prime)

    def test_modified_section_keeps_cocycles(self):
        rng = np.random.default_rng(11)
        s, dA, dB = synthesize_scenario(L, 2, 3, 2, rng)
        v = periodic_after_modification(s, dA, dB, 2, 3, L)
        assert cocycle_check(v.s_prime, dA, 2)
        assert cocycle_check(v.s_prime, dB, 3)

    def test_corrupted_divisor_rejected(self):
        rng = np.random.default_rng(5)
        s, dA, dB = synthesize_scenario(L, 2, 3, 1, rng, corrupt="divA")
        with pytest.raises(HypothesisViolated):
            periodic_after_modification(s, dA, dB, 2, 3, L)

    def test_corrupted_point_rejected(self):
        rng = np.random.default_rng(5)
        s, dA, dB = synthesize_scenario(L, 2, 3, 1, rng, corrupt="point")
        with pytest.raises(HypothesisViolated):
            periodic_after_modification(s, dA, dB, 2, 3, L)

    def test_no_lattice_point_in_window(self):
        tiny = Window(-0.2, 0.2, -0.2, 0.2)
        s = DivisorSection(tiny)
        dA = DivisorSection(tiny)
        dB = DivisorSection(tiny)
        with pytest.raises(HypothesisViolated):
            periodic_after_modification(s, dA, dB, 2, 3, L)
