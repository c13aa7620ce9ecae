"""Analytic continuation of the normalized gauge through its functional
equation C(z) = A(z)^{-1} C(z/p) A0.

The gauge is known as a truncated series near 0; any other point is
reached by contracting into the convergence disk, evaluating the series,
and multiplying back out through finitely many functional-equation steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diffmod import DifferencePair, _EVAL_ERRORS, _sample_annulus
from .expr import MatrixExpr
from .series import SeriesMatrix

RADIUS_CAP = 1e9


class PoleOnOrbit(ArithmeticError):
    pass


@dataclass
class ContinuedGauge:
    A: MatrixExpr
    A0: np.ndarray
    C_series: SeriesMatrix
    radius: float
    p: int

    def __post_init__(self):
        self.A0 = np.asarray(self.A0, dtype=complex)


def radius_estimate(A: SeriesMatrix, A0, p: int) -> float:
    """Convergence radius recipe: write A(z)^{-1} A0 = I + sum z^i M_i,
    take c2 = max ||M_i||^{1/i} and return 1/c2 (capped); the associated
    contraction depth R with c1 / p^R <= 1/2 uses c1 = cond(A0)."""
    A0 = np.asarray(A0, dtype=complex)
    M = A.invert() @ SeriesMatrix.from_constant(A0, A.order)
    c2 = 0.0
    for i in range(1, M.order + 1):
        ni = np.linalg.norm(M.coeff_matrix(i), 2)
        if ni > 1e-14:
            c2 = max(c2, ni ** (1.0 / i))
    if c2 == 0.0:
        return RADIUS_CAP
    return 1.0 / c2


def contraction_depth(A0, p: int) -> int:
    A0 = np.asarray(A0, dtype=complex)
    c1 = np.linalg.cond(A0, 2)
    return max(1, math.ceil(math.log(2 * c1, p)))


def continue_gauge(g: ContinuedGauge, z: complex, extra_steps: int = 0) -> np.ndarray:
    """Value of the continued gauge at z: contract z by powers of p into
    |z| < radius/2, evaluate the series, then apply
    C(p w) = A(p w)^{-1} C(w) A0 back up the orbit."""
    z = complex(z)
    m = 0
    target = min(g.radius, RADIUS_CAP) / 2
    while abs(z) / g.p ** m >= target:
        m += 1
        if m > 400:
            raise PoleOnOrbit("cannot contract into the convergence disk")
    m += extra_steps
    w = z / g.p ** m
    val = g.C_series.evaluate(w)
    A0 = g.A0
    for k in range(m):
        w = w * g.p
        try:
            Aw = g.A.eval_at(w)
        except _EVAL_ERRORS:
            raise PoleOnOrbit(f"A singular on the orbit at {w}")
        if abs(np.linalg.det(Aw)) < 1e-13:
            raise PoleOnOrbit(f"A singular on the orbit at {w}")
        val = np.linalg.solve(Aw, val) @ A0
    return val


@dataclass
class ConstancyReport:
    max_residual_a: float
    max_residual_b: float
    n_points: int
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.max_residual_a, self.max_residual_b) < self.tol


def constancy_probe(P: DifferencePair, g: ContinuedGauge, B0=None,
                    n_points: int = 20, tol: float = 1e-7,
                    seed: int = 0) -> ConstancyReport:
    """Check C(z/p)^{-1} A(z) C(z) = A0 (and the q-side against B0 when
    given) at generic sample points, with C from continue_gauge."""
    rng = np.random.default_rng(seed)
    max_a = 0.0
    max_b = 0.0
    done = 0
    budget = 10 * n_points
    while done < n_points and budget > 0:
        budget -= 1
        z = _sample_annulus(P.L, rng, 1)[0]
        try:
            Cz = continue_gauge(g, z)
            Czp = continue_gauge(g, z / P.p)
            Az = P.A.eval_at(z)
            got_a = np.linalg.solve(Czp, Az @ Cz)
            scale = max(1.0, np.abs(g.A0).max())
            max_a = max(max_a, float(np.abs(got_a - g.A0).max()) / scale)
            if B0 is not None:
                Czq = continue_gauge(g, z / P.q)
                Bz = P.B.eval_at(z)
                got_b = np.linalg.solve(Czq, Bz @ Cz)
                scale = max(1.0, np.abs(B0).max())
                max_b = max(max_b, float(np.abs(got_b - np.asarray(B0)).max()) / scale)
        except (PoleOnOrbit, *_EVAL_ERRORS):
            continue
        done += 1
    return ConstancyReport(max_a, max_b, done, tol)


def two_route_agreement(P: DifferencePair, g_p: ContinuedGauge, B0,
                        n_points: int = 10, seed: int = 1) -> float:
    """Continue the same series through p-steps (A side) and q-steps
    (B side) and report the worst disagreement at common points."""
    g_q = ContinuedGauge(P.B, np.asarray(B0, dtype=complex), g_p.C_series,
                         g_p.radius, P.q)
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    budget = 10 * n_points
    while done < n_points and budget > 0:
        budget -= 1
        z = _sample_annulus(P.L, rng, 1)[0]
        try:
            va = continue_gauge(g_p, z)
            vb = continue_gauge(g_q, z)
        except (PoleOnOrbit, *_EVAL_ERRORS):
            continue
        worst = max(worst, float(np.abs(va - vb).max()) / max(1.0, float(np.abs(va).max())))
        done += 1
    return worst
