"""Difference pairs (A, B), the consistency equation, gauges and twists.

A pair encodes one rank-r system: the two commuting difference operators
act through A(z) at scale p and B(z) at scale q.  Everything downstream
(formal reduction, continuation, classification) consumes these pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expr import (
    BlockDiag,
    DenominatorZero,
    ExplicitMatrix,
    MatInv,
    MatMul,
    MatrixExpr,
    PoleHit,
)
from .weierstrass import Lattice, PoleAtLatticePoint

_EVAL_ERRORS = (PoleHit, PoleAtLatticePoint, DenominatorZero)


class NotCoprime(ValueError):
    pass


class SingularGauge(ValueError):
    pass


class ZeroTwist(ValueError):
    pass


class MismatchedParameters(ValueError):
    pass


@dataclass
class ConsistencyReport:
    max_residual: float
    series_residual: float
    n_points: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tol and self.series_residual < self.tol


def _sample_annulus(L: Lattice, rng, n: int):
    """Points with 0.05 < |z| < 0.45 * shortest period, well away from
    both the pole at 0 and the nearest lattice points."""
    lo, hi = 0.05 * L.shortest, 0.45 * L.shortest
    out = []
    while len(out) < n:
        r = rng.uniform(lo, hi)
        th = rng.uniform(0, 2 * math.pi)
        out.append(r * complex(math.cos(th), math.sin(th)))
    return out


class DifferencePair:
    """A pair of invertible matrix expressions with scales p and q."""

    def __init__(self, A: MatrixExpr, B: MatrixExpr, p: int, q: int, L: Lattice,
                 allow_mult_indep: bool = False):
        if A.rows != A.cols or B.rows != B.cols or A.rows != B.rows:
            raise ValueError("A, B must be square of equal size")
        if p < 2 or q < 2:
            raise ValueError("p, q must be >= 2")
        if math.gcd(p, q) != 1 and not allow_mult_indep:
            raise NotCoprime(f"gcd({p},{q}) != 1")
        self.A = A
        self.B = B
        self.p = int(p)
        self.q = int(q)
        self.L = L
        self.rank = A.rows
        self.trusted = math.gcd(p, q) == 1
        self._check_generic_invertibility()

    def _check_generic_invertibility(self, n: int = 5, retries: int = 40):
        rng = np.random.default_rng(20240901)
        done = 0
        attempts = 0
        while done < n and attempts < retries:
            attempts += 1
            z = _sample_annulus(self.L, rng, 1)[0]
            try:
                da = np.linalg.det(self.A.eval_at(z))
                db = np.linalg.det(self.B.eval_at(z))
            except _EVAL_ERRORS:
                continue
            if abs(da) < 1e-12 or abs(db) < 1e-12:
                raise SingularGauge("A or B singular at a generic sample point")
            done += 1

    def __repr__(self):
        return f"DifferencePair(rank={self.rank}, p={self.p}, q={self.q})"


def check_consistency(P: DifferencePair, n_samples: int = 20, tol: float = 1e-8,
                      seed: int = 0, series_order: int = 12) -> ConsistencyReport:
    """Evaluate B(z/p) A(z) - A(z/q) B(z) at random annulus points and as a
    truncated series at 0."""
    rng = np.random.default_rng(seed)
    Bp = P.B.substitute_scale(P.p)
    Aq = P.A.substitute_scale(P.q)
    max_res = 0.0
    done = 0
    budget = 10 * n_samples
    while done < n_samples and budget > 0:
        budget -= 1
        z = _sample_annulus(P.L, rng, 1)[0]
        try:
            lhs = Bp.eval_at(z) @ P.A.eval_at(z)
            rhs = Aq.eval_at(z) @ P.B.eval_at(z)
        except _EVAL_ERRORS:
            continue
        scale = max(1.0, float(np.abs(lhs).max()), float(np.abs(rhs).max()))
        max_res = max(max_res, float(np.abs(lhs - rhs).max()) / scale)
        done += 1
    lhs_s = Bp.laurent_at0(series_order) @ P.A.laurent_at0(series_order)
    rhs_s = Aq.laurent_at0(series_order) @ P.B.laurent_at0(series_order)
    scale = max(1.0, lhs_s.max_abs_coeff(), rhs_s.max_abs_coeff())
    series_res = (lhs_s - rhs_s).max_abs_coeff() / scale
    return ConsistencyReport(max_res, series_res, done, tol)


def apply_gauge(P: DifferencePair, C: MatrixExpr) -> DifferencePair:
    """Basis change: (A, B) -> (C(z/p)^-1 A C, C(z/q)^-1 B C)."""
    if C.rows != P.rank or C.cols != P.rank:
        raise ValueError("gauge size mismatch")
    A2 = MatMul(MatInv(C.substitute_scale(P.p)), MatMul(P.A, C))
    B2 = MatMul(MatInv(C.substitute_scale(P.q)), MatMul(P.B, C))
    return DifferencePair(A2, B2, P.p, P.q, P.L,
                          allow_mult_indep=not P.trusted)


def twist_rank1(P: DifferencePair, a: complex, b: complex) -> DifferencePair:
    """Tensor with the rank-1 pair of constants (a, b): A -> aA, B -> bB."""
    if a == 0 or b == 0:
        raise ZeroTwist("twist constants must be nonzero")
    r = P.rank
    Sa = ExplicitMatrix.from_constant(a * np.eye(r))
    Sb = ExplicitMatrix.from_constant(b * np.eye(r))
    return DifferencePair(MatMul(Sa, P.A), MatMul(Sb, P.B), P.p, P.q, P.L,
                          allow_mult_indep=not P.trusted)


def direct_sum(P1: DifferencePair, P2: DifferencePair) -> DifferencePair:
    if (P1.p, P1.q) != (P2.p, P2.q) or P1.L is not P2.L:
        raise MismatchedParameters("pairs must share (p, q) and the lattice")
    return DifferencePair(BlockDiag([P1.A, P2.A]), BlockDiag([P1.B, P2.B]),
                          P1.p, P1.q, P1.L,
                          allow_mult_indep=not (P1.trusted and P2.trusted))
