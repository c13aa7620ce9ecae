"""Divisor-level lab for equivariant sections on a window of the plane:
pullback/cocycle equations, the coordinate-wise order/deprived-part
equivalence, its closure, and the periodic-modification checker.

Everything is finite: sections live on a bounded rectangular window
containing 0, and all lattice translations considered are those keeping
the compared points inside the window.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .weierstrass import Lattice

SPATIAL_TOL = 1e-9


class DimensionMismatch(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


class HypothesisViolated(ValueError):
    pass


@dataclass(frozen=True)
class Window:
    x0: float
    x1: float
    y0: float
    y1: float

    def __contains__(self, z: complex) -> bool:
        return (self.x0 - SPATIAL_TOL <= z.real <= self.x1 + SPATIAL_TOL
                and self.y0 - SPATIAL_TOL <= z.imag <= self.y1 + SPATIAL_TOL)


class DivisorSection:
    """Finitely supported integer multiplicities on a window; point
    identity uses the spatial tolerance."""

    def __init__(self, window: Window, support=None):
        self.window = window
        self.support: list = []  # (point, multiplicity), multiplicity != 0
        for z, m in (support or []):
            self.add_point(complex(z), int(m))

    def _find(self, z: complex) -> int:
        for i, (w, _) in enumerate(self.support):
            if abs(w - z) < SPATIAL_TOL:
                return i
        return -1

    def add_point(self, z: complex, m: int):
        if m == 0:
            return
        if z not in self.window:
            warnings.warn(f"point {z} outside window; clipped")
            return
        i = self._find(z)
        if i < 0:
            self.support.append((z, m))
        else:
            w, old = self.support[i]
            if old + m == 0:
                del self.support[i]
            else:
                self.support[i] = (w, old + m)

    def mult_at(self, z: complex) -> int:
        i = self._find(z)
        return self.support[i][1] if i >= 0 else 0

    def with_mult(self, z: complex, m: int) -> "DivisorSection":
        out = self.copy()
        i = out._find(z)
        if i >= 0:
            del out.support[i]
        out.add_point(z, m)
        return out

    def copy(self) -> "DivisorSection":
        out = DivisorSection(self.window)
        out.support = list(self.support)
        return out

    def __add__(self, other: "DivisorSection") -> "DivisorSection":
        out = self.copy()
        for z, m in other.support:
            out.add_point(z, m)
        return out

    def __sub__(self, other: "DivisorSection") -> "DivisorSection":
        out = self.copy()
        for z, m in other.support:
            out.add_point(z, -m)
        return out

    def equals(self, other: "DivisorSection") -> bool:
        return not (self - other).support

    def __repr__(self):
        return f"DivisorSection({len(self.support)} points)"


# ---- coordinate-wise equivalence --------------------------------------

@dataclass(frozen=True)
class SEquivParams:
    primes: tuple
    modulus: int

    def __post_init__(self):
        if not self.primes:
            raise ValueError("prime set must be nonempty")
        if self.modulus < 1:
            raise ValueError("modulus must be >= 1")
        object.__setattr__(self, "primes", tuple(sorted(set(int(x) for x in self.primes))))


def _ord_and_deprived(n: int, primes) -> tuple:
    orders = []
    rest = n
    for pr in primes:
        e = 0
        while rest % pr == 0:
            rest //= pr
            e += 1
        orders.append(e)
    return tuple(orders), rest


def s_equivalent(u, v, params: SEquivParams) -> bool:
    """Coordinate-wise: matching prime orders and deprived parts congruent
    mod the modulus; a zero coordinate only matches zero."""
    u = list(u)
    v = list(v)
    if len(u) != len(v):
        raise DimensionMismatch(f"{len(u)} vs {len(v)}")
    for a, b in zip(u, v):
        a, b = int(a), int(b)
        if a == 0 or b == 0:
            if a != b:
                return False
            continue
        oa, ra = _ord_and_deprived(a, params.primes)
        ob, rb = _ord_and_deprived(b, params.primes)
        if oa != ob or (ra - rb) % params.modulus != 0:
            return False
    return True


def _class_key(x: int, primes, N: int):
    o, r = _ord_and_deprived(x, primes)
    return (o, r % N)


def closure_equals_modN(p: int, q: int, N: int, box_bound: int,
                        slack_bound: int, d: int = 1,
                        budget: int = 4_000_000):
    """Check that joining same-key classes for the p-side and q-side
    relations connects every congruent-mod-N pair of all-nonzero vectors
    within the box.  Returns (verdict, witness)."""
    if d not in (1, 2):
        raise ValueError("d must be 1 or 2")
    n_elems = (2 * slack_bound + 1) ** d
    if n_elems > budget:
        raise BudgetExceeded(f"{n_elems} vectors exceed the budget")
    coords = [x for x in range(-slack_bound, slack_bound + 1) if x != 0]
    if d == 1:
        elems = [(x,) for x in coords]
    else:
        elems = [(x, y) for x in coords for y in coords]
    index = {e: i for i, e in enumerate(elems)}
    parent = list(range(len(elems)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj

    for primes in ((p,), (q,)):
        groups: dict = {}
        for e in elems:
            key = tuple(_class_key(x, primes, N) for x in e)
            if key in groups:
                union(index[e], groups[key])
            else:
                groups[key] = index[e]
    for e in elems:
        if all(abs(x) <= box_bound for x in e):
            # compare against the smallest all-nonzero congruent vector
            base = tuple(x % N if x % N != 0 else N for x in e)
            if base in index and find(index[e]) != find(index[base]):
                return False, e
    return True, None


# ---- pullback / cocycle ------------------------------------------------

def pullback_scale(s: DivisorSection, p: int) -> DivisorSection:
    """x with multiplicity k maps to p*x with multiplicity k; the result
    represents z -> s(z/p) on the window."""
    out = DivisorSection(s.window)
    for z, m in s.support:
        out.add_point(p * z, m)
    return out


def cocycle_check(s: DivisorSection, divA: DivisorSection, p: int,
                  tol: float = SPATIAL_TOL, core_radius: float = 1e-6) -> bool:
    """Multiset equality of pullback(s) and divA + s at window points.

    Two regions are unconstrained: points whose p-fold contraction leaves
    the window (the equation cannot be evaluated there), and a small core
    around the origin — the germ at 0 is exactly what the modification
    step is allowed to change, and finite inward recursions truncate
    there."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lhs = pullback_scale(s, p)
    rhs = divA + s
    diff = lhs - rhs
    for z, m in diff.support:
        if abs(z) <= core_radius:
            continue
        if z / p in s.window and z in s.window:
            return False
    return True


def _periodic_within_window(sec: DivisorSection, L: Lattice, max_steps: int = 2) -> bool:
    """t_omega-invariance for lattice translations keeping the compared
    points inside the window."""
    shifts = [
        a * L.omega1 + b * L.omega2
        for a in range(-max_steps, max_steps + 1)
        for b in range(-max_steps, max_steps + 1)
        if (a, b) != (0, 0)
    ]
    for z, m in sec.support:
        for w in shifts:
            if z + w in sec.window:
                if sec.mult_at(z + w) != m:
                    return False
    return True


@dataclass
class PeriodicityVerdict:
    periodic: bool
    s_prime: DivisorSection
    detail: str = ""


def periodic_after_modification(s: DivisorSection, divA: DivisorSection,
                                divB: DivisorSection, p: int, q: int,
                                L: Lattice) -> PeriodicityVerdict:
    """If divA, divB are lattice-periodic and both cocycles hold, replace
    the multiplicity at 0 by the common value at nonzero lattice points
    and test invariance of the result."""
    if not _periodic_within_window(divA, L):
        raise HypothesisViolated("divA is not lattice-periodic in the window")
    if not _periodic_within_window(divB, L):
        raise HypothesisViolated("divB is not lattice-periodic in the window")
    if not cocycle_check(s, divA, p):
        raise HypothesisViolated("p-side cocycle fails")
    if not cocycle_check(s, divB, q):
        raise HypothesisViolated("q-side cocycle fails")
    lattice_pts = [
        a * L.omega1 + b * L.omega2
        for a in range(-3, 4)
        for b in range(-3, 4)
        if (a, b) != (0, 0)
    ]
    lattice_pts = [w for w in lattice_pts if w in s.window]
    if not lattice_pts:
        raise HypothesisViolated("window contains no nonzero lattice point")
    vals = {s.mult_at(w) for w in lattice_pts}
    if len(vals) != 1:
        return PeriodicityVerdict(False, s.copy(),
                                  "nonzero lattice points disagree; no "
                                  "modification at 0 can fix this")
    v = vals.pop()
    s_prime = s.with_mult(0.0, v)
    ok = _periodic_within_window(s_prime, L)
    return PeriodicityVerdict(ok, s_prime,
                              "" if ok else "off-lattice support breaks periodicity")


# ---- scenario synthesis ------------------------------------------------

def synthesize_scenario(L: Lattice, p: int, q: int, k: int, rng,
                        half_width: float = 1.55, corrupt: str | None = None):
    """Build (s, divA, divB) on torsion points of level N = p*q*k.

    s is periodic by construction (its multiplicity at class u depends
    only on u mod k) except for a scrambled value at 0; divA and divB are
    the exact cocycle differences, and the mod-k dependence makes both
    lattice-periodic.  corrupt in {None, 'divA', 'point'} optionally
    breaks a hypothesis.
    """
    N = p * q * k
    window = Window(-half_width, half_width, -half_width, half_width)
    f = rng.integers(-2, 3, size=(k, k))
    if f[0, 0] == 0:
        f[0, 0] = 1
    bound = int(np.ceil(half_width / min(abs(L.omega1), abs(L.omega2)))) + 3

    def s_val(u1: int, u2: int) -> int:
        return int(f[u1 % k, u2 % k])

    s = DivisorSection(window)
    for u1 in range(-bound * N, bound * N + 1):
        for u2 in range(-bound * N, bound * N + 1):
            z = (u1 * L.omega1 + u2 * L.omega2) / N
            if z not in window:
                continue
            if u1 == 0 and u2 == 0:
                m = s_val(0, 0) + 1  # wrong germ at 0: needs modification
            else:
                m = s_val(u1, u2)
            if m:
                s.support.append((z, m))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        divA = pullback_scale(s, p) - s
        divB = pullback_scale(s, q) - s
    if corrupt == "divA":
        z0 = (L.omega1 + L.omega2) / N
        divA = divA.with_mult(z0, divA.mult_at(z0) + 1)
    elif corrupt == "point":
        z0 = (L.omega1 + 2 * L.omega2) / N
        s = s.with_mult(z0, s.mult_at(z0) + 3)
    return s, divA, divB
