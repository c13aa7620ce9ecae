"""Laurent-polynomial descent solvers: the scalar scaling equation
h(z/p) = t h(z) + g(z), triangular systems of such equations, and a demo
report exhibiting difference equations with elliptic coefficients for
explicit ring members.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import EllipticExpr, residue_at, zeta_e, z_var
from .weierstrass import Lattice


class NotSatisfied(ValueError):
    pass


class Obstructed(ValueError):
    pass


class LaurentPolynomial:
    """Finite map exponent -> complex coefficient with exact
    coefficient-wise arithmetic."""

    def __init__(self, coeffs=None):
        self.coeffs: dict = {}
        for n, c in dict(coeffs or {}).items():
            c = complex(c)
            if c != 0:
                self.coeffs[int(n)] = c

    @classmethod
    def zero(cls) -> "LaurentPolynomial":
        return cls()

    @classmethod
    def monomial(cls, n: int, c: complex = 1.0) -> "LaurentPolynomial":
        return cls({n: c})

    def __getitem__(self, n: int) -> complex:
        return self.coeffs.get(int(n), 0.0)

    @property
    def support(self) -> list:
        return sorted(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def chop(self, tol: float) -> "LaurentPolynomial":
        return LaurentPolynomial(
            {n: c for n, c in self.coeffs.items() if abs(c) > tol})

    def __add__(self, other):
        out = dict(self.coeffs)
        for n, c in other.coeffs.items():
            out[n] = out.get(n, 0.0) + c
        return LaurentPolynomial(out)

    def __sub__(self, other):
        out = dict(self.coeffs)
        for n, c in other.coeffs.items():
            out[n] = out.get(n, 0.0) - c
        return LaurentPolynomial(out)

    def scale(self, c: complex) -> "LaurentPolynomial":
        return LaurentPolynomial({n: a * c for n, a in self.coeffs.items()})

    def __mul__(self, other):
        out: dict = {}
        for n, a in self.coeffs.items():
            for m, b in other.coeffs.items():
                out[n + m] = out.get(n + m, 0.0) + a * b
        return LaurentPolynomial(out)

    def scale_argument(self, s: complex) -> "LaurentPolynomial":
        """z -> s*z on the argument: coefficient n picks up s^n."""
        return LaurentPolynomial({n: a * s ** n for n, a in self.coeffs.items()})

    def evaluate(self, z: complex) -> complex:
        return sum(c * z ** n for n, c in self.coeffs.items())

    def __eq__(self, other):
        return isinstance(other, LaurentPolynomial) and self.coeffs == other.coeffs

    def __repr__(self):
        if not self.coeffs:
            return "0"
        return " + ".join(f"({c})z^{n}" for n, c in sorted(self.coeffs.items()))


@dataclass(frozen=True)
class Obstruction:
    exponent: int
    coefficient: complex

    def __repr__(self):
        return (f"Obstruction(resonant exponent {self.exponent}, "
                f"coefficient {self.coefficient})")


@dataclass
class ScalingSolution:
    h: LaurentPolynomial
    free_exponents: tuple = ()


def _resonant_exponent(t: complex, p: int, lo: int, hi: int,
                       tol: float = 1e-12):
    """The n in [lo, hi] with p^{-n} = t, if any."""
    for n in range(lo, hi + 1):
        if abs(p ** (-n) - t) <= tol * max(1.0, abs(t)):
            return n
    return None


def solve_scaling_equation(t: complex, g: LaurentPolynomial, p: int,
                           zero_tol: float = 1e-10):
    """Solve h(z/p) = t h(z) + g(z) coefficient-wise:
    h_n = g_n / (p^{-n} - t).

    Returns a ScalingSolution, or an Obstruction value when t = p^{-n}
    for an n in supp(g) with g_n != 0 (below zero_tol counts as zero).
    When t = p^{-n} and g_n = 0 the coefficient h_n is a free parameter
    (reported, set to 0).
    """
    t = complex(t)
    coeffs: dict = {}
    free: list = []
    supp = g.support
    lo = min(supp) - 1 if supp else -1
    hi = max(supp) + 1 if supp else 1
    res = _resonant_exponent(t, p, min(lo, -60), max(hi, 60))
    scale = max((abs(g[n]) for n in supp), default=1.0)
    for n in supp:
        denom = p ** (-n) - t
        if n == res:
            if abs(g[n]) > zero_tol * max(1.0, scale):
                return Obstruction(n, g[n])
            continue
        coeffs[n] = g[n] / denom
    if res is not None:
        free.append(res)
    return ScalingSolution(LaurentPolynomial(coeffs), tuple(free))


def scaling_residual(h: LaurentPolynomial, t: complex, g: LaurentPolynomial,
                     p: int, chop_tol: float | None = None) -> LaurentPolynomial:
    """h(z/p) - t h(z) - g(z); zero for a valid solution (coefficients
    below roundoff relative to the data are chopped)."""
    r = h.scale_argument(1.0 / p) - h.scale(t) - g
    if chop_tol is None:
        scale = max([abs(c) for c in g.coeffs.values()]
                    + [abs(t) * abs(c) for c in h.coeffs.values()] + [1.0])
        chop_tol = 1e-13 * scale
    return r.chop(chop_tol)


def solve_triangular_system(T, h_data, p: int, order: int | None = None):
    """Given constant invertible T and truncated series data h_j
    (coefficient dicts) satisfying h_j(z/p) = sum_i T[i,j] h_i(z) to
    truncation, certify that each h_j is the Laurent polynomial matching
    its data.

    Schur-triangularize T = Q R Q*, solve the chain of scalar scaling
    equations for the transformed components top-down (component j sees
    only components < j as inhomogeneity), transform back, and check the
    result against the input data.
    """
    import scipy.linalg

    T = np.asarray(T, dtype=complex)
    r = T.shape[0]
    if T.shape != (r, r):
        raise ValueError("T must be square")
    if abs(np.linalg.det(T)) < 1e-12:
        raise ValueError("T must be invertible")
    data = [LaurentPolynomial(d) if not isinstance(d, LaurentPolynomial) else d
            for d in h_data]
    if len(data) != r:
        raise ValueError("need one component per row of T")
    # the relation reads h(z/p) = T^t h(z) componentwise
    Tt = T.T
    R, Q = scipy.linalg.schur(Tt, output="complex")  # Tt = Q R Q^H
    # transformed components y = Q^H h satisfy y(z/p) = R y(z)
    exps = sorted({n for d in data for n in d.support})
    y = []
    for i in range(r):
        y.append(LaurentPolynomial(
            {n: sum(np.conj(Q[k, i]) * data[k][n] for k in range(r)) for n in exps}))
    solved: dict = {}
    for i in range(r - 1, -1, -1):
        # R is upper triangular: component i is forced by components > i
        g = LaurentPolynomial.zero()
        for k in range(i + 1, r):
            g = g + solved[k].scale(R[i, k])
        # y_i(z/p) = R[i,i] y_i + g  =>  solve with the scalar machinery,
        # but the data already proposes y_i; certify it instead of
        # re-deriving, then cross-check via the scalar solve
        resid = scaling_residual(y[i], R[i, i], g, p)
        if not all(abs(c) < 1e-8 for c in resid.coeffs.values()):
            raise NotSatisfied(f"component {i} fails its scaling relation: {resid}")
        sol = solve_scaling_equation(R[i, i], g, p)
        if isinstance(sol, Obstruction):
            raise Obstructed(str(sol))
        # the scalar solution matches the data up to free resonant modes
        diff = y[i] - sol.h
        for n in diff.support:
            if n not in sol.free_exponents and abs(diff[n]) > 1e-8:
                raise NotSatisfied(
                    f"component {i} disagrees with the chain solve at z^{n}")
        solved[i] = y[i]
    out = []
    for k in range(r):
        out.append(LaurentPolynomial(
            {n: sum(Q[k, i] * solved[i][n] for i in range(r)) for n in exps}))
    return out


# ---- ring-membership demo ---------------------------------------------

@dataclass
class MembershipReport:
    name: str
    p_side_elliptic: bool
    q_side_elliptic: bool
    max_residual: float
    details: str = ""

    @property
    def passed(self) -> bool:
        return self.p_side_elliptic and self.q_side_elliptic


def _elliptic_witness(e: EllipticExpr, L: Lattice, scale: int = 1,
                      n_probe: int = 12, tol: float = 1e-8,
                      seed: int = 0) -> float:
    """Worst relative |e(z+omega) - e(z)| over random z, for translations
    by the basis of the index-scale^2 sublattice scale*(lattice)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    budget = 10 * n_probe
    while done < n_probe and budget > 0:
        budget -= 1
        z = ((0.07 + 0.83 * rng.random()) * L.omega1
             + (0.07 + 0.83 * rng.random()) * L.omega2)
        try:
            base = e.eval(z)
            d1 = abs(e.eval(z + scale * L.omega1) - base)
            d2 = abs(e.eval(z + scale * L.omega2) - base)
        except ArithmeticError:
            continue
        worst = max(worst, (d1 + d2) / max(1.0, abs(base)))
        done += 1
    return worst


def r_ring_membership_demo(name: str, L: Lattice, p: int, q: int,
                           tol: float = 1e-8) -> MembershipReport:
    """Exhibit the p- and q-side difference data for explicit members of
    the ring generated by z, 1/z and the odd quasi-periodic primitive.

    name in {'z', 'zeta', 'composite'}:
      z      -> p*(z/p) - z = 0: both sides trivially elliptic (zero).
      zeta   -> p*f(z/p) - f(z) is periodic for the p-fold sublattice
                (membership allows coefficients elliptic for a sublattice).
      composite -> an inhomogeneous combination of both generators.
    """
    zeta = zeta_e(1, 0.0, L)
    if name == "z":
        ep = z_var().substitute_scale(p) * p - z_var()
        eq = z_var().substitute_scale(q) * q - z_var()
        # identically zero: residual is exact
        worst = max(abs(ep.eval(0.3 * L.omega1 + 0.2 * L.omega2)),
                    abs(eq.eval(0.3 * L.omega1 + 0.2 * L.omega2)))
        return MembershipReport(name, True, True, worst,
                                "p*sigma(z) - z vanishes identically")
    if name == "zeta":
        ep = zeta.substitute_scale(p) * p - zeta
        eq = zeta.substitute_scale(q) * q - zeta
    elif name == "composite":
        f = zeta + z_var()
        ep = f.substitute_scale(p) * p - f
        eq = f.substitute_scale(q) * q - f
    else:
        raise ValueError(f"unknown demo member {name!r}")
    wp_res = _elliptic_witness(ep, L, scale=p, tol=tol)
    wq_res = _elliptic_witness(eq, L, scale=q, tol=tol, seed=1)
    # residue witness: p*f(z/p) - f(z) has residue p^2 - 1 at the origin
    res_p = abs(residue_at(ep, 0.0) - (p * p - 1))
    res_q = abs(residue_at(eq, 0.0) - (q * q - 1))
    worst = max(wp_res, wq_res, res_p, res_q)
    detail = (f"p-side translation residual {wp_res:.2e} (residue check "
              f"{res_p:.2e}), q-side {wq_res:.2e} ({res_q:.2e})")
    return MembershipReport(name, max(wp_res, res_p) < tol,
                            max(wq_res, res_q) < tol, worst, detail)
