"""Weierstrass special-function numerics for an arbitrary oriented lattice.

Evaluation strategy: the basis is Lagrange-Gauss reduced once at
construction, arguments are reduced into the Voronoi cell of the reduced
basis (tracking quasi-period corrections for zeta), and the Laurent series
at 0 is summed.  Eisenstein values G_4 and G_6 come from the weight-4/6
q-expansions on the reduced basis; the higher G_{2k} follow from the
standard quadratic recursion, extended lazily as far as convergence of the
series demands.  sigma itself is never computed.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .series import LaurentSeries

POLE_EPS = 1e-8  # points closer than this (relative to the shortest period) are poles
_ORIENTATION_EPS = 1e-12


class DegenerateBasis(ValueError):
    """The two generators are R-linearly dependent (within tolerance)."""


class PoleAtLatticePoint(ArithmeticError):
    """Evaluation requested at (or too close to) a lattice point."""


class NotLatticeVector(ValueError):
    """eta() called on a vector that is not in the lattice."""


def _gauss_reduce(w1: complex, w2: complex):
    """Lagrange-Gauss reduction; returns (v1, v2) with |v1| <= |v2| and
    |Re(v2 conj(v1))| <= |v1|^2 / 2, preserving the lattice and orientation."""
    v1, v2 = w1, w2
    for _ in range(200):
        if abs(v2) < abs(v1):
            v1, v2 = v2, v1
        mu = round((v2 * v1.conjugate()).real / abs(v1) ** 2)
        if mu == 0:
            break
        v2 = v2 - mu * v1
    if (v2 / v1).imag < 0:
        v2 = -v2
    return v1, v2


def _eisenstein_q_series(tau: complex, weight: int) -> complex:
    """G_{weight} for the lattice Z + tau*Z via the E_4 / E_6 q-expansions."""
    q = cmath.exp(2j * cmath.pi * tau)
    if weight == 4:
        s = sum(n ** 3 * q ** n / (1 - q ** n) for n in range(1, 60))
        return (cmath.pi ** 4 / 45) * (1 + 240 * s)
    if weight == 6:
        s = sum(n ** 5 * q ** n / (1 - q ** n) for n in range(1, 60))
        return (2 * cmath.pi ** 6 / 945) * (1 - 504 * s)
    raise ValueError(weight)


class Lattice:
    """An oriented rank-2 lattice with cached Eisenstein values.

    Immutable after construction apart from the internal lazily-extended
    Eisenstein cache (extension is deterministic, so concurrent use is safe
    in the usual CPython sense).
    """

    def __init__(self, omega1: complex, omega2: complex, k_max: int = 12):
        omega1 = complex(omega1)
        omega2 = complex(omega2)
        if k_max < 2:
            raise ValueError("k_max must be at least 2")
        denom = abs(omega1) * abs(omega2)
        if denom == 0 or abs((omega2 / omega1).imag) < _ORIENTATION_EPS:
            raise DegenerateBasis(
                f"generators {omega1}, {omega2} do not span a lattice"
            )
        if (omega2 / omega1).imag < 0:
            omega1, omega2 = omega2, omega1
        self.omega1 = omega1
        self.omega2 = omega2
        self.k_max = k_max
        self.w1, self.w2 = _gauss_reduce(omega1, omega2)
        tau = self.w2 / self.w1
        self._G: dict[int, complex] = {
            4: _eisenstein_q_series(tau, 4) / self.w1 ** 4,
            6: _eisenstein_q_series(tau, 6) / self.w1 ** 6,
        }
        for k in range(4, k_max + 1):
            self.G(2 * k)
        # eta on the reduced basis: series at w1/2 (always inside the
        # convergence disk), then the Legendre relation for the second.
        self._eta_w1 = 2 * self._zeta_series(self.w1 / 2)
        self._eta_w2 = (self._eta_w1 * self.w2 - 2j * cmath.pi) / self.w1
        # change of basis omega_i -> reduced basis, exact integer matrix
        a, b = self._coords(self.omega1, basis="reduced")
        c, d = self._coords(self.omega2, basis="reduced")
        self._omega_in_reduced = (
            (round(a), round(b)),
            (round(c), round(d)),
        )

    # hashing by identity: the cache makes value-hashing unsafe, and
    # expression atoms only need a stable key
    __hash__ = object.__hash__

    def __repr__(self):
        return f"Lattice({self.omega1!r}, {self.omega2!r}, k_max={self.k_max})"

    @property
    def shortest(self) -> float:
        return abs(self.w1)

    @property
    def g2(self) -> complex:
        return 60 * self.G(4)

    @property
    def g3(self) -> complex:
        return 140 * self.G(6)

    def G(self, weight: int) -> complex:
        """Eisenstein value G_weight (weight even, >= 4), extending the
        cache by the quadratic recursion when needed."""
        if weight % 2 or weight < 4:
            raise ValueError(f"G defined for even weight >= 4, got {weight}")
        if weight not in self._G:
            n = weight // 2
            for m in range(4, n + 1):
                if 2 * m in self._G:
                    continue
                s = sum(
                    (2 * k - 1) * (2 * m - 2 * k - 1) * self._G[2 * k] * self._G[2 * m - 2 * k]
                    for k in range(2, m - 1)
                )
                self._G[2 * m] = 3 * s / ((2 * m + 1) * (2 * m - 1) * (m - 3))
        return self._G[weight]

    # ---- lattice geometry ---------------------------------------------

    def _coords(self, z: complex, basis: str = "reduced"):
        if basis == "reduced":
            b1, b2 = self.w1, self.w2
        else:
            b1, b2 = self.omega1, self.omega2
        det = b1.real * b2.imag - b1.imag * b2.real
        x = (z.real * b2.imag - z.imag * b2.real) / det
        y = (b1.real * z.imag - b1.imag * z.real) / det
        return x, y

    def reduce_point(self, z: complex):
        """Return (z_red, m, n) with z = z_red + m*w1 + n*w2 and z_red in
        (a neighborhood of) the Voronoi cell of the reduced basis."""
        x, y = self._coords(z)
        m, n = round(x), round(y)
        z_red = z - m * self.w1 - n * self.w2
        # polish: the rounded representative may miss the Voronoi cell
        for dm in (-1, 0, 1):
            for dn in (-1, 0, 1):
                cand = z - (m + dm) * self.w1 - (n + dn) * self.w2
                if abs(cand) < abs(z_red):
                    z_red, m, n = cand, m + dm, n + dn
        return z_red, m, n

    def contains(self, z: complex, eps: float | None = None) -> bool:
        if eps is None:
            eps = POLE_EPS * self.shortest
        z_red, _, _ = self.reduce_point(z)
        return abs(z_red) < eps

    def lattice_coords(self, omega: complex):
        """Integer coordinates of omega in the original basis, or raise."""
        x, y = self._coords(omega, basis="original")
        m, n = round(x), round(y)
        if abs(omega - m * self.omega1 - n * self.omega2) > POLE_EPS * self.shortest:
            raise NotLatticeVector(f"{omega} is not in the lattice")
        return m, n

    # ---- series kernels ------------------------------------------------

    def _series_terms(self, target: float):
        """Number of series terms needed so the tail at the Voronoi radius
        is below target."""
        # |z_red| / |w1| <= 1/sqrt(2) for a Gauss-reduced basis, so each
        # extra order gains at least a factor 1/2
        ratio2 = 0.5
        k, bound = 2, 1.0
        while bound > target and k < 200:
            bound *= ratio2
            k += 1
        return max(k, self.k_max)

    def _sum_series(self, z: complex, head: complex, coeff, start_pow: complex) -> complex:
        # lattices with extra symmetry have many G_{2k} exactly zero, so a
        # single small term must not stop the loop
        total = head
        zz = z * z
        term_pow = start_pow
        small = 0
        for k in range(2, 201):
            term_pow *= zz
            term = coeff(k) * term_pow
            total += term
            if abs(term) < 1e-17 * max(1.0, abs(total)):
                small += 1
                if small >= 3:
                    break
            else:
                small = 0
        return total

    def _zeta_series(self, z: complex) -> complex:
        return self._sum_series(z, 1.0 / z, lambda k: -self.G(2 * k), z)

    def _wp_series(self, z: complex, derivative: int = 0) -> complex:
        zz = z * z
        if derivative == 0:
            return self._sum_series(
                z, 1.0 / zz, lambda k: (2 * k - 1) * self.G(2 * k), 1.0 + 0j
            )
        return self._sum_series(
            z,
            -2.0 / (zz * z),
            lambda k: (2 * k - 1) * (2 * k - 2) * self.G(2 * k),
            1.0 / z,
        )


def make_lattice(omega1: complex, omega2: complex, k_max: int = 12) -> Lattice:
    """Construct an oriented lattice; swaps generators if needed so that
    Im(omega2/omega1) > 0."""
    return Lattice(omega1, omega2, k_max)


def zeta_eval(L: Lattice, z: complex) -> complex:
    """Weierstrass zeta at z, by Voronoi reduction + Laurent series,
    correcting with eta for the subtracted periods."""
    z_red, m, n = L.reduce_point(complex(z))
    if abs(z_red) < POLE_EPS * L.shortest:
        raise PoleAtLatticePoint(f"zeta pole at {z}")
    return L._zeta_series(z_red) + m * L._eta_w1 + n * L._eta_w2


def wp_eval(L: Lattice, z: complex, derivative: int = 0) -> complex:
    """Weierstrass P (derivative=0) or P' (derivative=1) at z."""
    if derivative not in (0, 1):
        raise ValueError("derivative must be 0 or 1")
    z_red, _, _ = L.reduce_point(complex(z))
    if abs(z_red) < POLE_EPS * L.shortest:
        raise PoleAtLatticePoint(f"wp pole at {z}")
    return L._wp_series(z_red, derivative)


def eta(L: Lattice, omega: complex) -> complex:
    """Legendre quasi-period homomorphism eta(omega) for omega in the lattice."""
    omega = complex(omega)
    x, y = L._coords(omega, basis="reduced")
    m, n = round(x), round(y)
    if abs(omega - m * L.w1 - n * L.w2) > POLE_EPS * L.shortest:
        raise NotLatticeVector(f"{omega} is not a lattice vector")
    return m * L._eta_w1 + n * L._eta_w2


def eta_basis(L: Lattice):
    """(eta(omega1), eta(omega2)) for the constructed (oriented) basis."""
    (a, b), (c, d) = L._omega_in_reduced
    return (
        a * L._eta_w1 + b * L._eta_w2,
        c * L._eta_w1 + d * L._eta_w2,
    )


def eisenstein_direct(L: Lattice, weight: int, R: int = 200) -> complex:
    """Truncated double sum of G_weight over |m|,|n| <= R; the slow oracle."""
    ms = np.arange(-R, R + 1)
    grid = ms[:, None] * L.omega1 + ms[None, :] * L.omega2
    grid = grid.astype(complex)
    grid[R, R] = 1.0  # masked below
    vals = grid ** (-weight)
    vals[R, R] = 0.0
    return complex(np.sum(vals))


def zeta_direct(L: Lattice, z: complex, R: int = 120) -> complex:
    """Truncated partial-fraction sum for zeta; slow oracle for tests.

    The raw summand 1/(z-w) + 1/w + z/w^2 leaves an O(|z|^2/R) tail over a
    square truncation, so the kernel is accelerated to z^6/(w^6 (z-w));
    the difference is z^3 G_4 + z^5 G_6 plus odd-weight sums that cancel
    pairwise, and the corrections are taken from the direct double sum so
    the oracle stays independent of the q-series values.
    """
    z = complex(z)
    ms = np.arange(-R, R + 1)
    grid = ms[:, None] * L.omega1 + ms[None, :] * L.omega2
    grid = grid.astype(complex)
    grid[R, R] = 1.0  # masked below
    terms = z ** 6 / (grid ** 6 * (z - grid))
    terms[R, R] = 0.0
    # square-truncation error of the weight-4 sum decays like R^-2, so a
    # one-step Richardson extrapolation recovers ~1e-8 accuracy
    g4 = (4 * eisenstein_direct(L, 4, R=400) - eisenstein_direct(L, 4, R=200)) / 3
    g6 = eisenstein_direct(L, 6, R=max(R, 200))
    return 1.0 / z + complex(np.sum(terms)) - z ** 3 * g4 - z ** 5 * g6


_TAYLOR_FUNCS = ("zeta", "wp", "wp_prime")


def taylor_at(L: Lattice, f: str, z0: complex, N: int) -> LaurentSeries:
    """Taylor/Laurent expansion of zeta, wp or wp' at z0, in t = z - z0.

    Away from the lattice the wp coefficients come from the ODE recursion
    wp'' = 6 wp^2 - g2/2 seeded with (wp(z0), wp'(z0)); zeta is the
    antiderivative of -wp with constant term zeta(z0).  At a lattice point
    the principal part is included (expansion of the translate at 0).
    """
    if f not in _TAYLOR_FUNCS:
        raise ValueError(f"f must be one of {_TAYLOR_FUNCS}")
    z0 = complex(z0)
    z0_red, m, n = L.reduce_point(z0)
    at_pole = abs(z0_red) < POLE_EPS * L.shortest

    if at_pole:
        # Laurent series at 0: wp = 1/t^2 + sum (2k-1) G_{2k} t^{2k-2},
        # zeta = 1/t - sum G_{2k} t^{2k-1}, shifted by eta for the translate
        if f == "zeta":
            s = LaurentSeries.monomial(-1, N)
            for k in range(2, (N + 1) // 2 + 2):
                if 2 * k - 1 > N:
                    break
                s = s - LaurentSeries.monomial(2 * k - 1, N, L.G(2 * k))
            if m or n:
                s = s + (m * L._eta_w1 + n * L._eta_w2)
            return s
        if f == "wp":
            s = LaurentSeries.monomial(-2, N)
            for k in range(2, N // 2 + 2):
                if 2 * k - 2 > N:
                    break
                s = s + LaurentSeries.monomial(2 * k - 2, N, (2 * k - 1) * L.G(2 * k))
            return s
        s = LaurentSeries.monomial(-3, N, -2.0)
        for k in range(2, (N + 3) // 2 + 2):
            if 2 * k - 3 > N:
                break
            s = s + LaurentSeries.monomial(
                2 * k - 3, N, (2 * k - 1) * (2 * k - 2) * L.G(2 * k)
            )
        return s

    # regular point: ODE recursion for wp around z0 (use the reduced
    # representative for accuracy; wp is periodic, zeta needs eta shifts)
    order = N + 2
    c = [0j] * (order + 1)
    c[0] = L._wp_series(z0_red)
    if order >= 1:
        c[1] = L._wp_series(z0_red, 1)
    g2 = L.g2
    for k in range(order - 1):
        conv = sum(c[j] * c[k - j] for j in range(k + 1))
        rhs = 6 * conv - (g2 / 2 if k == 0 else 0)
        c[k + 2] = rhs / ((k + 2) * (k + 1))
    wp_series = LaurentSeries(0, c[: N + 1], N)
    if f == "wp":
        return wp_series
    if f == "wp_prime":
        d = [(k + 1) * c[k + 1] for k in range(N + 1)]
        return LaurentSeries(0, d, N)
    zeta0 = L._zeta_series(z0_red) + m * L._eta_w1 + n * L._eta_w2
    zc = [zeta0] + [-c[k] / (k + 1) for k in range(N)]
    return LaurentSeries(0, zc, N)
