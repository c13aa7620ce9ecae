"""Truncated Laurent series over C, and matrices of them.

Every series carries an explicit truncation order N: coefficients are known
for exponents n_min..N and nothing is claimed beyond z^N.  Arithmetic never
extends knowledge past what the operands support; products and inverses
shrink the window accordingly.  Coefficients are machine complex numbers and
are *not* pruned during arithmetic (tiny coefficients can signal resonance
blow-ups); pruning happens only in comparisons.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


class ZeroSeries(ZeroDivisionError):
    """Inversion of the (truncated) zero series."""


class SingularMatrix(ZeroDivisionError):
    """Series matrix with no invertible leading coefficient."""


def _as_scale(p):
    if isinstance(p, Fraction):
        return p
    if isinstance(p, int):
        return Fraction(p)
    raise TypeError(f"scale factor must be int or Fraction, got {type(p)!r}")


class LaurentSeries:
    """A Laurent series truncated at order N (inclusive).

    Stored as coefficients for exponents n_min..N.  The leading stored
    coefficient is nonzero unless the series is identically zero on the
    window (empty coefficient list).
    """

    __slots__ = ("n_min", "coeffs", "order")

    def __init__(self, n_min: int, coeffs, order: int | None = None):
        coeffs = [complex(c) for c in coeffs]
        if order is None:
            order = n_min + len(coeffs) - 1 if coeffs else n_min - 1
        # pad with explicit zeros up to the truncation order
        if coeffs and n_min + len(coeffs) - 1 < order:
            coeffs = coeffs + [0j] * (order - (n_min + len(coeffs) - 1))
        # strip exactly-zero leading coefficients so valuation is honest
        while coeffs and coeffs[0] == 0:
            coeffs = coeffs[1:]
            n_min += 1
        if not coeffs:
            n_min = 0
        self.n_min = n_min
        self.coeffs = coeffs
        self.order = order

    # ---- constructors -------------------------------------------------

    @classmethod
    def zero(cls, order: int) -> "LaurentSeries":
        return cls(0, [], order)

    @classmethod
    def const(cls, c, order: int) -> "LaurentSeries":
        return cls(0, [complex(c)], order)

    @classmethod
    def one(cls, order: int) -> "LaurentSeries":
        return cls.const(1.0, order)

    @classmethod
    def monomial(cls, n: int, order: int, c=1.0) -> "LaurentSeries":
        return cls(n, [complex(c)], order)

    # ---- basic queries ------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def valuation(self) -> int | None:
        """Lowest exponent with nonzero stored coefficient, None for zero."""
        return None if self.is_zero else self.n_min

    def coeff(self, n: int) -> complex:
        if self.is_zero or n < self.n_min or n > self.order:
            return 0j
        i = n - self.n_min
        return self.coeffs[i] if i < len(self.coeffs) else 0j

    def coeff_array(self, lo: int, hi: int) -> np.ndarray:
        return np.array([self.coeff(n) for n in range(lo, hi + 1)])

    def __repr__(self):
        if self.is_zero:
            return f"LaurentSeries(0; O(z^{self.order + 1}))"
        terms = ", ".join(
            f"z^{self.n_min + i}:{c:.4g}" for i, c in enumerate(self.coeffs[:6])
        )
        return f"LaurentSeries({terms}{'...' if len(self.coeffs) > 6 else ''}; O(z^{self.order + 1}))"

    # ---- arithmetic ---------------------------------------------------

    def __neg__(self):
        return LaurentSeries(self.n_min, [-c for c in self.coeffs], self.order)

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = LaurentSeries.const(other, self.order)
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        order = min(self.order, other.order)
        if self.is_zero and other.is_zero:
            return LaurentSeries.zero(order)
        lo = min(
            x for x in (self.valuation(), other.valuation()) if x is not None
        )
        coeffs = [self.coeff(n) + other.coeff(n) for n in range(lo, order + 1)]
        return LaurentSeries(lo, coeffs, order)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float, complex)):
            other = LaurentSeries.const(other, self.order)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            if other == 0:
                return LaurentSeries.zero(self.order)
            return LaurentSeries(
                self.n_min, [other * c for c in self.coeffs], self.order
            )
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        if self.is_zero or other.is_zero:
            return LaurentSeries.zero(min(self.order, other.order))
        va, vb = self.n_min, other.n_min
        # the product is trustworthy up to min(Na + vb, Nb + va)
        order = min(self.order + vb, other.order + va)
        n_terms = order - (va + vb) + 1
        a = np.asarray(self.coeffs[:n_terms], dtype=complex)
        b = np.asarray(other.coeffs[:n_terms], dtype=complex)
        prod = np.convolve(a, b)[:n_terms]
        return LaurentSeries(va + vb, list(prod), order)

    __rmul__ = __mul__

    def invert(self) -> "LaurentSeries":
        """Multiplicative inverse; a * a.invert() == 1 + O(z^{order+1-2v})."""
        if self.is_zero:
            raise ZeroSeries("cannot invert the zero series")
        v = self.n_min
        c = self.coeffs
        n = len(c)
        inv = [0j] * n
        inv[0] = 1.0 / c[0]
        for k in range(1, n):
            s = sum(c[j] * inv[k - j] for j in range(1, k + 1))
            inv[k] = -s * inv[0]
        return LaurentSeries(-v, inv, self.order - 2 * v)

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex)):
            return self * (1.0 / other)
        return self * other.invert()

    def pow(self, n: int) -> "LaurentSeries":
        if n < 0:
            return self.invert().pow(-n)
        result = LaurentSeries.one(self.order)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    __pow__ = pow

    # ---- structural operations ---------------------------------------

    def scale_argument(self, p) -> "LaurentSeries":
        """Return a(z/p): the exponent-n coefficient is multiplied by p^{-n}.

        p may be an int or a Fraction (rational scalings stay exact in the
        multiplier before the float conversion).
        """
        p = _as_scale(p)
        coeffs = [
            c * float(p ** (-(self.n_min + i))) for i, c in enumerate(self.coeffs)
        ]
        return LaurentSeries(self.n_min, coeffs, self.order)

    def derivative(self) -> "LaurentSeries":
        coeffs = [
            (self.n_min + i) * c for i, c in enumerate(self.coeffs)
        ]
        return LaurentSeries(self.n_min - 1, coeffs, self.order - 1)

    def antiderivative(self, c0=0.0) -> "LaurentSeries":
        """Termwise antiderivative with constant term c0; rejects z^{-1}."""
        if abs(self.coeff(-1)) > 0:
            raise ValueError("series has a z^-1 term; no Laurent antiderivative")
        out = LaurentSeries.const(c0, self.order + 1)
        for i, c in enumerate(self.coeffs):
            n = self.n_min + i
            if n == -1:
                continue
            out = out + LaurentSeries.monomial(n + 1, self.order + 1, c / (n + 1))
        return out

    def truncate(self, order: int) -> "LaurentSeries":
        if order >= self.order:
            return self
        keep = order - self.n_min + 1
        return LaurentSeries(self.n_min, self.coeffs[:max(keep, 0)], order)

    def evaluate(self, z: complex) -> complex:
        z = complex(z)
        total = 0j
        for i, c in enumerate(self.coeffs):
            total += c * z ** (self.n_min + i)
        return total

    def max_abs_coeff(self, lo: int | None = None) -> float:
        """Largest |coefficient| at exponents >= lo (default: everywhere)."""
        best = 0.0
        for i, c in enumerate(self.coeffs):
            if lo is None or self.n_min + i >= lo:
                best = max(best, abs(c))
        return best

    def allclose(self, other: "LaurentSeries", tol: float = 1e-10) -> bool:
        order = min(self.order, other.order)
        lo_candidates = [v for v in (self.valuation(), other.valuation()) if v is not None]
        if not lo_candidates:
            return True
        lo = min(lo_candidates)
        return all(
            abs(self.coeff(n) - other.coeff(n)) <= tol for n in range(lo, order + 1)
        )


class SeriesMatrix:
    """Matrix with LaurentSeries entries, sharing one truncation order."""

    __slots__ = ("rows", "cols", "entries", "order")

    def __init__(self, entries):
        self.rows = len(entries)
        self.cols = len(entries[0]) if self.rows else 0
        order = min(e.order for row in entries for e in row)
        self.entries = [[e.truncate(order) for e in row] for row in entries]
        self.order = order

    @classmethod
    def identity(cls, r: int, order: int) -> "SeriesMatrix":
        return cls(
            [
                [
                    LaurentSeries.one(order) if i == j else LaurentSeries.zero(order)
                    for j in range(r)
                ]
                for i in range(r)
            ]
        )

    @classmethod
    def from_constant(cls, M, order: int) -> "SeriesMatrix":
        M = np.asarray(M, dtype=complex)
        return cls(
            [[LaurentSeries.const(M[i, j], order) for j in range(M.shape[1])]
             for i in range(M.shape[0])]
        )

    @classmethod
    def from_coeff_matrices(cls, n_min: int, mats, order: int | None = None):
        """Build from a list of constant matrices, mats[k] = coefficient of z^{n_min+k}."""
        mats = [np.asarray(m, dtype=complex) for m in mats]
        r, c = mats[0].shape
        if order is None:
            order = n_min + len(mats) - 1
        entries = [
            [
                LaurentSeries(n_min, [m[i, j] for m in mats], order)
                for j in range(c)
            ]
            for i in range(r)
        ]
        return cls(entries)

    def __getitem__(self, ij):
        return self.entries[ij[0]][ij[1]]

    def __repr__(self):
        return f"SeriesMatrix({self.rows}x{self.cols}; O(z^{self.order + 1}))"

    def coeff_matrix(self, n: int) -> np.ndarray:
        return np.array(
            [[self.entries[i][j].coeff(n) for j in range(self.cols)]
             for i in range(self.rows)]
        )

    def constant(self) -> np.ndarray:
        return self.coeff_matrix(0)

    def valuation(self) -> int | None:
        vals = [
            e.valuation()
            for row in self.entries
            for e in row
            if e.valuation() is not None
        ]
        return min(vals) if vals else None

    def evaluate(self, z: complex) -> np.ndarray:
        return np.array(
            [[e.evaluate(z) for e in row] for row in self.entries]
        )

    def __neg__(self):
        return SeriesMatrix([[-e for e in row] for row in self.entries])

    def __add__(self, other):
        return SeriesMatrix(
            [
                [self.entries[i][j] + other.entries[i][j] for j in range(self.cols)]
                for i in range(self.rows)
            ]
        )

    def __sub__(self, other):
        return self + (-other)

    def __matmul__(self, other: "SeriesMatrix") -> "SeriesMatrix":
        assert self.cols == other.rows
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = None
                for k in range(self.cols):
                    term = self.entries[i][k] * other.entries[k][j]
                    acc = term if acc is None else acc + term
                row.append(acc)
            out.append(row)
        return SeriesMatrix(out)

    def scalar_mul(self, c) -> "SeriesMatrix":
        return SeriesMatrix([[e * c for e in row] for row in self.entries])

    def series_mul(self, s: LaurentSeries) -> "SeriesMatrix":
        return SeriesMatrix([[e * s for e in row] for row in self.entries])

    def scale_argument(self, p) -> "SeriesMatrix":
        return SeriesMatrix(
            [[e.scale_argument(p) for e in row] for row in self.entries]
        )

    def truncate(self, order: int) -> "SeriesMatrix":
        return SeriesMatrix(
            [[e.truncate(order) for e in row] for row in self.entries]
        )

    def shift(self, k: int) -> "SeriesMatrix":
        """Multiply every entry by z^k."""
        return SeriesMatrix(
            [
                [
                    LaurentSeries(e.n_min + k, e.coeffs, e.order + k)
                    for e in row
                ]
                for row in self.entries
            ]
        )

    def invert(self) -> "SeriesMatrix":
        """Inverse via clearing the common z-power and a Neumann series.

        Requires the constant-term matrix after clearing z^v to be
        invertible (the invertibility criterion for G(C((z)))).
        """
        v = self.valuation()
        if v is None:
            raise SingularMatrix("zero matrix")
        M = self.shift(-v) if v != 0 else self
        M0 = M.constant()
        if abs(np.linalg.det(M0)) < 1e-300 or not np.all(np.isfinite(M0)):
            # mixed-valuation matrices (e.g. unipotent with polar entries)
            # can be invertible even with a singular cleared leading block
            return self._invert_adjugate()
        M0inv = np.linalg.inv(M0)
        # M = M0 (I + E) with val(E) >= 1
        E = SeriesMatrix.from_constant(M0inv, M.order) @ M
        E = E - SeriesMatrix.identity(self.rows, M.order)
        # Neumann series sum (-E)^k, k <= order
        acc = SeriesMatrix.identity(self.rows, M.order)
        term = SeriesMatrix.identity(self.rows, M.order)
        for _ in range(max(M.order, 0)):
            term = (term @ E).scalar_mul(-1)
            if term.valuation() is None:
                break
            acc = acc + term
        out = acc @ SeriesMatrix.from_constant(M0inv, M.order)
        return out.shift(-v)

    def _det(self) -> LaurentSeries:
        order = self.order
        n = self.rows
        if n > 6:
            raise SingularMatrix("adjugate fallback limited to size <= 6")
        total = LaurentSeries.zero(order)
        for perm in itertools.permutations(range(n)):
            sign = 1.0
            seen = list(perm)
            for i in range(n):
                for j in range(i + 1, n):
                    if seen[i] > seen[j]:
                        sign = -sign
            term = LaurentSeries.const(sign, order)
            for i in range(n):
                term = term * self.entries[i][perm[i]]
            total = total + term
        return total

    def _minor(self, i: int, j: int) -> "SeriesMatrix":
        return SeriesMatrix(
            [
                [e for cj, e in enumerate(row) if cj != j]
                for ri, row in enumerate(self.entries)
                if ri != i
            ]
        )

    def _invert_adjugate(self) -> "SeriesMatrix":
        try:
            dinv = self._det().invert()
        except ZeroSeries:
            raise SingularMatrix("determinant series is zero")
        n = self.rows
        if n == 1:
            return SeriesMatrix([[dinv]])
        adj = [[self._minor(j, i)._det() for j in range(n)] for i in range(n)]
        for i in range(n):
            for j in range(n):
                if (i + j) % 2:
                    adj[i][j] = -adj[i][j]
                adj[i][j] = adj[i][j] * dinv
        return SeriesMatrix(adj)

    def max_abs_coeff(self, lo: int | None = None) -> float:
        return max(e.max_abs_coeff(lo) for row in self.entries for e in row)

    def allclose(self, other: "SeriesMatrix", tol: float = 1e-10) -> bool:
        return all(
            self.entries[i][j].allclose(other.entries[i][j], tol)
            for i in range(self.rows)
            for j in range(self.cols)
        )
