"""Closed expression algebra for the functions appearing in matrix entries.

Atoms are the coordinate m*z, constants, and zeta / wp / wp' evaluated at
m*z - z0 for a positive rational multiplier m.  The algebra is closed under
sum, product, integer powers, quotients, and the substitution z -> z/p, so
one tree supports exact rescaling, numeric evaluation, and Laurent
expansion at 0.  Quotients are evaluated numerically and series-wise only;
nothing is ever inverted symbolically.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .series import LaurentSeries, SeriesMatrix, ZeroSeries
from .weierstrass import Lattice, PoleAtLatticePoint, taylor_at, wp_eval, zeta_eval

POLE_TOL = 1e-10


class PoleHit(ArithmeticError):
    pass


class DenominatorZero(ArithmeticError):
    pass


class DenominatorIdenticallyZero(ZeroDivisionError):
    pass


class HigherOrderPole(ValueError):
    pass


class NotElliptic(ValueError):
    pass


def _as_fraction(m) -> Fraction:
    f = Fraction(m)
    if f <= 0:
        raise ValueError(f"multiplier must be positive, got {m}")
    return f


def _as_expr(x) -> "EllipticExpr":
    if isinstance(x, EllipticExpr):
        return x
    if isinstance(x, (int, float, complex, Fraction)):
        return Const(complex(x))
    raise TypeError(f"cannot coerce {x!r} to an expression")


class EllipticExpr:
    """Base node; subclasses are frozen dataclasses forming a tagged union."""

    def eval(self, z: complex) -> complex:
        raise NotImplementedError

    def substitute_scale(self, p: int, direction: str = "divide") -> "EllipticExpr":
        raise NotImplementedError

    def laurent_at0(self, N: int) -> LaurentSeries:
        raise NotImplementedError

    def lattices(self) -> set:
        return set()

    def __add__(self, other):
        return Sum((self, _as_expr(other)))

    __radd__ = __add__

    def __neg__(self):
        return Prod((Const(-1.0), self))

    def __sub__(self, other):
        return Sum((self, -_as_expr(other)))

    def __rsub__(self, other):
        return Sum((_as_expr(other), -self))

    def __mul__(self, other):
        return Prod((self, _as_expr(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Quot(self, _as_expr(other))

    def __rtruediv__(self, other):
        return Quot(_as_expr(other), self)

    def __pow__(self, n: int):
        return IntPow(self, int(n))


@dataclass(frozen=True)
class Const(EllipticExpr):
    c: complex

    def eval(self, z):
        return self.c

    def substitute_scale(self, p, direction="divide"):
        return self

    def laurent_at0(self, N):
        return LaurentSeries.const(self.c, N)


@dataclass(frozen=True)
class ZAtom(EllipticExpr):
    """The function m*z; carrying the multiplier keeps substitution exact."""

    m: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "m", _as_fraction(self.m))

    def eval(self, z):
        return float(self.m) * z

    def substitute_scale(self, p, direction="divide"):
        m = self.m / p if direction == "divide" else self.m * p
        return ZAtom(m)

    def laurent_at0(self, N):
        return LaurentSeries.monomial(1, N, float(self.m))


@dataclass(frozen=True)
class ZetaAtom(EllipticExpr):
    m: Fraction
    z0: complex
    L: Lattice

    def __post_init__(self):
        object.__setattr__(self, "m", _as_fraction(self.m))
        object.__setattr__(self, "z0", complex(self.z0))

    def eval(self, z):
        return zeta_eval(self.L, float(self.m) * z - self.z0)

    def substitute_scale(self, p, direction="divide"):
        m = self.m / p if direction == "divide" else self.m * p
        return ZetaAtom(m, self.z0, self.L)

    def laurent_at0(self, N):
        s = taylor_at(self.L, "zeta", -self.z0, N)
        return s.scale_argument(1 / self.m)

    def lattices(self):
        return {self.L}


@dataclass(frozen=True)
class WpAtom(EllipticExpr):
    m: Fraction
    z0: complex
    L: Lattice
    deriv: int = 0

    def __post_init__(self):
        object.__setattr__(self, "m", _as_fraction(self.m))
        object.__setattr__(self, "z0", complex(self.z0))
        if self.deriv not in (0, 1):
            raise ValueError("deriv must be 0 or 1")

    def eval(self, z):
        v = wp_eval(self.L, float(self.m) * z - self.z0, derivative=self.deriv)
        return v

    def substitute_scale(self, p, direction="divide"):
        m = self.m / p if direction == "divide" else self.m * p
        return WpAtom(m, self.z0, self.L, self.deriv)

    def laurent_at0(self, N):
        f = "wp" if self.deriv == 0 else "wp_prime"
        s = taylor_at(self.L, f, -self.z0, N)
        return s.scale_argument(1 / self.m)

    def lattices(self):
        return {self.L}


@dataclass(frozen=True)
class Sum(EllipticExpr):
    terms: tuple

    def eval(self, z):
        return sum(t.eval(z) for t in self.terms)

    def substitute_scale(self, p, direction="divide"):
        return Sum(tuple(t.substitute_scale(p, direction) for t in self.terms))

    def laurent_at0(self, N):
        out = LaurentSeries.zero(N)
        for t in self.terms:
            out = out + t.laurent_at0(N)
        return out

    def lattices(self):
        return set().union(*(t.lattices() for t in self.terms))


@dataclass(frozen=True)
class Prod(EllipticExpr):
    factors: tuple

    def eval(self, z):
        out = 1.0 + 0j
        for f in self.factors:
            out *= f.eval(z)
        return out

    def substitute_scale(self, p, direction="divide"):
        return Prod(tuple(f.substitute_scale(p, direction) for f in self.factors))

    def laurent_at0(self, N):
        out = LaurentSeries.const(1.0, N)
        for f in self.factors:
            out = out * f.laurent_at0(N)
        return out

    def lattices(self):
        return set().union(*(f.lattices() for f in self.factors))


@dataclass(frozen=True)
class IntPow(EllipticExpr):
    base: EllipticExpr
    n: int

    def eval(self, z):
        v = self.base.eval(z)
        if self.n < 0 and abs(v) < POLE_TOL:
            raise DenominatorZero(f"base vanishes at {z}")
        return v ** self.n

    def substitute_scale(self, p, direction="divide"):
        return IntPow(self.base.substitute_scale(p, direction), self.n)

    def laurent_at0(self, N):
        s = self.base.laurent_at0(N)
        if self.n < 0:
            try:
                s = s.invert()
            except ZeroSeries:
                raise DenominatorIdenticallyZero("negative power of zero series")
            return s.pow(-self.n)
        return s.pow(self.n)

    def lattices(self):
        return self.base.lattices()


@dataclass(frozen=True)
class Quot(EllipticExpr):
    num: EllipticExpr
    den: EllipticExpr

    def eval(self, z):
        d = self.den.eval(z)
        if abs(d) < POLE_TOL:
            raise DenominatorZero(f"denominator vanishes at {z}")
        return self.num.eval(z) / d

    def substitute_scale(self, p, direction="divide"):
        return Quot(
            self.num.substitute_scale(p, direction),
            self.den.substitute_scale(p, direction),
        )

    def laurent_at0(self, N):
        try:
            dinv = self.den.laurent_at0(N).invert()
        except ZeroSeries:
            raise DenominatorIdenticallyZero("quotient by zero series")
        return self.num.laurent_at0(N) * dinv

    def lattices(self):
        return self.num.lattices() | self.den.lattices()


# ---- convenience constructors -----------------------------------------

def const(c) -> Const:
    return Const(complex(c))


def z_var(m=1) -> ZAtom:
    return ZAtom(Fraction(m))


def zeta_e(m, z0, L: Lattice) -> ZetaAtom:
    return ZetaAtom(Fraction(m), z0, L)


def wp_e(m, z0, L: Lattice, deriv: int = 0) -> WpAtom:
    return WpAtom(Fraction(m), z0, L, deriv)


# ---- residues ----------------------------------------------------------

def _contour_coeff(e: EllipticExpr, center: complex, radius: float, k: int, n: int = 512):
    """(1/2 pi i) * integral of e(z) (z-center)^{k-1} dz on the circle."""
    total = 0j
    for j in range(n):
        w = radius * cmath.exp(2j * cmath.pi * j / n)
        total += e.eval(center + w) * w ** (k - 1) * w
    return total / n


def residue_at(e: EllipticExpr, pole: complex, radius: float | None = None) -> complex:
    """Residue at a simple pole by trapezoid contour quadrature."""
    pole = complex(pole)
    if radius is None:
        ls = e.lattices()
        base = min((L.shortest for L in ls), default=1.0)
        radius = 0.04 * base
    c1 = _contour_coeff(e, pole, radius, 1)
    c2 = _contour_coeff(e, pole, radius, 2)
    if abs(c2) > 1e-6 * max(1.0, abs(c1)) * radius:
        raise HigherOrderPole(f"pole at {pole} has order > 1 (c_-2 ~ {abs(c2):.2e})")
    return c1


def _common_lattice(e: EllipticExpr) -> Lattice:
    ls = e.lattices()
    if len(ls) != 1:
        raise NotElliptic("expression must reference exactly one lattice")
    return next(iter(ls))


def _is_periodic(e: EllipticExpr, L: Lattice, tol: float = 1e-8) -> bool:
    rng = np.random.default_rng(1234)
    for _ in range(6):
        x, y = rng.uniform(0.1, 0.9, size=2)
        z = x * L.omega1 + y * L.omega2 + 0.0123 + 0.0077j
        try:
            base = e.eval(z)
            for w in (L.omega1, L.omega2):
                if abs(e.eval(z + w) - base) > tol * max(1.0, abs(base)):
                    return False
        except (PoleHit, PoleAtLatticePoint, DenominatorZero):
            continue
    return True


def residue_sum_fundamental(e: EllipticExpr, grid: int = 400) -> complex:
    """Sum of residues of an elliptic expression over one fundamental
    parallelogram, found by grid scan for large |e| plus Newton refinement
    of zeros of 1/e, then contour quadrature per pole."""
    L = _common_lattice(e)
    if not _is_periodic(e, L):
        raise NotElliptic("expression is not periodic for its lattice")
    # generic offset so no pole orbit lands on the parallelogram boundary
    shift = 0.0917 * L.omega1 + 0.0413 * L.omega2
    coarse = min(grid, 140)  # scan grid; Newton refinement recovers accuracy
    # threshold: a simple pole with residue rho shows |e| ~ rho / dist, and
    # the nearest grid node is within ~1/coarse of it, so even small
    # residues clear a low bar
    threshold = 8.0
    pts = []
    for i in range(coarse):
        for j in range(coarse):
            z = shift + ((i + 0.5) / coarse) * L.omega1 + ((j + 0.5) / coarse) * L.omega2
            try:
                v = e.eval(z)
            except (PoleHit, PoleAtLatticePoint, DenominatorZero):
                pts.append(z)
                continue
            if abs(v) > threshold:
                pts.append(z)
    # Newton on f = 1/e with numeric derivative
    h = 1e-6 * L.shortest
    poles = []
    for z in pts:
        w = z
        ok = False
        for _ in range(60):
            try:
                f = 1.0 / e.eval(w)
                fp = (1.0 / e.eval(w + h) - 1.0 / e.eval(w - h)) / (2 * h)
            except (PoleHit, PoleAtLatticePoint, DenominatorZero):
                ok = True
                break
            if abs(fp) < 1e-300:
                break
            step = f / fp
            w = w - step
            if abs(step) < 1e-12 * L.shortest:
                ok = True
                break
        if not ok:
            continue
        # keep only poles inside the (shifted) fundamental parallelogram
        x, y = L._coords(w - shift, basis="original")
        if not (-1e-9 <= x < 1 - 1e-9 and -1e-9 <= y < 1 - 1e-9):
            continue
        if all(abs(w - pz) > 1e-6 * L.shortest for pz in poles):
            poles.append(w)
    total = 0j
    for w in poles:
        r = 0.25 * min(
            [L.shortest] + [abs(w - other) for other in poles if other is not w]
        )
        total += _contour_coeff(e, w, r, 1)
    return total


# ---- JSON encoding -----------------------------------------------------

def _cplx(c: complex):
    return [c.real, c.imag]


def _frac(m: Fraction):
    return [m.numerator, m.denominator]


def lattice_to_json(L: Lattice) -> dict:
    return {"omega1": _cplx(L.omega1), "omega2": _cplx(L.omega2)}


def lattice_from_json(d: dict, k_max: int = 12) -> Lattice:
    return Lattice(complex(*d["omega1"]), complex(*d["omega2"]), k_max)


def expr_to_json(e: EllipticExpr) -> dict:
    if isinstance(e, Const):
        return {"atom": "const", "c": _cplx(e.c)}
    if isinstance(e, ZAtom):
        return {"atom": "z", "m": _frac(e.m)}
    if isinstance(e, ZetaAtom):
        return {"atom": "zeta", "m": _frac(e.m), "z0": _cplx(e.z0),
                "lattice": lattice_to_json(e.L)}
    if isinstance(e, WpAtom):
        return {"atom": "wp", "m": _frac(e.m), "z0": _cplx(e.z0),
                "lattice": lattice_to_json(e.L), "deriv": e.deriv}
    if isinstance(e, Sum):
        return {"node": "sum", "terms": [expr_to_json(t) for t in e.terms]}
    if isinstance(e, Prod):
        return {"node": "prod", "factors": [expr_to_json(f) for f in e.factors]}
    if isinstance(e, IntPow):
        return {"node": "pow", "base": expr_to_json(e.base), "n": e.n}
    if isinstance(e, Quot):
        return {"node": "quot", "num": expr_to_json(e.num), "den": expr_to_json(e.den)}
    raise TypeError(f"unknown node {e!r}")


def expr_from_json(d: dict, lattice_cache: dict | None = None) -> EllipticExpr:
    """Decode; identical lattice JSON resolves to one shared Lattice object."""
    if lattice_cache is None:
        lattice_cache = {}

    def get_lattice(ld):
        key = (tuple(ld["omega1"]), tuple(ld["omega2"]))
        if key not in lattice_cache:
            lattice_cache[key] = lattice_from_json(ld)
        return lattice_cache[key]

    if "atom" in d:
        a = d["atom"]
        if a == "const":
            return Const(complex(*d["c"]))
        if a == "z":
            return ZAtom(Fraction(*d["m"]))
        if a == "zeta":
            return ZetaAtom(Fraction(*d["m"]), complex(*d["z0"]), get_lattice(d["lattice"]))
        if a == "wp":
            return WpAtom(Fraction(*d["m"]), complex(*d["z0"]),
                          get_lattice(d["lattice"]), d.get("deriv", 0))
        raise ValueError(f"unknown atom {a}")
    n = d["node"]
    if n == "sum":
        return Sum(tuple(expr_from_json(t, lattice_cache) for t in d["terms"]))
    if n == "prod":
        return Prod(tuple(expr_from_json(f, lattice_cache) for f in d["factors"]))
    if n == "pow":
        return IntPow(expr_from_json(d["base"], lattice_cache), d["n"])
    if n == "quot":
        return Quot(expr_from_json(d["num"], lattice_cache),
                    expr_from_json(d["den"], lattice_cache))
    raise ValueError(f"unknown node {n}")


# ---- matrix expressions ------------------------------------------------

class MatrixExpr:
    """Composite matrix-valued expressions.  Inverses are evaluated
    numerically (pointwise) or series-wise (at 0), never symbolically."""

    rows: int
    cols: int

    def eval_at(self, z: complex) -> np.ndarray:
        raise NotImplementedError

    def laurent_at0(self, N: int) -> SeriesMatrix:
        raise NotImplementedError

    def substitute_scale(self, p: int, direction: str = "divide") -> "MatrixExpr":
        raise NotImplementedError

    def lattices(self) -> set:
        return set()

    def __matmul__(self, other):
        return MatMul(self, other)

    def inv(self):
        return MatInv(self)


class ExplicitMatrix(MatrixExpr):
    def __init__(self, entries):
        self.entries = tuple(tuple(_as_expr(e) for e in row) for row in entries)
        self.rows = len(self.entries)
        self.cols = len(self.entries[0])
        if any(len(r) != self.cols for r in self.entries):
            raise ValueError("ragged matrix")

    @staticmethod
    def from_constant(M) -> "ExplicitMatrix":
        M = np.asarray(M, dtype=complex)
        return ExplicitMatrix([[Const(M[i, j]) for j in range(M.shape[1])]
                               for i in range(M.shape[0])])

    @staticmethod
    def identity(n: int) -> "ExplicitMatrix":
        return ExplicitMatrix.from_constant(np.eye(n))

    def eval_at(self, z):
        return np.array([[e.eval(z) for e in row] for row in self.entries])

    def laurent_at0(self, N):
        return SeriesMatrix([[e.laurent_at0(N) for e in row] for row in self.entries])

    def substitute_scale(self, p, direction="divide"):
        return ExplicitMatrix(
            [[e.substitute_scale(p, direction) for e in row] for row in self.entries]
        )

    def lattices(self):
        out = set()
        for row in self.entries:
            for e in row:
                out |= e.lattices()
        return out


class MatMul(MatrixExpr):
    def __init__(self, a: MatrixExpr, b: MatrixExpr):
        if a.cols != b.rows:
            raise ValueError("shape mismatch")
        self.a, self.b = a, b
        self.rows, self.cols = a.rows, b.cols

    def eval_at(self, z):
        return self.a.eval_at(z) @ self.b.eval_at(z)

    def laurent_at0(self, N):
        return self.a.laurent_at0(N) @ self.b.laurent_at0(N)

    def substitute_scale(self, p, direction="divide"):
        return MatMul(self.a.substitute_scale(p, direction),
                      self.b.substitute_scale(p, direction))

    def lattices(self):
        return self.a.lattices() | self.b.lattices()


class MatInv(MatrixExpr):
    def __init__(self, a: MatrixExpr):
        if a.rows != a.cols:
            raise ValueError("inverse of non-square matrix")
        self.a = a
        self.rows = self.cols = a.rows

    def eval_at(self, z):
        return np.linalg.inv(self.a.eval_at(z))

    def laurent_at0(self, N):
        return self.a.laurent_at0(N).invert()

    def substitute_scale(self, p, direction="divide"):
        return MatInv(self.a.substitute_scale(p, direction))

    def lattices(self):
        return self.a.lattices()


class BlockDiag(MatrixExpr):
    def __init__(self, blocks):
        self.blocks = tuple(blocks)
        self.rows = self.cols = sum(b.rows for b in self.blocks)
        if any(b.rows != b.cols for b in self.blocks):
            raise ValueError("blocks must be square")

    def eval_at(self, z):
        out = np.zeros((self.rows, self.cols), dtype=complex)
        at = 0
        for b in self.blocks:
            out[at:at + b.rows, at:at + b.rows] = b.eval_at(z)
            at += b.rows
        return out

    def laurent_at0(self, N):
        mats = [b.laurent_at0(N) for b in self.blocks]
        entries = []
        at_row = 0
        for bi, m in enumerate(mats):
            for i in range(m.rows):
                row = []
                for bj, mj in enumerate(mats):
                    for j in range(mj.cols):
                        if bi == bj:
                            row.append(m.entries[i][j])
                        else:
                            row.append(LaurentSeries.zero(m.entries[0][0].order))
                entries.append(row)
        return SeriesMatrix(entries)

    def substitute_scale(self, p, direction="divide"):
        return BlockDiag([b.substitute_scale(p, direction) for b in self.blocks])

    def lattices(self):
        out = set()
        for b in self.blocks:
            out |= b.lattices()
        return out


def matrix_to_json(M: MatrixExpr) -> dict:
    if isinstance(M, ExplicitMatrix):
        return {"matrix": [[expr_to_json(e) for e in row] for row in M.entries]}
    if isinstance(M, MatMul):
        return {"matmul": [matrix_to_json(M.a), matrix_to_json(M.b)]}
    if isinstance(M, MatInv):
        return {"matinv": matrix_to_json(M.a)}
    if isinstance(M, BlockDiag):
        return {"blockdiag": [matrix_to_json(b) for b in M.blocks]}
    raise TypeError(f"unknown matrix node {M!r}")


def matrix_from_json(d: dict, lattice_cache: dict | None = None) -> MatrixExpr:
    if lattice_cache is None:
        lattice_cache = {}
    if "matrix" in d:
        return ExplicitMatrix(
            [[expr_from_json(e, lattice_cache) for e in row] for row in d["matrix"]]
        )
    if "matmul" in d:
        a, b = d["matmul"]
        return MatMul(matrix_from_json(a, lattice_cache), matrix_from_json(b, lattice_cache))
    if "matinv" in d:
        return MatInv(matrix_from_json(d["matinv"], lattice_cache))
    if "blockdiag" in d:
        return BlockDiag([matrix_from_json(b, lattice_cache) for b in d["blockdiag"]])
    raise ValueError("unknown matrix encoding")
