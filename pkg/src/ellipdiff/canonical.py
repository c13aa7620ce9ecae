"""Canonical objects: the g functions, block unipotent matrices, special
pairs, typed pairs with block-scalar constants, legitimate conjugation,
and the rank <= 3 classifier.

The structural conditions all reduce to intertwining relations against
the block nilpotent N attached to a type partition:

    valid T         :  N T = p T N      (S side: N S = q S N)
    legitimate E    :  N E = E N

Conjugating a valid (T, S) by a legitimate E preserves validity, and the
classifier's outputs are invariant under it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diffmod import DifferencePair
from .expr import (
    BlockDiag,
    Const,
    EllipticExpr,
    ExplicitMatrix,
    IntPow,
    MatInv,
    MatMul,
    MatrixExpr,
    const,
    zeta_e,
)
from .weierstrass import Lattice


class InvalidBlockShape(ValueError):
    pass


class NonCommuting(ValueError):
    pass


class NotLegitimate(ValueError):
    pass


class InvalidInput(ValueError):
    pass


# ---- scalar building blocks -------------------------------------------

def g_expr(which: str, p: int, q: int, L: Lattice) -> EllipticExpr:
    """g_p = p*zeta(q z) - zeta(pq z); g_q = q*zeta(p z) - zeta(pq z)."""
    if math.gcd(p, q) != 1:
        raise InvalidInput(f"gcd({p},{q}) != 1")
    if which == "p":
        return const(p) * zeta_e(q, 0.0, L) - zeta_e(p * q, 0.0, L)
    if which == "q":
        return const(q) * zeta_e(p, 0.0, L) - zeta_e(p * q, 0.0, L)
    raise ValueError("which must be 'p' or 'q'")


def nilpotent(r: int) -> np.ndarray:
    return np.diag(np.ones(r - 1), 1) if r > 1 else np.zeros((1, 1))


def t_special(r: int, p: int) -> np.ndarray:
    return np.diag([float(p) ** i for i in range(r)]).astype(complex)


def unipotent_U(r: int, multiplier: int, z0: complex, L: Lattice) -> MatrixExpr:
    """exp(zeta(multiplier*z - z0) N_r): upper unipotent with (i,j) entry
    zeta^(j-i) / (j-i)!."""
    if r < 1:
        raise InvalidInput("rank must be >= 1")
    zta = zeta_e(multiplier, z0, L)
    entries = []
    for i in range(r):
        row = []
        for j in range(r):
            if j < i:
                row.append(Const(0.0))
            elif j == i:
                row.append(Const(1.0))
            elif j == i + 1:
                row.append(zta)
            else:
                row.append(const(1.0 / math.factorial(j - i)) * IntPow(zta, j - i))
        entries.append(row)
    return ExplicitMatrix(entries)


def special_pair(r: int, p: int, q: int, L: Lattice) -> DifferencePair:
    """The standard indecomposable pair in closed form: the A side has
    entries p^(i-1) g_p^(j-i) / (j-i)!, and similarly with q, g_q."""
    if math.gcd(p, q) != 1:
        raise InvalidInput(f"gcd({p},{q}) != 1")
    gp = g_expr("p", p, q, L)
    gq = g_expr("q", p, q, L)

    def mat(base: int, g: EllipticExpr):
        entries = []
        for i in range(r):
            row = []
            for j in range(r):
                if j < i:
                    row.append(Const(0.0))
                else:
                    c = float(base) ** i / math.factorial(j - i)
                    if j == i:
                        row.append(Const(c))
                    else:
                        row.append(const(c) * IntPow(g, j - i))
            entries.append(row)
        return ExplicitMatrix(entries)

    return DifferencePair(mat(p, gp), mat(q, gq), p, q, L)


# ---- types and block-scalar pairs -------------------------------------

@dataclass(frozen=True)
class ModuleType:
    partition: tuple

    def __post_init__(self):
        part = tuple(int(x) for x in self.partition)
        if not part or any(x < 1 for x in part):
            raise InvalidInput("partition entries must be positive")
        if list(part) != sorted(part):
            raise InvalidInput("partition must be sorted ascending")
        object.__setattr__(self, "partition", part)

    @property
    def rank(self) -> int:
        return sum(self.partition)

    def nilpotent(self) -> np.ndarray:
        r = self.rank
        N = np.zeros((r, r), dtype=complex)
        at = 0
        for s in self.partition:
            N[at:at + s, at:at + s] = nilpotent(s)
            at += s
        return N

    def block_slices(self):
        out = []
        at = 0
        for s in self.partition:
            out.append(slice(at, at + s))
            at += s
        return out


def intertwiner_basis(mtype: ModuleType, factor: float) -> list:
    """Basis of {X : N X = factor * X N} for the type's nilpotent N."""
    N = mtype.nilpotent()
    r = mtype.rank
    op = np.kron(np.eye(r), N) - factor * np.kron(N.T, np.eye(r))
    _, sv, vh = np.linalg.svd(op)
    tolr = 1e-10 * max(1.0, sv[0] if len(sv) else 1.0)
    null = [vh[i].conj() for i in range(len(vh)) if i >= len(sv) or sv[i] < tolr]
    return [v.reshape((r, r), order="F") for v in null]


@dataclass
class BlockShapeReport:
    valid: bool
    violation: str | None
    blocks: dict  # (i, j) -> {"s": int, "alpha": complex, "lambdas": list}


def _nilpotent_log(Y: np.ndarray) -> np.ndarray:
    """log of a unipotent matrix via the finite series."""
    r = Y.shape[0]
    E = Y - np.eye(r)
    out = np.zeros_like(Y)
    P = np.eye(r, dtype=complex)
    for k in range(1, r):
        P = P @ E
        out += ((-1) ** (k + 1) / k) * P
    return out


def validate_block_shape(T: np.ndarray, mtype: ModuleType, p: int,
                         tol: float = 1e-9) -> BlockShapeReport:
    """Certify N T = p T N blockwise and extract (s, alpha, lambda) data.

    A valid n x m block is supported on its top-right s x s corner
    (s = min(n, m)) in the form alpha * T_s^sp * exp(sum lambda_l N^l),
    up to the forced column shift; diagonal blocks have the full corner.
    """
    T = np.asarray(T, dtype=complex)
    N = mtype.nilpotent()
    scale = max(1.0, float(np.abs(T).max()))
    resid = np.abs(N @ T - p * T @ N).max() / scale
    if resid > tol:
        # locate the worst block for the report
        sl = mtype.block_slices()
        worst, wval = None, 0.0
        R = N @ T - p * T @ N
        for i, si in enumerate(sl):
            for j, sj in enumerate(sl):
                v = float(np.abs(R[si, sj]).max())
                if v > wval:
                    worst, wval = (i, j), v
        return BlockShapeReport(False, f"block {worst} violates the shape "
                                       f"relation (residual {wval:.2e})", {})
    sl = mtype.block_slices()
    blocks = {}
    for i, si in enumerate(sl):
        for j, sj in enumerate(sl):
            blk = T[si, sj]
            n, m = blk.shape
            s = min(n, m)
            if np.abs(blk).max() < tol * scale:
                blocks[(i, j)] = {"s": 0, "alpha": 0j, "lambdas": []}
                continue
            corner = blk[:s, m - s:]
            alpha = corner[0, 0]
            if abs(alpha) < tol * scale:
                blocks[(i, j)] = {"s": s, "alpha": 0j, "lambdas": []}
                continue
            # corner = alpha * T_s^sp * Y with Y unipotent Toeplitz
            Y = np.linalg.solve(t_special(s, p) * alpha, corner)
            Lm = _nilpotent_log(Y)
            lambdas = [Lm[0, k] for k in range(1, s)]
            blocks[(i, j)] = {"s": s, "alpha": alpha, "lambdas": lambdas}
    return BlockShapeReport(True, None, blocks)


@dataclass
class BlockScalarPair:
    T: np.ndarray
    S: np.ndarray
    type: ModuleType
    p: int
    q: int

    def __post_init__(self):
        self.T = np.asarray(self.T, dtype=complex)
        self.S = np.asarray(self.S, dtype=complex)
        r = self.type.rank
        if self.T.shape != (r, r) or self.S.shape != (r, r):
            raise InvalidInput("matrix size does not match the type")

    def validate(self, tol: float = 1e-9):
        if abs(np.linalg.det(self.T)) < 1e-12 or abs(np.linalg.det(self.S)) < 1e-12:
            raise InvalidBlockShape("T and S must be invertible")
        scale = max(1.0, np.abs(self.T).max() * np.abs(self.S).max())
        if np.abs(self.T @ self.S - self.S @ self.T).max() > tol * scale:
            raise NonCommuting("[T, S] != 0")
        for M, pp, name in ((self.T, self.p, "T"), (self.S, self.q, "S")):
            rep = validate_block_shape(M, self.type, pp, tol)
            if not rep.valid:
                raise InvalidBlockShape(f"{name}: {rep.violation}")
        return self


def typed_pair(bs: BlockScalarPair, L: Lattice, z0: complex = 0.0) -> DifferencePair:
    """(A, B) = (U(z/p) T U(z)^-1, U(z/q) S U(z)^-1) with U the block
    unipotent for the type; validity of (T, S) makes both sides elliptic."""
    bs.validate()
    p, q = bs.p, bs.q
    blocks = [unipotent_U(s, p * q, z0, L) for s in bs.type.partition]
    U = blocks[0] if len(blocks) == 1 else BlockDiag(blocks)
    Uinv = MatInv(U)
    A = MatMul(U.substitute_scale(p), MatMul(ExplicitMatrix.from_constant(bs.T), Uinv))
    B = MatMul(U.substitute_scale(q), MatMul(ExplicitMatrix.from_constant(bs.S), Uinv))
    return DifferencePair(A, B, p, q, L)


def is_legitimate(E: np.ndarray, mtype: ModuleType, tol: float = 1e-9) -> bool:
    E = np.asarray(E, dtype=complex)
    N = mtype.nilpotent()
    scale = max(1.0, float(np.abs(E).max()))
    if np.abs(N @ E - E @ N).max() > tol * scale:
        return False
    return abs(np.linalg.det(E)) > 1e-12


def conjugate_legitimate(bs: BlockScalarPair, E: np.ndarray) -> BlockScalarPair:
    if not is_legitimate(E, bs.type):
        raise NotLegitimate("E must commute with the block nilpotent and be invertible")
    Einv = np.linalg.inv(E)
    return BlockScalarPair(E @ bs.T @ Einv, E @ bs.S @ Einv, bs.type, bs.p, bs.q)


def random_legitimate(mtype: ModuleType, rng, spread: float = 0.7) -> np.ndarray:
    basis = intertwiner_basis(mtype, 1.0)
    for _ in range(50):
        E = np.zeros((mtype.rank, mtype.rank), dtype=complex)
        for Bm in basis:
            c = rng.normal() + 1j * rng.normal()
            E = E + spread * c * Bm
        E = E + np.eye(mtype.rank)
        if abs(np.linalg.det(E)) > 0.05:
            return E
    raise RuntimeError("failed to draw an invertible legitimate matrix")


# ---- rank <= 3 classification -----------------------------------------

@dataclass
class Classification:
    tag: str                 # one of "i".."v"
    type: ModuleType
    params: dict             # a, b and a', b' where applicable
    invariant: tuple | None  # normalized projective point for iii / iv


def _proj_normalize(v) -> tuple:
    v = np.asarray(v, dtype=complex)
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if len(nz) == 0:
        raise InvalidInput("zero vector has no projective class")
    v = v / np.linalg.norm(v)
    phase = v[nz[0]] / abs(v[nz[0]])
    v = v / phase
    return tuple(complex(x) for x in v)


def classify_rank_le3(bs: BlockScalarPair, tol: float = 1e-9) -> Classification:
    """Classifier for rank <= 3 block-scalar pairs.

    Classes: (i) split into rank-1 pieces; (ii) indecomposable-2 plus a
    rank-1 piece with generic twist; (iii)/(iv) the two glued families
    carrying a projective invariant; (v) indecomposable of full rank.
    """
    bs.validate(tol)
    part = bs.type.partition
    r = bs.type.rank
    if r > 3:
        raise InvalidInput("classifier limited to rank <= 3")
    T, S, p, q = bs.T, bs.S, bs.p, bs.q
    if all(x == 1 for x in part):
        return Classification("i", bs.type,
                              {"a": tuple(np.diag(T)), "b": tuple(np.diag(S))},
                              None)
    if len(part) == 1:
        a, b = complex(T[0, 0]), complex(S[0, 0])
        return Classification("v", bs.type, {"a": a, "b": b}, None)
    # remaining rank-3 case: type (1, 2); indices 0 | 1 2
    if part != (1, 2):
        raise InvalidInput(f"unexpected type {part}")
    ap, bp = complex(T[0, 0]), complex(S[0, 0])     # rank-1 part (a', b')
    a, b = complex(T[1, 1]), complex(S[1, 1])       # 2-block leading (a, b)
    t, s = complex(T[1, 0]), complex(S[1, 0])       # coupling into e1
    tp, sp_ = complex(T[0, 2]), complex(S[0, 2])    # coupling out of e1
    scale = max(1.0, abs(a), abs(b))
    params = {"a": a, "b": b, "a_prime": ap, "b_prime": bp}
    if abs(ap - a) < tol * scale and abs(bp - b) < tol * scale:
        if max(abs(s), abs(t)) > tol * scale:
            return Classification("iii", bs.type, params, _proj_normalize((s, t)))
        return Classification("ii", bs.type, params, None)
    if abs(ap - p * a) < tol * scale and abs(bp - q * b) < tol * scale:
        if max(abs(sp_), abs(tp)) > tol * scale:
            return Classification("iv", bs.type, params, _proj_normalize((sp_, tp)))
        return Classification("ii", bs.type, params, None)
    return Classification("ii", bs.type, params, None)


def _unit(rng) -> complex:
    z = rng.normal() + 1j * rng.normal()
    return z / abs(z) * rng.uniform(0.5, 2.0)


def make_rank3_instance(cls: str, p: int, q: int, rng):
    """A planted representative of the requested class, decorated by a
    random legitimate conjugation so instances are not in normal form.
    Returns (pair, planted_invariant); the invariant is None outside
    classes iii and iv."""
    if cls == "i":
        mt = ModuleType((1, 1, 1))
        T = np.diag([_unit(rng) for _ in range(3)])
        S = np.diag([_unit(rng) for _ in range(3)])
        bs = BlockScalarPair(T, S, mt, p, q)
    elif cls == "v":
        mt = ModuleType((3,))
        bs = BlockScalarPair(_unit(rng) * t_special(3, p),
                             _unit(rng) * t_special(3, q), mt, p, q)
    else:
        mt = ModuleType((1, 2))
        a, b = _unit(rng), _unit(rng)
        T = np.zeros((3, 3), dtype=complex)
        S = np.zeros((3, 3), dtype=complex)
        T[1, 1], T[2, 2] = a, p * a
        S[1, 1], S[2, 2] = b, q * b
        if cls == "ii":
            ap, bp = _unit(rng), _unit(rng)
            T[0, 0], S[0, 0] = ap, bp
            # killable couplings proportional to the eigenvalue gaps
            c = rng.normal() + 1j * rng.normal()
            T[1, 0], S[1, 0] = c * (ap - a), c * (bp - b)
        elif cls == "iii":
            T[0, 0], S[0, 0] = a, b
            T[1, 0] = rng.normal() + 1j * rng.normal()
            S[1, 0] = rng.normal() + 1j * rng.normal()
        elif cls == "iv":
            T[0, 0], S[0, 0] = p * a, q * b
            T[0, 2] = rng.normal() + 1j * rng.normal()
            S[0, 2] = rng.normal() + 1j * rng.normal()
        else:
            raise InvalidInput(f"unknown class {cls}")
        bs = BlockScalarPair(T, S, mt, p, q)
    invariant = None
    if cls == "iii":
        invariant = _proj_normalize((S[1, 0], T[1, 0]))
    elif cls == "iv":
        invariant = _proj_normalize((S[0, 2], T[0, 2]))
    E = random_legitimate(bs.type, rng, spread=0.4)
    return conjugate_legitimate(bs, E), invariant
