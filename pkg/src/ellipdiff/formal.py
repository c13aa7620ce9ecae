"""Formal reduction over truncated power series: normalize a consistent
regular-singular pair to constants by a gauge C with C(0) = I.

The defining relation C(z/p) A0 = A(z) C(z) pins A0 = A(0) and determines
each coefficient C_n from earlier ones through the linear operator
X -> p^{-n} X A0 - A0 X.  The operator is singular exactly when two
eigenvalues of A0 have ratio p^n; such inputs are rejected with the
witnessing exponent rather than regularized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .series import LaurentSeries, SeriesMatrix


class NotRegularSingular(ValueError):
    pass


class Resonant(ValueError):
    def __init__(self, msg, exponent=None):
        super().__init__(msg)
        self.exponent = exponent


class B0NotConstant(ValueError):
    pass


class SingularInput(ValueError):
    pass


class AmbiguousClustering(ValueError):
    pass


@dataclass
class FormalReduction:
    C: SeriesMatrix
    A0: np.ndarray
    B0: np.ndarray
    A0_restricted: np.ndarray
    restriction_exponents: list
    p: int
    q: int

    def relation_residual(self, A: SeriesMatrix) -> float:
        lhs = self.C.scale_argument(self.p) @ SeriesMatrix.from_constant(
            self.A0, self.C.order
        )
        rhs = A @ self.C
        diff = lhs - rhs
        # measure each order against the working magnitude of the products
        # that cancel there, so inputs with fast-growing coefficients are
        # not penalized for same-order roundoff
        a_mag = [max(1e-300, float(np.abs(A.coeff_matrix(n)).max()))
                 for n in range(diff.order + 1)]
        c_mag = [max(1e-300, float(np.abs(self.C.coeff_matrix(n)).max()))
                 for n in range(diff.order + 1)]
        worst = 0.0
        for n in range(diff.order + 1):
            scale_n = max(1.0,
                          max(a_mag[i] * c_mag[n - i] for i in range(n + 1)))
            worst = max(worst, float(np.abs(diff.coeff_matrix(n)).max()) / scale_n)
        return worst


def _solve_coefficient(A0: np.ndarray, rhs: np.ndarray, scale: float, n: int):
    """Solve scale * X @ A0 - A0 @ X = rhs; raise Resonant when the
    Kronecker operator is (near-)singular."""
    r = A0.shape[0]
    op = scale * np.kron(A0.T, np.eye(r)) - np.kron(np.eye(r), A0)
    sv = np.linalg.svd(op, compute_uv=False)
    if sv[-1] < 1e-9 * max(1.0, sv[0]):
        raise Resonant(f"coefficient operator singular at order {n}", exponent=n)
    x = np.linalg.solve(op, rhs.reshape(-1, order="F"))
    return x.reshape((r, r), order="F")


def reduce_to_constants(A: SeriesMatrix, B: SeriesMatrix, p: int, q: int,
                        N: int = 40, tol: float = 1e-9) -> FormalReduction:
    """Compute the normalized gauge C (C(0)=I) and the constants (A0, B0).

    A, B must be holomorphic at 0 with invertible constant terms.  A0 as
    stored satisfies the gauge relation exactly (it equals A(0)); the
    p-restricted normal form and its block exponents are reported
    alongside, realized by an additional diagonal z^k gauge.
    """
    v = A.valuation()
    if v is None or v < 0 or (B.valuation() or 0) < 0:
        raise NotRegularSingular("input must be holomorphic at 0")
    A0 = A.constant()
    if abs(np.linalg.det(A0)) < 1e-12:
        raise NotRegularSingular("A(0) is singular")
    r = A.rows
    # detect resonance up front so the witness names the smallest exponent
    eig = np.linalg.eigvals(A0)
    for n in range(1, N + 1):
        pn = float(p) ** n
        for i in range(r):
            for j in range(r):
                if i != j and abs(eig[i] - pn * eig[j]) < 1e-9 * max(1.0, abs(eig[i])):
                    raise Resonant(
                        f"eigenvalue ratio p^{n} detected", exponent=n
                    )
    coeffs = [np.eye(r, dtype=complex)]
    A_coeffs = [A.coeff_matrix(i) for i in range(N + 1)]
    for n in range(1, N + 1):
        rhs = sum(A_coeffs[i] @ coeffs[n - i] for i in range(1, n + 1))
        coeffs.append(_solve_coefficient(A0, rhs, float(p) ** (-n), n))
    C = SeriesMatrix.from_coeff_matrices(0, coeffs, N)
    # B side: C(z/q)^{-1} B C should be the constant B0.  Verifying that a
    # series is constant cancels the (possibly fast-growing) working
    # coefficients order by order, so each residual is measured against
    # the magnitudes that entered its cancellation.
    Bred = C.scale_argument(q).invert() @ B @ C
    B0 = Bred.constant()
    resid = 0.0
    for n in range(1, Bred.order + 1):
        scale_n = max(1.0, float(np.abs(B.coeff_matrix(n)).max()),
                      float(np.abs(coeffs[n]).max()))
        resid = max(resid, float(np.abs(Bred.coeff_matrix(n)).max()) / scale_n)
    if resid > tol:
        raise B0NotConstant(
            f"B-side reduction leaves relative series terms of size {resid:.2e}"
        )
    if np.abs(A0 @ B0 - B0 @ A0).max() > tol * max(1.0, np.abs(A0).max() * np.abs(B0).max()):
        raise B0NotConstant("reduced constants do not commute")
    A0r, exponents = p_restrict(A0, p)
    return FormalReduction(C, A0, B0, A0r, exponents, p, q)


def _cluster_eigenvalues(vals: np.ndarray, rel_tol: float = 1e-6):
    """Greedy clustering; refuses inputs whose grouping is ambiguous."""
    order = np.argsort(vals.real + 1e-3 * vals.imag)
    clusters = []  # list of lists of indices
    for idx in order:
        placed = False
        for cl in clusters:
            center = np.mean(vals[cl])
            if abs(vals[idx] - center) < rel_tol * max(1.0, abs(center)):
                cl.append(idx)
                placed = True
                break
        if not placed:
            clusters.append([idx])
    centers = [np.mean(vals[cl]) for cl in clusters]
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            gap = abs(centers[i] - centers[j])
            s = max(1.0, abs(centers[i]), abs(centers[j]))
            if gap < 50 * rel_tol * s:
                raise AmbiguousClustering(
                    f"eigenvalue clusters {centers[i]} and {centers[j]} too close"
                )
    return clusters, centers


def p_restrict(A0: np.ndarray, p: int):
    """Scale each generalized eigenspace by a power of p so that every
    eigenvalue c ends up with 1 <= |c| < p; returns (A0', exponents).

    The scaling is realized in the original basis by evaluating a
    polynomial with value p^{k_i} and vanishing derivatives at each
    eigenvalue cluster, so no explicit Jordan basis is computed.
    """
    A0 = np.asarray(A0, dtype=complex)
    if abs(np.linalg.det(A0)) < 1e-300:
        raise SingularInput("matrix must be invertible")
    vals = np.linalg.eigvals(A0)
    clusters, centers = _cluster_eigenvalues(vals)
    exponents = []
    for c in centers:
        k = -math.floor(math.log(abs(c), p) + 1e-12)
        exponents.append(k)
    if len(centers) == 1:
        return float(p) ** exponents[0] * A0, exponents
    # Hermite interpolation: P(c_i) = p^{k_i}, P^(d)(c_i) = 0 for
    # 1 <= d < multiplicity, via a confluent Vandermonde solve
    conditions = []  # (center, derivative order, value)
    for cl, c, k in zip(clusters, centers, exponents):
        mult = len(cl)
        conditions.append((c, 0, float(p) ** k))
        for d in range(1, mult):
            conditions.append((c, d, 0.0))
    deg = len(conditions)
    V = np.zeros((deg, deg), dtype=complex)
    b = np.zeros(deg, dtype=complex)
    for row, (c, d, val) in enumerate(conditions):
        for col in range(deg):
            if col >= d:
                V[row, col] = math.factorial(col) / math.factorial(col - d) * c ** (col - d)
        b[row] = val
    poly = np.linalg.solve(V, b)
    P = np.zeros_like(A0)
    Ak = np.eye(A0.shape[0], dtype=complex)
    for coef in poly:
        P = P + coef * Ak
        Ak = Ak @ A0
    return P @ A0, exponents


@dataclass
class UniquenessVerdict:
    unique: bool
    resonant_exponents: list
    gauge_difference: float
    relation_residuals: tuple


def uniqueness_probe(A: SeriesMatrix, C1: SeriesMatrix, C2: SeriesMatrix,
                     A0: np.ndarray, p: int, R: int = 1,
                     tol: float = 1e-8) -> UniquenessVerdict:
    """Diagnostic: two normalized gauges for the same A must coincide
    unless conjugation-by-A0 has an eigenvalue p^i with i >= R."""
    A0 = np.asarray(A0, dtype=complex)
    res = []
    for C in (C1, C2):
        lhs = C.scale_argument(p) @ SeriesMatrix.from_constant(A0, C.order)
        rhs = A @ C
        scale = max(1.0, lhs.max_abs_coeff(), rhs.max_abs_coeff())
        res.append((lhs - rhs).max_abs_coeff() / scale)
    eig = np.linalg.eigvals(A0)
    resonant = []
    nmax = min(C1.order, C2.order)
    for n in range(R, nmax + 1):
        pn = float(p) ** n
        for lam in eig:
            for mu in eig:
                if abs(lam - pn * mu) < 1e-9 * max(1.0, abs(lam)):
                    resonant.append(n)
    resonant = sorted(set(resonant))
    diff = (C1 - C2).max_abs_coeff() / max(1.0, C1.max_abs_coeff())
    return UniquenessVerdict(
        unique=(not resonant) and diff < tol,
        resonant_exponents=resonant,
        gauge_difference=diff,
        relation_residuals=tuple(res),
    )


# ---- synthesis helpers (used by tests and the self-test command) -------

def synthesize_pair(rng, r: int, p: int, q: int, N: int = 40):
    """Random regular-singular consistent pair with known reduction data.

    Returns (A, B, A0, B0, C0): A = C0(z/p) A0 C0(z)^{-1} and similarly for
    B, with commuting (A0, B0) built as polynomials in one random matrix
    and C0 = I + (random series vanishing at 0).
    """
    def well_separated(M0, base):
        # coefficient solves divide by (base^{-n} lam_i/lam_j - 1); keep
        # every ratio at a safe distance from powers of base so roundoff
        # is not amplified
        lam = np.linalg.eigvals(M0)
        for i in range(r):
            for j in range(r):
                if i == j:
                    continue
                ratio = lam[i] / lam[j]
                for n in range(1, 13):
                    if abs(ratio - float(base) ** n) < 0.05:
                        return False
        return True

    for _ in range(200):
        M = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
        M = M / max(1.0, np.abs(np.linalg.eigvals(M)).max())
        ca = rng.normal(size=3)
        cb = rng.normal(size=3)
        A0 = ca[0] * np.eye(r) + ca[1] * M + ca[2] * M @ M + 2.5 * np.eye(r)
        B0 = cb[0] * np.eye(r) + cb[1] * M + cb[2] * M @ M + 2.5 * np.eye(r)
        if well_separated(A0, p) and well_separated(B0, q):
            break
    coeffs = [np.eye(r, dtype=complex)] + [
        0.3 * (rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r)))
        for _ in range(4)
    ]
    C0 = SeriesMatrix.from_coeff_matrices(0, coeffs, N)
    C0inv = C0.invert()
    A = C0.scale_argument(p) @ SeriesMatrix.from_constant(A0, N) @ C0inv
    B = C0.scale_argument(q) @ SeriesMatrix.from_constant(B0, N) @ C0inv
    return A, B, A0, B0, C0
