"""HTTP service exposing the workbench operations.

Every endpoint is a pure function of its request body, so identical
requests (including seeds) produce identical JSON responses.  Domain
errors that represent a failed verification are reported in-band with
``passed: false``; malformed requests fail pydantic validation (HTTP 422).
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import canonical, descent, diffmod, formal, periodicity
from ..continuation import (
    ContinuedGauge,
    constancy_probe,
    continue_gauge,
    radius_estimate,
    two_route_agreement,
)
from ..expr import (
    ExplicitMatrix,
    const,
    lattice_from_json,
    lattice_to_json,
    matrix_from_json,
    matrix_to_json,
    z_var,
)
from ..series import LaurentSeries, SeriesMatrix
from ..weierstrass import make_lattice
from . import selftest
from .schemas import (
    BuildRequest,
    CheckRequest,
    ClassifyRequest,
    ContinueRequest,
    DescentRequest,
    LatticeSpec,
    PeriodicityRequest,
    ReduceRequest,
    SelfTestRequest,
    TableRequest,
)

_DOMAIN_ERRORS = (
    diffmod.NotCoprime,
    diffmod.SingularGauge,
    diffmod.MismatchedParameters,
    formal.NotRegularSingular,
    formal.Resonant,
    formal.B0NotConstant,
    formal.SingularInput,
    formal.AmbiguousClustering,
    canonical.InvalidBlockShape,
    canonical.NonCommuting,
    canonical.NotLegitimate,
    canonical.InvalidInput,
    periodicity.HypothesisViolated,
    periodicity.BudgetExceeded,
    periodicity.DimensionMismatch,
    descent.NotSatisfied,
    descent.Obstructed,
)


def _cx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _mat(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[_cx(e) for e in row] for row in M]


def _mat_in(rows) -> np.ndarray:
    return np.array([[complex(e[0], e[1]) for e in row] for row in rows])


def _lattice(spec: LatticeSpec):
    return make_lattice(complex(*spec.omega1), complex(*spec.omega2))


def _series_coeffs(S: SeriesMatrix, n: int) -> list:
    return [_mat(S.coeff_matrix(i)) for i in range(n + 1)]


def _fail(exc: Exception) -> dict:
    return {"passed": False, "error": type(exc).__name__, "detail": str(exc)}


def create_app() -> FastAPI:
    app = FastAPI(title="ellipdiff", docs_url=None, redoc_url=None)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/build")
    def build(req: BuildRequest) -> dict:
        L = _lattice(req.lattice)
        try:
            P = canonical.special_pair(req.rank, req.p, req.q, L)
            rep = diffmod.check_consistency(P, tol=req.check_tol, seed=req.seed)
        except _DOMAIN_ERRORS as exc:
            return _fail(exc)
        return {
            "passed": rep.passed,
            "pair": {
                "p": req.p,
                "q": req.q,
                "lattice": lattice_to_json(L),
                "A": matrix_to_json(P.A),
                "B": matrix_to_json(P.B),
            },
            "consistency": {
                "max_residual": rep.max_residual,
                "series_residual": rep.series_residual,
                "n_points": rep.n_points,
                "tol": rep.tol,
            },
        }

    @app.post("/check-consistency")
    def check(req: CheckRequest) -> dict:
        cache: dict = {}
        try:
            L = lattice_from_json(req.pair.lattice)
            A = matrix_from_json(req.pair.A, cache)
            B = matrix_from_json(req.pair.B, cache)
        except (ValueError, KeyError, TypeError) as exc:
            raise HTTPException(status_code=422,
                                detail=f"malformed pair encoding: {exc}")
        try:
            P = diffmod.DifferencePair(A, B, req.pair.p, req.pair.q, L)
            rep = diffmod.check_consistency(P, n_samples=req.n_samples,
                                            tol=req.tol, seed=req.seed)
        except _DOMAIN_ERRORS as exc:
            return _fail(exc)
        return {
            "passed": rep.passed,
            "max_residual": rep.max_residual,
            "series_residual": rep.series_residual,
            "n_points": rep.n_points,
            "tol": rep.tol,
        }

    @app.post("/reduce")
    def reduce(req: ReduceRequest) -> dict:
        try:
            planted = None
            if req.synthesize is not None:
                rng = np.random.default_rng(req.synthesize.seed)
                A, B, A0p, B0p, C0 = formal.synthesize_pair(
                    rng, req.synthesize.rank, req.p, req.q, N=req.order)
                planted = (A0p, B0p, C0)
            else:
                Amats = [_mat_in(c) for c in req.A_coefficients]
                Bmats = [_mat_in(c) for c in req.B_coefficients]
                A = SeriesMatrix.from_coeff_matrices(0, Amats, req.order)
                B = SeriesMatrix.from_coeff_matrices(0, Bmats, req.order)
            red = formal.reduce_to_constants(A, B, req.p, req.q,
                                            N=req.order, tol=req.tol)
        except _DOMAIN_ERRORS as exc:
            return _fail(exc)
        out = {
            "passed": True,
            "A0": _mat(red.A0),
            "B0": _mat(red.B0),
            "A0_restricted": _mat(red.A0_restricted),
            "exponents": list(red.restriction_exponents),
            "C_coefficients": _series_coeffs(red.C, min(req.order, 8)),
            "relation_residual": float(red.relation_residual(A)),
            "commutator": float(np.abs(red.A0 @ red.B0 - red.B0 @ red.A0).max()),
        }
        if planted is not None:
            A0p, B0p, C0 = planted
            n = min(req.order, 8)
            gauge_err = max(
                float(np.abs(red.C.coeff_matrix(i) - C0.coeff_matrix(i)).max())
                for i in range(n + 1)
            )
            out["planted_gauge_error"] = gauge_err
            out["planted_A0_error"] = float(np.abs(red.A0 - A0p).max())
        return out

    @app.post("/continue")
    def continuation(req: ContinueRequest) -> dict:
        if req.kind == "rank1-product":
            # A = 1 + z over p = 2: the gauge is an explicit infinite product
            A = ExplicitMatrix([[const(1) + z_var()]])
            prod = LaurentSeries.one(req.order)
            for m in range(120):
                prod = prod * LaurentSeries(0, [1.0, 0.5 ** m], req.order)
            g = ContinuedGauge(A, np.eye(1), SeriesMatrix([[prod.invert()]]),
                               1.0, 2)
            pts = [complex(*pt) for pt in req.points] or [1.0 + 0.0j]
            values = []
            worst = 0.0
            for z in pts:
                val = continue_gauge(g, z)[0, 0]
                oracle = 1.0
                for m in range(220):
                    oracle /= 1 + z * 2.0 ** (-m)
                values.append({"z": _cx(z), "value": _cx(val),
                               "oracle": _cx(oracle)})
                worst = max(worst, float(abs(val - oracle)))
            return {"passed": bool(worst < 1e-10), "values": values,
                    "max_oracle_error": worst}
        L = _lattice(req.lattice)
        try:
            P = canonical.special_pair(req.rank, req.p, req.q, L)
            U = canonical.unipotent_U(req.rank, req.p * req.q, 0.0, L)
            C = U.laurent_at0(req.order)
            radius = 0.8 * L.shortest / (req.p * req.q)
            A0 = canonical.t_special(req.rank, req.p)
            B0 = canonical.t_special(req.rank, req.q)
            g = ContinuedGauge(P.A, A0, C, radius, req.p)
            rep = constancy_probe(P, g, B0=B0, tol=req.tol, seed=req.seed)
            worst_routes = two_route_agreement(P, g, B0, seed=req.seed + 1)
            values = []
            for pt in req.points:
                z = complex(*pt)
                values.append({"z": _cx(z), "C": _mat(continue_gauge(g, z))})
        except _DOMAIN_ERRORS as exc:
            return _fail(exc)
        return {
            "passed": bool(rep.passed and worst_routes < req.tol),
            "radius": radius,
            "constancy": {
                "max_residual_a": rep.max_residual_a,
                "max_residual_b": rep.max_residual_b,
                "n_points": rep.n_points,
                "tol": rep.tol,
            },
            "two_route_disagreement": worst_routes,
            "values": values,
        }

    @app.post("/classify")
    def classify(req: ClassifyRequest) -> dict:
        try:
            mtype = canonical.ModuleType(tuple(sorted(req.partition)))
            bs = canonical.BlockScalarPair(_mat_in(req.T), _mat_in(req.S),
                                           mtype, req.p, req.q)
            cls = canonical.classify_rank_le3(bs, tol=req.tol)
        except _DOMAIN_ERRORS as exc:
            return _fail(exc)
        return {
            "passed": True,
            "class": cls.tag,
            "type": list(cls.type.partition),
            "params": {k: [_cx(c) for c in v] if isinstance(v, (tuple, list))
                       else _cx(v) for k, v in cls.params.items()},
            "invariant": None if cls.invariant is None
            else [_cx(c) for c in cls.invariant],
        }

    @app.post("/classify/table")
    def classify_table(req: TableRequest) -> dict:
        rng = np.random.default_rng(req.seed)
        rows = []
        all_ok = True
        for tag in ("i", "ii", "iii", "iv", "v"):
            for k in range(req.per_class):
                bs, planted_inv = canonical.make_rank3_instance(
                    tag, req.p, req.q, rng)
                cls = canonical.classify_rank_le3(bs)
                inv_err = None
                if planted_inv is not None and cls.invariant is not None:
                    inv_err = float(np.abs(
                        np.asarray(cls.invariant) - np.asarray(planted_inv)).max())
                ok = cls.tag == tag and (inv_err is None or inv_err < 1e-10)
                all_ok = all_ok and ok
                rows.append({
                    "planted": tag,
                    "instance": k,
                    "recovered": cls.tag,
                    "type": list(cls.type.partition),
                    "invariant": None if cls.invariant is None
                    else [_cx(c) for c in cls.invariant],
                    "invariant_error": inv_err,
                    "match": ok,
                })
        return {"passed": all_ok, "table": rows}

    @app.post("/periodicity-demo")
    def periodicity_demo(req: PeriodicityRequest) -> dict:
        try:
            if req.synthesize is not None:
                spec = dict(req.synthesize)
                L = _lattice(LatticeSpec())
                rng = np.random.default_rng(int(spec.get("seed", 0)))
                s, dA, dB = periodicity.synthesize_scenario(
                    L, req.p, req.q, int(spec.get("k", 1)), rng,
                    corrupt=spec.get("corrupt"))
                p, q = req.p, req.q
            else:
                sc = req.scenario
                L = _lattice(sc.lattice)
                w = periodicity.Window(-sc.half_width, sc.half_width,
                                       -sc.half_width, sc.half_width)
                s = periodicity.DivisorSection(
                    w, [(complex(*e.point), e.mult) for e in sc.s])
                dA = periodicity.DivisorSection(
                    w, [(complex(*e.point), e.mult) for e in sc.divA])
                dB = periodicity.DivisorSection(
                    w, [(complex(*e.point), e.mult) for e in sc.divB])
                p, q = sc.p, sc.q
            verdict = periodicity.periodic_after_modification(s, dA, dB, p, q, L)
        except _DOMAIN_ERRORS as exc:
            return _fail(exc)
        return {
            "passed": verdict.periodic,
            "periodic": verdict.periodic,
            "detail": verdict.detail,
            "s_prime": [{"point": _cx(z), "mult": m}
                        for z, m in sorted(verdict.s_prime.support,
                                           key=lambda t: (t[0].real, t[0].imag))],
        }

    @app.post("/descent")
    def descent_solve(req: DescentRequest) -> dict:
        g = descent.LaurentPolynomial(
            {int(n): complex(c[0], c[1]) for n, c in req.g.items()})
        out = descent.solve_scaling_equation(complex(*req.t), g, req.p)
        if isinstance(out, descent.Obstruction):
            return {
                "passed": False,
                "obstruction": {"exponent": out.exponent,
                                "coefficient": _cx(out.coefficient)},
            }
        resid = descent.scaling_residual(out.h, complex(*req.t), g, req.p)
        return {
            "passed": resid.is_zero(),
            "h": {str(n): _cx(c) for n, c in sorted(out.h.coeffs.items())},
            "free_exponents": list(out.free_exponents),
        }

    @app.post("/self-test")
    def self_test(req: SelfTestRequest) -> dict:
        return selftest.run(req.modules, req.seed)

    return app
