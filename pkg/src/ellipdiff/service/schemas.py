"""Request/response models for the HTTP service.

Conventions: complex numbers are [re, im] pairs; matrices of expressions
use the tagged-union tree encoding from the expression module; plain
numeric matrices are row-major nested [re, im] arrays.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field, model_validator

Cplx = tuple[float, float]


class LatticeSpec(BaseModel):
    omega1: Cplx = (1.0, 0.0)
    omega2: Cplx = (0.3, 1.1)


class BuildRequest(BaseModel):
    kind: Literal["special"] = "special"
    rank: int = Field(2, ge=1, le=8)
    p: int = Field(2, ge=2)
    q: int = Field(3, ge=2)
    lattice: LatticeSpec = LatticeSpec()
    check_tol: float = 1e-8
    seed: int = 0


class PairPayload(BaseModel):
    p: int = Field(ge=2)
    q: int = Field(ge=2)
    lattice: dict
    A: dict
    B: dict


class CheckRequest(BaseModel):
    pair: PairPayload
    n_samples: int = Field(20, ge=1, le=200)
    tol: float = 1e-8
    seed: int = 0


class SynthSpec(BaseModel):
    rank: int = Field(2, ge=1, le=6)
    seed: int = 0


class ReduceRequest(BaseModel):
    p: int = Field(2, ge=2)
    q: int = Field(3, ge=2)
    order: int = Field(40, ge=4, le=120)
    tol: float = 1e-9
    # either explicit series coefficients or a synthesized instance
    A_coefficients: list[list[list[Cplx]]] | None = None
    B_coefficients: list[list[list[Cplx]]] | None = None
    synthesize: SynthSpec | None = None

    @model_validator(mode="after")
    def _one_source(self):
        explicit = self.A_coefficients is not None and self.B_coefficients is not None
        if explicit == (self.synthesize is not None):
            raise ValueError("provide either A/B coefficients or a synthesize spec")
        return self


class ContinueRequest(BaseModel):
    kind: Literal["special", "rank1-product"] = "special"
    rank: int = Field(2, ge=1, le=5)
    p: int = Field(2, ge=2)
    q: int = Field(3, ge=2)
    lattice: LatticeSpec = LatticeSpec()
    points: list[Cplx] = []
    order: int = Field(24, ge=8, le=80)
    tol: float = 1e-7
    seed: int = 0


class ClassifyRequest(BaseModel):
    T: list[list[Cplx]]
    S: list[list[Cplx]]
    partition: list[int]
    p: int = Field(2, ge=2)
    q: int = Field(3, ge=2)
    tol: float = 1e-9


class TableRequest(BaseModel):
    p: int = Field(2, ge=2)
    q: int = Field(3, ge=2)
    per_class: int = Field(5, ge=1, le=40)
    seed: int = 0


class DivisorEntry(BaseModel):
    point: Cplx
    mult: int


class ScenarioPayload(BaseModel):
    p: int = Field(ge=2)
    q: int = Field(ge=2)
    lattice: LatticeSpec = LatticeSpec()
    half_width: float = 1.55
    s: list[DivisorEntry]
    divA: list[DivisorEntry]
    divB: list[DivisorEntry]


class PeriodicityRequest(BaseModel):
    scenario: ScenarioPayload | None = None
    synthesize: dict | None = None  # {k, seed, corrupt}
    p: int = Field(2, ge=2)
    q: int = Field(3, ge=2)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.scenario is None) == (self.synthesize is None):
            raise ValueError("provide either a scenario or a synthesize spec")
        return self


class DescentRequest(BaseModel):
    t: Cplx
    p: int = Field(2, ge=2)
    g: dict[str, Cplx]  # exponent (as string) -> coefficient


class SelfTestRequest(BaseModel):
    modules: list[str] | None = None
    seed: int = 0


class CheckResult(BaseModel):
    name: str
    passed: bool
    value: float | None = None
    detail: str = ""


class SelfTestReport(BaseModel):
    seed: int
    modules: dict[str, Any]
    passed: bool
