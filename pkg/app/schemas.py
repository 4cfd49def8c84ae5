from __future__ import annotations

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, computed_field, model_validator

ComplexPair = Tuple[float, float]
Vertices = List[List[int]]


def complex_pair(z: complex) -> ComplexPair:
    z = complex(z)
    return (float(z.real), float(z.imag))


# ---------------------------------------------------------------------------
# Input files
# ---------------------------------------------------------------------------

class MirrorInput(BaseModel):
    """
    One input file. Exactly one entry side is given:
    nabla parts (+ translations), delta1 parts (+ translations and/or delta2),
    or a single reflexive polytope (+ the number of parts for vertex splits).
    """

    rank: int = Field(..., ge=1)
    nabla: Optional[List[Vertices]] = None
    translations: Optional[List[List[int]]] = None
    delta1: Optional[List[Vertices]] = None
    delta2: Optional[List[Vertices]] = None
    polytope: Optional[Vertices] = None
    parts: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _one_entry_side(self) -> "MirrorInput":
        given = [name for name in ("nabla", "delta1", "polytope") if getattr(self, name) is not None]
        if len(given) != 1:
            raise ValueError(f"exactly one of nabla, delta1, polytope is required, got {given or 'none'}")
        if self.delta2 is not None and self.delta1 is None:
            raise ValueError("delta2 is only accepted together with delta1")
        return self


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

class ErrorReport(BaseModel):
    """What the CLI prints on stdout when a command fails before producing its report."""

    error: str
    message: str
    field: Optional[str] = None


class ValidationReport(BaseModel):
    valid: bool
    rank: int
    r: int
    side: str
    clause: Optional[str] = None
    part: Optional[int] = None
    message: Optional[str] = None
    total_vertices: Optional[Vertices] = None


class PartitionReport(BaseModel):
    rank: int
    side: str
    parts: List[Vertices]
    lattice_point_counts: List[int]


class MirrorCandidate(BaseModel):
    parts: List[Vertices]
    translations: List[List[int]]


class MirrorsReport(BaseModel):
    rank: int
    partitions_searched: int
    mirrors: List[MirrorCandidate]


class ConnectivityReport(BaseModel):
    vertices: List[int]
    arrows: List[Tuple[int, int]]
    components: List[List[int]]
    sccs: List[List[int]]
    condensation: List[Tuple[int, int]]
    missing_loops: List[int]
    split_components: List[int]
    strongly_connected: bool
    all_looped: bool

    @computed_field
    @property
    def ok(self) -> bool:
        return self.strongly_connected and self.all_looped


class MembershipReport(BaseModel):
    side: Literal[1, 2]
    w_norm: float
    max_residual: float
    residual_tol: float
    residual_ok: bool
    rank: int
    expected_rank: int
    rank_tol: float
    rank_ok: bool
    null_vectors: List[List[ComplexPair]]
    min_entry_ratios: List[float]
    null_entry_tol: float
    null_ok: bool

    @computed_field
    @property
    def ok(self) -> bool:
        return self.residual_ok and self.rank_ok and self.null_ok


class WitnessReport(BaseModel):
    vertices: List[int]
    blocks: List[List[int]]
    perron_values: List[float]
    coefficients: List[Optional[ComplexPair]]
    coordinates: List[ComplexPair]
    w_matrix: List[List[ComplexPair]]
    notes: List[str]
    in_o1: MembershipReport
    in_o2: MembershipReport

    @computed_field
    @property
    def passed(self) -> bool:
        return self.in_o1.ok and self.in_o2.ok


class RoundTripReport(BaseModel):
    samples_requested: int
    samples_succeeded: int
    attempts: int
    retries: int
    tol: float
    seed: int
    max_on_z_1: float = 0.0
    max_on_z_2: float = 0.0
    max_phi_vs_projection: float = 0.0
    max_psi_phi: float = 0.0
    max_phi_psi: float = 0.0
    max_torsor: float = 0.0
    failures: List[str] = Field(default_factory=list)

    @computed_field
    @property
    def retry_rate(self) -> float:
        return self.retries / self.attempts if self.attempts else 0.0

    @computed_field
    @property
    def passed(self) -> bool:
        return self.samples_succeeded == self.samples_requested and not self.failures


class CoarsenReport(BaseModel):
    classes: List[List[int]]
    trivial: bool
    rank: int
    nabla: List[Vertices]
    translations: List[List[int]]
    arrows: List[Tuple[int, int]]
    quotient_arrows: List[Tuple[int, int]]
    matches_quotient: bool


class FanoReport(BaseModel):
    blocks: List[int]
    vertices: List[int]
    beta: int
    d: List[int]
    witness: Optional[WitnessReport] = None
    roundtrip: Optional[RoundTripReport] = None

    @computed_field
    @property
    def passed(self) -> bool:
        witness_ok = self.witness is None or self.witness.passed
        return witness_ok and (self.roundtrip is None or self.roundtrip.passed)


class Section(BaseModel):
    status: Literal["ok", "skipped", "failed"]
    reason: Optional[str] = None
    data: Optional[dict] = None


class AnalysisReport(BaseModel):
    input: dict
    validation: Section
    duals: Section
    translations: Section
    character_table: Section
    graph: Section
    assumptions: Section
    witness: Section
    roundtrip: Section
