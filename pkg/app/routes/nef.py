from typing import Optional

from fastapi import APIRouter, Header, HTTPException, Query

from app.analysis import compute_analysis, mirror_pair_from_input, roundtrip_report, witness_report
from app.character_table import build_xi
from app.config import API_KEY, DEFAULT_SAMPLES, DEFAULT_SEED, RESIDUAL_TOL
from app.exceptions import InputError, NefToolkitError
from app.schemas import AnalysisReport, MirrorInput, RoundTripReport, WitnessReport
from app.w_graph import WStructure, build_w, restriction_from_flag

router = APIRouter(prefix="/v1/nef", tags=["nef"])


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _check_key(x_api_key: str) -> None:
    if not API_KEY or x_api_key != API_KEY:
        raise HTTPException(status_code=403, detail="Invalid API key.")


def _as_http(exc: NefToolkitError) -> HTTPException:
    """Input errors → 400, domain failures → 422."""
    status = 400 if isinstance(exc, InputError) else 422
    return HTTPException(status_code=status, detail=f"{type(exc).__name__}: {exc}")


def _structure(body: MirrorInput, blocks: Optional[str]) -> WStructure:
    mp = mirror_pair_from_input(body)
    return restriction_from_flag(build_w(build_xi(mp)), blocks)


# ---------------------------------------------------------------------------
# POST /v1/nef/analyze
# ---------------------------------------------------------------------------

@router.post("/analyze", response_model=AnalysisReport)
def analyze(
    body: MirrorInput,
    samples: int = Query(DEFAULT_SAMPLES, ge=0, le=1000, description="Round-trip samples"),
    tol: float = Query(RESIDUAL_TOL, gt=0, lt=1, description="Round-trip tolerance"),
    seed: int = Query(DEFAULT_SEED, description="Sampling seed"),
    blocks: Optional[str] = Query(None, description="1-based block list, e.g. 1,3"),
    x_api_key: str = Header(..., alias="x-api-key", description="API key"),
):
    _check_key(x_api_key)
    try:
        return compute_analysis(body, samples=samples, tol=tol, seed=seed, blocks=blocks)
    except NefToolkitError as exc:
        raise _as_http(exc)


# ---------------------------------------------------------------------------
# POST /v1/nef/witness
# ---------------------------------------------------------------------------

@router.post("/witness", response_model=WitnessReport)
def witness(
    body: MirrorInput,
    blocks: Optional[str] = Query(None, description="1-based block list, e.g. 1,3"),
    x_api_key: str = Header(..., alias="x-api-key", description="API key"),
):
    _check_key(x_api_key)
    try:
        return witness_report(_structure(body, blocks))
    except NefToolkitError as exc:
        raise _as_http(exc)


# ---------------------------------------------------------------------------
# POST /v1/nef/birat-check
# ---------------------------------------------------------------------------

@router.post("/birat-check", response_model=RoundTripReport)
def birat_check(
    body: MirrorInput,
    samples: int = Query(DEFAULT_SAMPLES, ge=1, le=1000, description="Samples"),
    tol: float = Query(RESIDUAL_TOL, gt=0, lt=1, description="Tolerance"),
    seed: int = Query(DEFAULT_SEED, description="Sampling seed"),
    blocks: Optional[str] = Query(None, description="1-based block list, e.g. 1,3"),
    x_api_key: str = Header(..., alias="x-api-key", description="API key"),
):
    _check_key(x_api_key)
    try:
        return roundtrip_report(_structure(body, blocks), samples=samples, tol=tol, seed=seed)
    except NefToolkitError as exc:
        raise _as_http(exc)
