"""
Birational Round-Trip Module
Samples torus points on which (W) has all row and column sums zero with rank
r - beta, projects them to both base tori, and checks the gauge-fixed maps
phi and psi against each other.

Base coordinates:
- side 1: y1_i = z_i, the characters (e_i, 0) of M
- side 2: y2_i = z_i * prod_j x_j ** <e_i, n_j>, the graph basis of the
  structure-2 character lattice
(W) factors as diag(x) F1(y1) and as F2(y2) diag(x), with
F1(y)[a, b] = F2(y)[a, b] = sum over cell (a, b) of c * y ** m.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.character_table import build_xi
from app.config import NULL_ENTRY_TOL, RANK_TOL, RESIDUAL_TOL, SAMPLE_RETRIES
from app.exceptions import InputError, NotInOmegaError, SamplingFailureError
from app.nef import MirrorPair
from app.schemas import RoundTripReport
from app.w_graph import WStructure, build_w, restriction_from_flag
from app.witness_numeric import (
    TorusPoint,
    character_values,
    numeric_rank,
    verify_in_O1,
    verify_in_O2,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BasePoint:
    side: int
    values: np.ndarray
    coeffs: Dict[int, complex] = field(hash=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if np.any(values == 0):
            raise InputError("Base point coordinates must all be nonzero.")
        object.__setattr__(self, "values", values)


# ---------------------------------------------------------------------------
# Projections and the torus action
# ---------------------------------------------------------------------------

def _pairing_matrix(w: WStructure) -> np.ndarray:
    """rank x r_total matrix of <e_i, n_j>, zero on inactive vertices."""
    active = set(w.vertices)
    return np.array(
        [[w.translations[j][i] if j in active else 0 for j in range(w.table.r)] for i in range(w.rank)],
        dtype=np.int64,
    )


def project(w: WStructure, t: TorusPoint, side: int) -> BasePoint:
    """Image of t in the side-1 or side-2 base torus."""
    z, x = t.z(w.rank), t.x(w.rank)
    if side == 1:
        return BasePoint(side=1, values=z.copy(), coeffs=dict(t.coeffs))
    twist = np.prod(np.power(x[None, :], _pairing_matrix(w)), axis=1)
    return BasePoint(side=2, values=z * twist, coeffs=dict(t.coeffs))


def block_rescale(w: WStructure, t: TorusPoint, lambdas: Sequence[complex]) -> TorusPoint:
    """Multiply the fiber coordinates of block j by lambdas[j]."""
    if len(lambdas) != w.beta:
        raise InputError(f"Expected {w.beta} scalings, got {len(lambdas)}.")
    coords = t.coords.copy()
    for lam, block in zip(lambdas, w.blocks):
        for k in block:
            coords[w.rank + k] *= lam
    return t.with_coords(coords)


def base_factor(w: WStructure, y: BasePoint) -> np.ndarray:
    """F1(y) for side 1, F2(y) for side 2; same formula in the respective coordinates."""
    m = w.table.m_exponents
    values = np.prod(np.power(y.values[None, :], m), axis=1)
    r = w.r
    out = np.zeros((r, r), dtype=complex)
    for (a, b), ids in w.cells.items():
        out[w.position[a], w.position[b]] = sum(y.coeffs[i] * values[i] for i in ids)
    return out


def _term_scale(w: WStructure, y: BasePoint) -> float:
    m = w.table.m_exponents
    values = np.prod(np.power(y.values[None, :], m), axis=1)
    return max((sum(abs(y.coeffs[i] * values[i]) for i in ids) for ids in w.cells.values()), default=0.0)


def on_z_residual(w: WStructure, y: BasePoint) -> float:
    """Relative size of the row sums of F1 (side 1) or the column sums of F2 (side 2)."""
    f = base_factor(w, y)
    sums = f.sum(axis=1) if y.side == 1 else f.sum(axis=0)
    scale = _term_scale(w, y)
    return float(np.abs(sums).max() / scale) if scale else float(np.abs(sums).max())


# ---------------------------------------------------------------------------
# Gauge-fixed section and the maps
# ---------------------------------------------------------------------------

def gauge_section(w: WStructure, y: BasePoint, rank_tol: float = RANK_TOL,
                  null_entry_tol: float = NULL_ENTRY_TOL) -> TorusPoint:
    """
    The point above y whose fiber coordinates are the per-block null vectors
    of the base factor, scaled to 1 at the last vertex of each block

    Raises:
        NotInOmegaError: wrong rank, or a null vector with a vanishing entry
    """
    f = base_factor(w, y)
    scale = _term_scale(w, y)
    total = numeric_rank(f, tol=rank_tol, scale=scale).rank
    if total != w.r - w.beta:
        raise NotInOmegaError(f"Base factor has rank {total}, expected {w.r - w.beta}.")

    x = np.ones(w.table.r, dtype=complex)
    for j, (block, sl) in enumerate(zip(w.blocks, w.block_slices())):
        res = numeric_rank(f[sl, sl], tol=rank_tol, scale=scale)
        null = res.left_null if y.side == 1 else res.right_null.T
        if null.shape[0] != 1:
            raise NotInOmegaError(f"Block {j + 1} has a {null.shape[0]}-dimensional null space.")
        vec = null[0]
        mags = np.abs(vec)
        if mags.min() <= null_entry_tol * mags.max():
            raise NotInOmegaError(f"Null vector of block {j + 1} has a vanishing entry.")
        vec = vec / vec[-1]
        for k, value in zip(block, vec):
            x[k] = value

    if y.side == 1:
        z = y.values.copy()
    else:
        z = y.values / np.prod(np.power(x[None, :], _pairing_matrix(w)), axis=1)
    return TorusPoint(coords=np.concatenate([z, x]), coeffs=dict(y.coeffs))


def phi(w: WStructure, y1: BasePoint, **kwargs) -> BasePoint:
    if y1.side != 1:
        raise InputError("phi expects a side-1 base point.")
    return project(w, gauge_section(w, y1, **kwargs), 2)


def psi(w: WStructure, y2: BasePoint, **kwargs) -> BasePoint:
    if y2.side != 2:
        raise InputError("psi expects a side-2 base point.")
    return project(w, gauge_section(w, y2, **kwargs), 1)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def coefficient_system(w: WStructure, t: TorusPoint) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """
    Linear equations in the coefficients forcing row and column sums of (W) to vanish

    The column equation of the last vertex of every block is dropped: within a
    block it is implied by the others.

    Returns:
        (matrix with one row per equation, character ids labelling its columns)
    """
    values = character_values(w, t)
    ids = w.character_ids
    col = {i: n for n, i in enumerate(ids)}
    last = {block[-1] for block in w.blocks}

    rows = []
    for a in w.vertices:
        eq = np.zeros(len(ids), dtype=complex)
        for i in w.row_characters(a):
            eq[col[i]] = values[i]
        rows.append(eq)
    for b in w.vertices:
        if b in last:
            continue
        eq = np.zeros(len(ids), dtype=complex)
        for i in w.column_characters(b):
            eq[col[i]] = values[i]
        rows.append(eq)
    return np.array(rows), ids


def _random_torus(rng: np.random.Generator, size: int) -> np.ndarray:
    modulus = np.exp(rng.uniform(np.log(0.5), np.log(2.0), size))
    phase = rng.uniform(0.0, 2 * np.pi, size)
    return modulus * np.exp(1j * phase)


def sample_R_point(w: WStructure, seed: int, stream: int = 0, max_retries: int = SAMPLE_RETRIES,
                   rank_tol: float = RANK_TOL, residual_tol: float = RESIDUAL_TOL,
                   null_entry_tol: float = NULL_ENTRY_TOL) -> TorusPoint:
    """
    Random point where (W) has vanishing row and column sums and rank r - beta

    Coordinates are drawn first (log-uniform modulus in [1/2, 2], uniform
    phase); coefficients are then a random point of the solution space of
    coefficient_system. Each attempt uses its own generator seeded by
    (seed, stream, attempt).

    Raises:
        SamplingFailureError: no acceptable point within max_retries attempts
    """
    size = w.rank + w.table.r
    inactive = [w.rank + k for k in range(w.table.r) if k not in w.position]

    for attempt in range(max_retries):
        rng = np.random.default_rng([seed, stream, attempt])
        coords = _random_torus(rng, size)
        coords[inactive] = 1.0
        draft = TorusPoint(coords=coords, coeffs={})

        system, ids = coefficient_system(w, draft)
        null = numeric_rank(system, tol=rank_tol).right_null
        if null.shape[1] == 0:
            logger.debug("sample_R_point: attempt %d has no coefficient solutions", attempt + 1)
            continue
        mix = rng.normal(size=null.shape[1]) + 1j * rng.normal(size=null.shape[1])
        c = null @ mix
        if np.abs(c).min() <= null_entry_tol * np.abs(c).max():
            logger.debug("sample_R_point: attempt %d produced a vanishing coefficient", attempt + 1)
            continue

        t = TorusPoint(coords=coords, coeffs=dict(zip(ids, c)), attempts=attempt + 1)
        in_o1 = verify_in_O1(w, t, rank_tol, residual_tol, null_entry_tol)
        in_o2 = verify_in_O2(w, t, rank_tol, residual_tol, null_entry_tol)
        if in_o1.ok and in_o2.ok:
            if attempt:
                logger.warning("sample_R_point: accepted after %d attempts", attempt + 1)
            return t
        logger.debug("sample_R_point: attempt %d rejected by the membership checks", attempt + 1)

    raise SamplingFailureError(f"No acceptable point in {max_retries} attempts.", attempts=max_retries)


# ---------------------------------------------------------------------------
# Round trips
# ---------------------------------------------------------------------------

def deviation(a: np.ndarray, b: np.ndarray) -> float:
    """max |a - b| relative to max |b|."""
    ref = float(np.abs(b).max())
    return float(np.abs(a - b).max() / ref) if ref else float(np.abs(a - b).max())


class RoundTripChecker:
    """
    Sample-and-compare driver for phi and psi

    Args:
        samples: number of accepted samples to check
        tol: acceptance threshold on every recorded deviation
        seed: base seed; sample k draws from stream k
        max_retries: sampler retry cap per sample
    """

    def __init__(self, samples: int, tol: float = RESIDUAL_TOL, seed: int = 0,
                 max_retries: int = SAMPLE_RETRIES, rank_tol: float = RANK_TOL):
        self.samples = samples
        self.tol = tol
        self.seed = seed
        self.max_retries = max_retries
        self.rank_tol = rank_tol

    def check_sample(self, w: WStructure, t: TorusPoint, rng: np.random.Generator) -> Dict[str, float]:
        """Deviations for one accepted sample."""
        y1 = project(w, t, 1)
        y2 = project(w, t, 2)
        image2 = phi(w, y1, rank_tol=self.rank_tol)
        image1 = psi(w, y2, rank_tol=self.rank_tol)

        lambdas = _random_torus(rng, w.beta)
        rescaled = block_rescale(w, t, lambdas)

        return {
            "on_z_1": on_z_residual(w, y1),
            "on_z_2": on_z_residual(w, y2),
            "phi_vs_projection": deviation(image2.values, y2.values),
            "psi_phi": deviation(psi(w, image2, rank_tol=self.rank_tol).values, y1.values),
            "phi_psi": deviation(phi(w, image1, rank_tol=self.rank_tol).values, y2.values),
            "torsor": deviation(project(w, rescaled, 2).values, image2.values),
        }

    def run(self, w: WStructure) -> RoundTripReport:
        rows: List[Dict[str, float]] = []
        failures: List[str] = []
        attempts = drawn = succeeded = 0

        for k in range(self.samples):
            try:
                t = sample_R_point(w, self.seed, stream=k, max_retries=self.max_retries, rank_tol=self.rank_tol)
            except SamplingFailureError as exc:
                attempts += exc.attempts
                failures.append(f"sample {k + 1}: {exc}")
                continue
            attempts += t.attempts
            drawn += 1
            try:
                row = self.check_sample(w, t, np.random.default_rng([self.seed, k, 1 << 20]))
            except NotInOmegaError as exc:
                failures.append(f"sample {k + 1}: {exc}")
                continue
            rows.append(row)
            exceeded = [f"{name}={value:.3e}" for name, value in row.items() if not value <= self.tol]
            if exceeded:
                failures.append(f"sample {k + 1}: {', '.join(exceeded)} > tol {self.tol:.1e}")
            else:
                succeeded += 1

        report = RoundTripReport(
            samples_requested=self.samples,
            samples_succeeded=succeeded,
            attempts=attempts,
            retries=attempts - drawn,
            tol=self.tol,
            seed=self.seed,
            failures=failures,
        )
        if rows:
            worst = pd.DataFrame(rows).agg("max")
            report = report.model_copy(update={f"max_{name}": float(worst[name]) for name in worst.index})
        logger.info("roundtrip: %d/%d samples, worst deviations %s", succeeded, self.samples,
                    {k: v for k, v in report.model_dump().items() if k.startswith("max_")})
        return report


def roundtrip_check(mp: MirrorPair, samples: int, tol: float = RESIDUAL_TOL, seed: int = 0,
                    blocks: Optional[str] = None) -> RoundTripReport:
    """
    Sample, project, map across and back, and aggregate the deviations

    Args:
        mp: mirror pair
        samples: number of samples
        tol: acceptance threshold
        seed: base seed
        blocks: optional 1-based block selection such as "1" or "1,3"

    Returns:
        RoundTripReport; failures are recorded, never raised
    """
    w = restriction_from_flag(build_w(build_xi(mp)), blocks)
    return RoundTripChecker(samples=samples, tol=tol, seed=seed).run(w)
