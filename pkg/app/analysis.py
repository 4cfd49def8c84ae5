from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from app.birat import RoundTripChecker
from app.character_table import (
    CharacterTable,
    build_xi,
    check_assumption1,
    check_assumption2,
    classify_by_pairing,
    y2_lattice_basis,
)
from app.config import DEFAULT_SAMPLES, DEFAULT_SEED, RESIDUAL_TOL
from app.corpus import vertex_splits
from app.exceptions import InputError, InvalidClassesError, MissingValueError, NefPartitionError, NefToolkitError
from app.nef import DELTA, NABLA, MirrorPair, NefPartition, borisov_dual, coarsen, find_translations, validate
from app.polytope import hull
from app.schemas import (
    AnalysisReport,
    CoarsenReport,
    FanoReport,
    MirrorCandidate,
    MirrorInput,
    MirrorsReport,
    PartitionReport,
    RoundTripReport,
    Section,
    ValidationReport,
    WitnessReport,
    complex_pair,
)
from app.w_graph import (
    WStructure,
    block_translation_sums,
    build_w,
    quotient_arrows,
    restriction_from_flag,
    to_dot,
    verify_connectivity,
)
from app.witness_numeric import block_perron_data, build_witness, evaluate_W, verify_in_O1, verify_in_O2

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Input
# ---------------------------------------------------------------------------

def load_mirror_input(source: Union[str, Path, dict]) -> MirrorInput:
    """Read and validate an input file (or an already parsed dict)."""
    if isinstance(source, dict):
        data = source
    else:
        try:
            data = json.loads(Path(source).read_text())
        except OSError as exc:
            raise InputError(f"Cannot read {source}: {exc.strerror}.") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"{source} is not valid JSON: {exc.msg} at line {exc.lineno}.") from exc
    try:
        return MirrorInput.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        field = ".".join(str(p) for p in first["loc"]) or "input"
        raise InputError(f"Invalid field '{field}': {first['msg']}.", field=field) from exc


def _parts(vertices: Sequence[Sequence[Sequence[int]]], rank: int):
    parts = [hull(part) for part in vertices]
    for k, part in enumerate(parts):
        if part.rank != rank:
            raise InputError(f"Part {k + 1} has rank {part.rank}, the input declares rank {rank}.")
    return parts


def partition_from_input(inp: MirrorInput) -> NefPartition:
    if inp.nabla is not None:
        return validate(_parts(inp.nabla, inp.rank), side=NABLA)
    if inp.delta1 is not None:
        return validate(_parts(inp.delta1, inp.rank), side=DELTA)
    return validate(_parts([inp.polytope], inp.rank), side=NABLA)


def mirror_pair_from_input(inp: MirrorInput) -> MirrorPair:
    """
    Build the mirror pair described by an input file

    Args:
        inp: validated input; nabla entries need translations, delta entries
             need translations or delta2

    Returns:
        MirrorPair
    """
    if inp.nabla is not None:
        if inp.translations is None:
            raise MissingValueError("A nabla-side entry needs 'translations'.")
        return MirrorPair.from_nabla(validate(_parts(inp.nabla, inp.rank)), inp.translations)
    if inp.delta1 is not None:
        delta2 = _parts(inp.delta2, inp.rank) if inp.delta2 is not None else None
        return MirrorPair.from_delta(_parts(inp.delta1, inp.rank), inp.translations, delta2)
    raise MissingValueError("A polytope entry has no translations; run 'mirrors' on it first.")


def parse_classes(text: str, r: int) -> List[List[int]]:
    """'1,2;3' -> [[0, 1], [2]]."""
    try:
        classes = [[int(x) - 1 for x in chunk.split(",") if x.strip()] for chunk in text.split(";")]
    except ValueError as exc:
        raise InvalidClassesError(f"Cannot parse classes {text!r}.") from exc
    if any(k < 0 or k >= r for cls in classes for k in cls):
        raise InvalidClassesError(f"Class members must lie in 1..{r}.")
    return classes


# ---------------------------------------------------------------------------
# Single-command reports
# ---------------------------------------------------------------------------

def validation_report(inp: MirrorInput) -> ValidationReport:
    side = DELTA if inp.delta1 is not None else NABLA
    r = len(inp.nabla or inp.delta1 or [inp.polytope])
    try:
        partition = partition_from_input(inp)
    except NefPartitionError as exc:
        return ValidationReport(
            valid=False, rank=inp.rank, r=r, side=side,
            clause=exc.clause, part=None if exc.part is None else exc.part + 1, message=str(exc),
        )
    return ValidationReport(
        valid=True, rank=inp.rank, r=r, side=side, total_vertices=partition.total.to_json(),
    )


def partition_report(p: NefPartition) -> PartitionReport:
    return PartitionReport(
        rank=p.rank,
        side=p.side,
        parts=[part.to_json() for part in p.parts],
        lattice_point_counts=[len(part.lattice_points) for part in p.parts],
    )


def dual_report(inp: MirrorInput) -> PartitionReport:
    return partition_report(borisov_dual(partition_from_input(inp)))


def mirrors_report(inp: MirrorInput) -> MirrorsReport:
    if inp.polytope is not None:
        polytope = _parts([inp.polytope], inp.rank)[0]
        splits = vertex_splits(polytope, inp.parts or 2)
        found = [(p, n) for p in splits for n in find_translations(p)]
        searched = len(splits)
    else:
        partition = partition_from_input(inp)
        found = [(partition, n) for n in find_translations(partition)]
        searched = 1
    return MirrorsReport(
        rank=inp.rank,
        partitions_searched=searched,
        mirrors=[
            MirrorCandidate(parts=[part.to_json() for part in p.parts], translations=[list(n) for n in n_tuple])
            for p, n_tuple in found
        ],
    )


def witness_report(w: WStructure) -> WitnessReport:
    """Witness point of w with both membership reports."""
    t = build_witness(w)
    matrix = evaluate_W(w, t).matrix
    return WitnessReport(
        vertices=[v + 1 for v in w.vertices],
        blocks=[[v + 1 for v in block] for block in w.blocks],
        perron_values=[float(data.perron.value) for data in block_perron_data(w)],
        coefficients=[
            complex_pair(t.coeffs[i]) if i in t.coeffs else None for i in range(len(w.table.characters))
        ],
        coordinates=[complex_pair(z) for z in t.coords],
        w_matrix=[[complex_pair(z) for z in row] for row in matrix],
        notes=list(t.notes),
        in_o1=verify_in_O1(w, t),
        in_o2=verify_in_O2(w, t),
    )


def roundtrip_report(w: WStructure, samples: int, tol: float, seed: int) -> RoundTripReport:
    return RoundTripChecker(samples=samples, tol=tol, seed=seed).run(w)


def coarsen_report(mp: MirrorPair, classes: Sequence[Sequence[int]]) -> CoarsenReport:
    """Coarsen mp and compare its graph with the quotient of the original one."""
    result = coarsen(mp, classes)
    fine = build_w(build_xi(mp))
    coarse = build_w(build_xi(result.pair))
    expected = quotient_arrows(fine, result.classes)
    arrows = sorted(coarse.cells)
    return CoarsenReport(
        classes=[[k + 1 for k in cls] for cls in result.classes],
        trivial=result.trivial,
        rank=result.pair.rank,
        nabla=[part.to_json() for part in result.partition.parts],
        translations=[list(n) for n in result.pair.translations],
        arrows=[(a + 1, b + 1) for a, b in arrows],
        quotient_arrows=[(a + 1, b + 1) for a, b in expected],
        matches_quotient=arrows == expected,
    )


def fano_report(mp: MirrorPair, blocks: str, samples: int = DEFAULT_SAMPLES,
                tol: float = RESIDUAL_TOL, seed: int = DEFAULT_SEED) -> FanoReport:
    w = restriction_from_flag(build_w(build_xi(mp)), blocks)
    return FanoReport(
        blocks=[int(x) for x in blocks.split(",") if x.strip()],
        vertices=[v + 1 for v in w.vertices],
        beta=w.beta,
        d=list(w.d),
        witness=witness_report(w),
        roundtrip=roundtrip_report(w, samples, tol, seed) if samples > 0 else None,
    )


# ---------------------------------------------------------------------------
# Full analysis
# ---------------------------------------------------------------------------

def _section(build: Callable[[], dict]) -> Section:
    try:
        return Section(status="ok", data=build())
    except NefToolkitError as exc:
        logger.info("analysis section failed: %s", exc)
        return Section(status="failed", reason=f"{type(exc).__name__}: {exc}")


def _skipped(reason: str) -> Section:
    return Section(status="skipped", reason=reason)


def _roundtrip_section(w: WStructure, samples: int, tol: float, seed: int) -> Section:
    section = _section(lambda: roundtrip_report(w, samples, tol, seed).model_dump())
    if section.status == "ok" and not section.data["passed"]:
        requested = section.data["samples_requested"]
        failed = requested - section.data["samples_succeeded"]
        return Section(status="failed", reason=f"{failed} of {requested} samples failed", data=section.data)
    return section


def _table_summary(ct: CharacterTable) -> dict:
    counts = ct.cell_counts()
    agree = all(
        classify_by_pairing(ch.m, ch.a, ct.translations) == (ch.a, ch.b) for ch in ct.characters
    )
    return {
        "size": len(ct.characters),
        "cell_sizes": counts.values.tolist(),
        "row_sizes": counts.sum(axis=1).tolist(),
        "column_sizes": counts.sum(axis=0).tolist(),
        "pairing_agrees": agree,
        "characters": ct.to_records(),
    }


def compute_analysis(inp: MirrorInput, samples: int = DEFAULT_SAMPLES, tol: float = RESIDUAL_TOL,
                     seed: int = DEFAULT_SEED, blocks: Optional[str] = None) -> AnalysisReport:
    """
    Run the whole pipeline on one input

    Every section is present; sections after a failure are marked skipped.
    """
    sections = {}

    # Step 1: Build and validate the mirror pair
    try:
        mp = mirror_pair_from_input(inp)
        sections["validation"] = Section(status="ok", data={"verified": mp.verified, "r": mp.r})
    except NefToolkitError as exc:
        sections["validation"] = Section(status="failed", reason=f"{type(exc).__name__}: {exc}")
        rest = ["duals", "translations", "character_table", "graph", "assumptions", "witness", "roundtrip"]
        return AnalysisReport(
            input=inp.model_dump(exclude_none=True),
            **sections,
            **{name: _skipped("validation failed") for name in rest},
        )

    # Step 2: Dual partitions
    sections["duals"] = _section(lambda: {
        "delta1": partition_report(mp.delta1).model_dump(),
        "delta2": partition_report(mp.delta2).model_dump(),
    })

    # Step 3: Translation tuples of the nabla side
    if mp.nabla1 is not None:
        sections["translations"] = _section(lambda: {
            "given": [list(n) for n in mp.translations],
            "found": [[list(n) for n in combo] for combo in find_translations(mp.nabla1)],
        })
    else:
        sections["translations"] = _skipped("unverified Delta-side entry has no nabla data")

    # Step 4: Character table
    try:
        ct = build_xi(mp)
        sections["character_table"] = Section(status="ok", data=_table_summary(ct))
    except NefToolkitError as exc:
        sections["character_table"] = Section(status="failed", reason=f"{type(exc).__name__}: {exc}")
        rest = ["graph", "assumptions", "witness", "roundtrip"]
        return AnalysisReport(
            input=inp.model_dump(exclude_none=True),
            **sections,
            **{name: _skipped("character table failed") for name in rest},
        )

    # Step 5: Assumptions and graph
    sections["assumptions"] = _section(lambda: {
        "assumption1": [k + 1 for k in check_assumption1(ct)],
        "assumption2_side1": check_assumption2(ct, 1),
        "assumption2_side2": check_assumption2(ct, 2),
        "y2_basis": [[int(x) for x in row] for row in y2_lattice_basis(mp)],
    })
    try:
        w = restriction_from_flag(build_w(ct), blocks)
    except NefToolkitError as exc:
        sections["graph"] = Section(status="failed", reason=f"{type(exc).__name__}: {exc}")
        sections["witness"] = _skipped("graph failed")
        sections["roundtrip"] = _skipped("graph failed")
        return AnalysisReport(input=inp.model_dump(exclude_none=True), **sections)

    connectivity = verify_connectivity(w)
    sections["graph"] = Section(status="ok", data={
        "beta": w.beta,
        "d": list(w.d),
        "cell_sizes": w.cell_sizes(),
        "connectivity": connectivity.model_dump(),
        "strongly_connected": connectivity.ok,
        "block_translation_sums": [list(s) for s in block_translation_sums(w)],
        "dot": to_dot(w),
    })

    # Step 6: Witness
    sections["witness"] = _section(lambda: witness_report(w).model_dump())

    # Step 7: Round trips
    if samples <= 0:
        sections["roundtrip"] = _skipped("no samples requested")
    elif sections["witness"].status == "failed":
        sections["roundtrip"] = _skipped("witness construction failed")
    else:
        sections["roundtrip"] = _roundtrip_section(w, samples, tol, seed)

    return AnalysisReport(input=inp.model_dump(exclude_none=True), **sections)


# ---------------------------------------------------------------------------
# Human summaries
# ---------------------------------------------------------------------------

def summarize(report) -> str:
    """One short paragraph per report type, for stderr."""
    if isinstance(report, AnalysisReport):
        lines = []
        for name in ("validation", "duals", "translations", "character_table", "graph",
                     "assumptions", "witness", "roundtrip"):
            section = getattr(report, name)
            line = f"{name}: {section.status}"
            if section.reason:
                line += f" ({section.reason})"
            lines.append(line)
        table = report.character_table.data or {}
        graph = report.graph.data or {}
        if table:
            lines.append(f"cells {table['cell_sizes']}, |Xi| = {table['size']}")
        if graph:
            lines.append(f"beta = {graph['beta']}, d = {graph['d']}, strongly connected: {graph['strongly_connected']}")
        return "\n".join(lines)
    if isinstance(report, RoundTripReport):
        return (
            f"{report.samples_succeeded}/{report.samples_requested} samples, "
            f"{report.retries} retries, worst psi(phi) {report.max_psi_phi:.2e}, "
            f"worst phi(psi) {report.max_phi_psi:.2e}, passed: {report.passed}"
        )
    if isinstance(report, WitnessReport):
        return (
            f"Perron values {np.round(report.perron_values, 12).tolist()}, "
            f"O1 {'ok' if report.in_o1.ok else 'FAIL'}, O2 {'ok' if report.in_o2.ok else 'FAIL'}"
        )
    if isinstance(report, ValidationReport):
        if report.valid:
            return f"valid nef-partition with {report.r} part(s) in rank {report.rank}"
        return f"invalid: {report.message}"
    if isinstance(report, MirrorsReport):
        return f"{len(report.mirrors)} mirror translation tuple(s) over {report.partitions_searched} partition(s)"
    if isinstance(report, CoarsenReport):
        return f"classes {report.classes}: trivial={report.trivial}, matches quotient: {report.matches_quotient}"
    if isinstance(report, FanoReport):
        return f"blocks {report.blocks}: beta = {report.beta}, d = {report.d}"
    if isinstance(report, PartitionReport):
        return f"{report.side}-side partition with lattice point counts {report.lattice_point_counts}"
    return type(report).__name__
