"""Load exam-score and program tables and turn them into matching inputs.

Candidate files are CSV with columns ``candidate_id``, ``score`` and one or
more group-attribute columns. Program files have ``program_id``,
``capacity``, ``opening_rank`` and ``closing_rank``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from fairselect.core import GroupLabels, InputError

log = logging.getLogger(__name__)

PROGRAM_COLUMNS = ("program_id", "capacity", "opening_rank", "closing_rank")


class ParseError(InputError):
    """A data file is malformed; the message names the offending line."""


@dataclass(frozen=True)
class CandidateRecord:
    candidate_id: str
    score: float
    group_label: str


@dataclass(frozen=True)
class ProgramRecord:
    program_id: str
    capacity: int
    opening_rank: int
    closing_rank: int

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise InputError(f"program {self.program_id!r}: capacity must be positive")
        if not 1 <= self.opening_rank <= self.closing_rank:
            raise InputError(f"program {self.program_id!r}: need 1 <= opening_rank <= closing_rank")


class CandidateData(NamedTuple):
    scores: np.ndarray
    groups: GroupLabels
    mapping: dict[str, int]
    ids: tuple[str, ...]


class CentralRanking(NamedTuple):
    program_ids: tuple[str, ...]
    capacities: tuple[int, ...]
    ties: tuple[tuple[str, ...], ...]


def _rows(path: str | Path, required: Sequence[str]):
    """Yield ``(line_number, row)`` after checking the header has ``required`` columns."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise ParseError(f"{path}: line 1: missing column(s) {missing}; header is {header}")
        for row in reader:
            yield reader.line_num, row


def _number(text: str, kind, path, line: int, column: str):
    try:
        value = kind(text)
    except (TypeError, ValueError):
        raise ParseError(f"{path}: line {line}: column {column!r} is not a valid {kind.__name__}: {text!r}") from None
    if kind is float and not math.isfinite(value):
        raise ParseError(f"{path}: line {line}: column {column!r} must be finite, got {text!r}")
    return value


def read_candidate_records(path: str | Path, group_column: str) -> list[CandidateRecord]:
    records: list[CandidateRecord] = []
    seen: dict[str, int] = {}
    for line, row in _rows(path, ("candidate_id", "score", group_column)):
        cid = row["candidate_id"]
        if cid in seen:
            raise ParseError(f"{path}: line {line}: duplicate candidate_id {cid!r} (first seen on line {seen[cid]})")
        seen[cid] = line
        label = row[group_column]
        if label is None or label == "":
            raise ParseError(f"{path}: line {line}: empty {group_column!r}")
        records.append(CandidateRecord(cid, _number(row["score"], float, path, line, "score"), label))
    return records


def write_candidate_records(path: str | Path, records: Sequence[CandidateRecord], group_column: str = "group") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["candidate_id", "score", group_column])
        for r in records:
            writer.writerow([r.candidate_id, repr(r.score), r.group_label])


def load_candidates(path: str | Path, group_column: str) -> CandidateData:
    """Scores in file order and group ids assigned by first appearance of each label."""
    records = read_candidate_records(path, group_column)
    if not records:
        raise ParseError(f"{path}: no candidate rows")
    mapping: dict[str, int] = {}
    labels = [mapping.setdefault(r.group_label, len(mapping)) for r in records]
    return CandidateData(
        np.array([r.score for r in records]),
        GroupLabels(labels, len(mapping)),
        mapping,
        tuple(r.candidate_id for r in records),
    )


def read_programs(path: str | Path) -> list[ProgramRecord]:
    programs: list[ProgramRecord] = []
    seen: dict[str, int] = {}
    for line, row in _rows(path, PROGRAM_COLUMNS):
        pid = row["program_id"]
        if pid in seen:
            raise ParseError(f"{path}: line {line}: duplicate program_id {pid!r} (first seen on line {seen[pid]})")
        seen[pid] = line
        values = [_number(row[c], int, path, line, c) for c in PROGRAM_COLUMNS[1:]]
        try:
            programs.append(ProgramRecord(pid, *values))
        except InputError as exc:
            raise ParseError(f"{path}: line {line}: {exc}") from None
    return programs


def write_programs(path: str | Path, programs: Sequence[ProgramRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PROGRAM_COLUMNS)
        for p in programs:
            writer.writerow([p.program_id, p.capacity, p.opening_rank, p.closing_rank])


def build_central_ranking(programs: Sequence[ProgramRecord], closing_rank_cutoff: float = math.inf) -> CentralRanking:
    """Programs with closing rank at most the cutoff, most selective first.

    Equal closing ranks are ordered by ``program_id``; each such tie is logged
    and returned in ``ties``.
    """
    if not programs:
        raise InputError("no programs given")
    kept = sorted(
        (p for p in programs if p.closing_rank <= closing_rank_cutoff),
        key=lambda p: (p.closing_rank, p.program_id),
    )
    if not kept:
        raise InputError(f"no program has closing rank <= {closing_rank_cutoff}")
    ties = []
    by_rank: dict[int, list[str]] = {}
    for p in kept:
        by_rank.setdefault(p.closing_rank, []).append(p.program_id)
    for rank, ids in by_rank.items():
        if len(ids) > 1:
            log.warning("closing rank %d shared by %s; ordered by program_id", rank, ids)
            ties.append(tuple(ids))
    return CentralRanking(tuple(p.program_id for p in kept), tuple(p.capacity for p in kept), tuple(ties))


def top_by_score(scores: np.ndarray, ids: Sequence[str], limit: int | None) -> np.ndarray:
    """Indices of the ``limit`` best candidates (score descending, ties by candidate_id), in file order."""
    if limit is None or limit >= len(scores):
        return np.arange(len(scores))
    if limit < 1:
        raise InputError(f"rank limit must be positive, got {limit}")
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], ids[i]))
    return np.sort(np.array(order[:limit], dtype=np.int64))


# Opening and closing ranks of the 33 most selective programs; capacities are
# invented. The seven rows after them are invented programs beyond a closing
# rank of 1000.
_TABLE = [
    ("CSE (4Yr), IIT Bombay", 3, 86),
    ("EE (4Yr), IIT Bombay", 8, 109),
    ("CSE (4Yr), IIT Delhi", 1, 154),
    ("CSE (4Yr), IIT Kanpur", 2, 181),
    ("CSE (4Yr), IIT Madras", 5, 215),
    ("EE (4Yr), IIT Delhi", 108, 241),
    ("EE w/ Micro (5Yr), IIT Bombay", 117, 245),
    ("CSE (5Yr), IIT Delhi", 187, 278),
    ("EE (4Yr), IIT Madras", 32, 310),
    ("EE w/ Info. & Comm. Tech. (5Yr), IIT Delhi", 284, 369),
    ("EE w/ Comm. & SP (5Yr), IIT Bombay", 266, 379),
    ("EE (4Yr), IIT Kanpur", 39, 416),
    ("CSE (5Yr), IIT Kanpur", 216, 422),
    ("ME (4Yr), IIT Bombay", 72, 494),
    ("CSE (5Yr), IIT Madras", 333, 502),
    ("CSE (4Yr), IIT Kharag.", 276, 527),
    ("EE (5Yr), IIT Kanpur", 423, 608),
    ("ME (4Yr), IIT Delhi", 237, 634),
    ("ME w/ CAD & Auto. (5Yr), IIT Bombay", 419, 637),
    ("EE w/ Micro & VLSI (5Yr), IIT Madras", 339, 716),
    ("ME w/ CIM (5Yr), IIT Bombay", 556, 757),
    ("EE w/ Power (4Yr), IIT Delhi", 477, 758),
    ("EEC (4Yr), IIT Kharag.", 133, 762),
    ("EE w/ Comm. Eng. (5Yr), IIT Madras", 458, 764),
    ("Math. & Comp. (5Yr), IIT Delhi", 348, 789),
    ("ME (4Yr), IIT Kanpur", 497, 806),
    ("ME (4Yr), IIT Madras", 275, 820),
    ("CSE (5Yr), IIT Kharag.", 431, 877),
    ("EE (4Yr), IIT Kharag.", 596, 920),
    ("Chem. Eng. (4Yr), IIT Bombay", 244, 928),
    ("EE w/ Power Sys. & Elec. (5Yr), IIT Madras", 773, 937),
    ("CSE (4Yr), IIT Roorkee", 471, 984),
    ("ME (5Yr), IIT Kanpur", 808, 992),
    ("CSE (4Yr), IIT Guwahati", 640, 1105),
    ("EE (4Yr), IIT Roorkee", 702, 1187),
    ("Civil Eng. (4Yr), IIT Bombay", 520, 1240),
    ("ME (4Yr), IIT Kharag.", 690, 1302),
    ("Aero. Eng. (4Yr), IIT Bombay", 610, 1388),
    ("EE (4Yr), IIT Guwahati", 905, 1476),
    ("Chem. Eng. (4Yr), IIT Delhi", 830, 1553),
]

FIXTURE_BETAS = {"gender": 0.69, "birth_category": 0.52}
FIXTURE_MINORITY_SHARE = {"gender": 0.3, "birth_category": 0.45}
FIXTURE_LABELS = {"gender": ("M", "F"), "birth_category": ("GE", "OBC/SC/ST")}


def fixture_programs(rng: np.random.Generator) -> list[ProgramRecord]:
    caps = rng.integers(20, 46, len(_TABLE))
    return [ProgramRecord(pid, int(c), o, cr) for (pid, o, cr), c in zip(_TABLE, caps)]


def fixture_candidates(rng: np.random.Generator, n: int = 5000) -> list[dict[str, str]]:
    """Synthetic exam scores with gender and birth-category gaps.

    Latent ability is half-normal scaled to 100; each candidate's score is
    the latent value multiplied by the bias factor of every disadvantaged
    attribute they hold. The two attributes are drawn independently.
    """
    latent = 100 * np.abs(rng.standard_normal(n))
    score = latent.copy()
    attrs = {}
    for column, share in FIXTURE_MINORITY_SHARE.items():
        minority = rng.random(n) < share
        score[minority] *= FIXTURE_BETAS[column]
        major, minor = FIXTURE_LABELS[column]
        attrs[column] = np.where(minority, minor, major)
    return [
        {
            "candidate_id": f"C{i:05d}",
            "score": f"{score[i]:.3f}",
            **{c: str(attrs[c][i]) for c in FIXTURE_MINORITY_SHARE},
        }
        for i in range(n)
    ]


def write_fixture(directory: str | Path, seed: int = 2009, n: int = 5000) -> tuple[Path, Path]:
    """Write ``candidates.csv`` and ``programs.csv`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    cand_path, prog_path = directory / "candidates.csv", directory / "programs.csv"
    write_programs(prog_path, fixture_programs(rng))
    rows = fixture_candidates(rng, n)
    with open(cand_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    return cand_path, prog_path


def bundled_fixture() -> tuple[Path, Path]:
    """Paths of the shipped synthetic candidates and programs files."""
    base = resources.files("fairselect") / "data"
    return Path(str(base / "candidates.csv")), Path(str(base / "programs.csv"))
