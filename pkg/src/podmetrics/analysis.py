"""Listening-test submission analysis.

Takes the JSON-lines submission log produced by the collection service
and turns it into vetted results: per-judger anchor statistics, the
screening filter that drops inattentive raters, attention-check
validation, pooled slider-score distributions per system, the merge of
direct questionnaire scores with LLM-derived justification scores, and a
cross-system normalized report suitable for radar plotting.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SubmissionError

SUBMISSION_SCHEMA_VERSION = 1

# Screening thresholds (percent). A judger is kept only if the low-quality
# anchor was rated strictly worst on at least LQ_THRESHOLD of pages AND the
# high-quality anchor landed in the top two on more than HQ_THRESHOLD.
LQ_THRESHOLD = 90.0
HQ_THRESHOLD = 50.0


@dataclass(frozen=True)
class SubmissionRecord:
    """One page of answers from one judger."""

    judger_id: str
    test_kind: str  # "mushra" | "questionnaire"
    page_id: str
    ratings: dict[str, float] = field(default_factory=dict)  # mushra: system -> 0..100
    answers: dict[str, dict] = field(default_factory=dict)  # questionnaire: qid -> cell
    anchors: dict[str, str] = field(default_factory=dict)  # {"lq": system, "hq": system}
    timestamp: float = 0.0
    session_seed: str = ""


def parse_submission(obj: dict, where: str = "submission") -> SubmissionRecord:
    """Validate one submission object; errors name the offending field."""
    if not isinstance(obj, dict):
        raise SubmissionError(f"{where}: must be an object")
    version = obj.get("schema_version", SUBMISSION_SCHEMA_VERSION)
    if version != SUBMISSION_SCHEMA_VERSION:
        raise SubmissionError(f"{where}: unsupported schema_version {version!r}")
    for fld in ("judger_id", "test_kind", "page_id"):
        if not isinstance(obj.get(fld), str) or not obj[fld]:
            raise SubmissionError(f"{where}.{fld}: missing or empty")
    kind = obj["test_kind"]
    if kind not in ("mushra", "questionnaire"):
        raise SubmissionError(f"{where}.test_kind: unknown kind {kind!r}")
    ratings: dict[str, float] = {}
    answers: dict[str, dict] = {}
    if kind == "mushra":
        raw = obj.get("ratings")
        if not isinstance(raw, dict) or not raw:
            raise SubmissionError(f"{where}.ratings: missing or empty")
        for system, score in raw.items():
            if isinstance(score, bool) or not isinstance(score, (int, float)):
                raise SubmissionError(f"{where}.ratings.{system}: score {score!r} not a number")
            if not 0 <= score <= 100 or not math.isfinite(float(score)):
                raise SubmissionError(f"{where}.ratings.{system}: score {score} outside [0, 100]")
            ratings[str(system)] = float(score)
    else:
        raw = obj.get("answers")
        if not isinstance(raw, dict) or not raw:
            raise SubmissionError(f"{where}.answers: missing or empty")
        for qid, cell in raw.items():
            if not isinstance(cell, dict) or "choice" not in cell:
                raise SubmissionError(f"{where}.answers.{qid}: need a choice field")
            choice = cell["choice"]
            if isinstance(choice, bool) or not isinstance(choice, (int, str)):
                raise SubmissionError(
                    f"{where}.answers.{qid}.choice: must be an integer or string"
                )
            just = cell.get("justification", "")
            if not isinstance(just, str):
                raise SubmissionError(f"{where}.answers.{qid}.justification: must be a string")
            answers[str(qid)] = {"choice": choice, "justification": just}
    anchors_raw = obj.get("anchors", {})
    if not isinstance(anchors_raw, dict):
        raise SubmissionError(f"{where}.anchors: must be an object")
    anchors = {str(k): str(v) for k, v in anchors_raw.items()}
    ts = obj.get("timestamp", 0.0)
    if isinstance(ts, bool) or not isinstance(ts, (int, float)):
        raise SubmissionError(f"{where}.timestamp: must be a number")
    return SubmissionRecord(
        judger_id=obj["judger_id"],
        test_kind=kind,
        page_id=obj["page_id"],
        ratings=ratings,
        answers=answers,
        anchors=anchors,
        timestamp=float(ts),
        session_seed=str(obj.get("session_seed", "")),
    )


def load_submissions(path: str | Path) -> list[SubmissionRecord]:
    """Read the append-only JSON-lines log.

    A truncated trailing line (interrupted write) is tolerated and
    skipped; a malformed line elsewhere is an error.
    """
    path = Path(path)
    records: list[SubmissionRecord] = []
    lines = path.read_text().split("\n")
    # Drop a trailing empty string from the final newline, if present.
    if lines and lines[-1] == "":
        lines.pop()
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            if i == len(lines) - 1:
                continue  # interrupted final write; recoverable by design
            raise SubmissionError(f"{path}:{i + 1}: corrupt submission line")
        records.append(parse_submission(obj, where=f"{path}:{i + 1}"))
    return records


@dataclass(frozen=True)
class JudgerStats:
    """Anchor-tracking percentages over one judger's slider pages."""

    judger_id: str
    lq_last_pct: float
    hq_top2_pct: float
    n_pages: int


def compute_judger_stats(submissions: list[SubmissionRecord], judger_id: str) -> JudgerStats:
    """Anchor statistics for one judger.

    lq_last counts pages where the low-quality anchor scored strictly
    below every other stimulus (a tie fails the page). hq_top2 counts
    pages where at most one stimulus scored strictly above the
    high-quality anchor (ties resolve in the anchor's favor).
    """
    pages = [s for s in submissions if s.judger_id == judger_id and s.test_kind == "mushra"]
    if not pages:
        raise SubmissionError(f"no slider pages for judger {judger_id!r}")
    lq_hits = hq_hits = 0
    for page in pages:
        lq = page.anchors.get("lq")
        hq = page.anchors.get("hq")
        if lq is None or hq is None:
            raise SubmissionError(
                f"page {page.page_id!r} of judger {judger_id!r} is missing anchor labels"
            )
        if lq not in page.ratings or hq not in page.ratings:
            raise SubmissionError(
                f"page {page.page_id!r} of judger {judger_id!r}: anchor not among ratings"
            )
        others = [v for k, v in page.ratings.items() if k != lq]
        if all(page.ratings[lq] < v for v in others):
            lq_hits += 1
        strictly_above_hq = sum(
            1 for k, v in page.ratings.items() if k != hq and v > page.ratings[hq]
        )
        if strictly_above_hq <= 1:
            hq_hits += 1
    n = len(pages)
    return JudgerStats(
        judger_id=judger_id,
        lq_last_pct=100.0 * lq_hits / n,
        hq_top2_pct=100.0 * hq_hits / n,
        n_pages=n,
    )


def compute_all_judger_stats(submissions: list[SubmissionRecord]) -> dict[str, JudgerStats]:
    ids: dict[str, None] = {}
    for s in submissions:
        if s.test_kind == "mushra":
            ids.setdefault(s.judger_id)
    return {jid: compute_judger_stats(submissions, jid) for jid in ids}


@dataclass(frozen=True)
class FilterResult:
    kept: list[str]
    excluded: list[str]
    reasons: dict[str, str]


def filter_judgers(
    stats: dict[str, JudgerStats],
    lq_threshold: float = LQ_THRESHOLD,
    hq_threshold: float = HQ_THRESHOLD,
) -> FilterResult:
    """Screen judgers on both anchor requirements.

    Kept iff lq_last_pct >= lq_threshold AND hq_top2_pct > hq_threshold.
    The asymmetry is deliberate: the low-quality anchor is unmistakably
    bad, so missing it even at the boundary signals inattention, while a
    high-quality anchor sitting exactly at the threshold is forgivable
    only above it.
    """
    if not 0 < lq_threshold <= 100 or not 0 < hq_threshold <= 100:
        raise SubmissionError("thresholds must lie in (0, 100]")
    kept: list[str] = []
    excluded: list[str] = []
    reasons: dict[str, str] = {}
    for jid, st in stats.items():
        fails: list[str] = []
        if st.lq_last_pct < lq_threshold:
            fails.append(
                f"low anchor ranked last on only {st.lq_last_pct:.2f}% (< {lq_threshold:g}%)"
            )
        if st.hq_top2_pct <= hq_threshold:
            fails.append(
                f"high anchor in top-2 on only {st.hq_top2_pct:.2f}% (<= {hq_threshold:g}%)"
            )
        if fails:
            excluded.append(jid)
            reasons[jid] = "; ".join(fails)
        else:
            kept.append(jid)
    return FilterResult(kept=kept, excluded=excluded, reasons=reasons)


@dataclass(frozen=True)
class SystemDistribution:
    system: str
    mean: float
    median: float
    q1: float
    q3: float
    lo: float
    hi: float
    n: int


def aggregate_mushra(
    submissions: list[SubmissionRecord], kept_judgers: list[str] | None = None
) -> dict[str, SystemDistribution]:
    """Pool slider scores per system over all pages of the kept judgers."""
    pool: dict[str, list[float]] = {}
    for s in submissions:
        if s.test_kind != "mushra":
            continue
        if kept_judgers is not None and s.judger_id not in kept_judgers:
            continue
        for system, score in s.ratings.items():
            pool.setdefault(system, []).append(score)
    if not pool:
        raise SubmissionError("no slider scores to aggregate")
    out: dict[str, SystemDistribution] = {}
    for system in sorted(pool):
        arr = np.array(pool[system], dtype=np.float64)
        q1, med, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
        out[system] = SystemDistribution(
            system=system,
            mean=float(arr.mean()),
            median=float(med),
            q1=float(q1),
            q3=float(q3),
            lo=float(arr.min()),
            hi=float(arr.max()),
            n=int(arr.size),
        )
    return out


@dataclass(frozen=True)
class AttentionResult:
    passed: bool
    failures: list[str]


def validate_attention(submission: SubmissionRecord, key: dict[str, object]) -> AttentionResult:
    """Compare a questionnaire page's attention answers against the key.

    Every question in the key must match the submitted choice; a missing
    answer counts as a failure, not an error. Comparison is by string so
    numeric counts and labels like "Neutral" follow one code path.
    """
    failures: list[str] = []
    for qid, expected in key.items():
        cell = submission.answers.get(qid)
        if cell is None:
            failures.append(f"{qid}: no answer")
        elif str(cell["choice"]) != str(expected):
            failures.append(f"{qid}: answered {cell['choice']!r}, expected {expected!r}")
    return AttentionResult(passed=not failures, failures=failures)


@dataclass(frozen=True)
class MosCell:
    value: float
    direct: float
    justification: float | None
    direct_only: bool


def combine_mos(
    direct: dict[str, dict[str, float]],
    justification: dict[str, dict[str, float]] | None = None,
) -> dict[str, dict[str, MosCell]]:
    """Merge direct questionnaire means with justification-based scores.

    Cell-wise arithmetic mean over the system x question grid. A cell with
    no justification score keeps its direct value and is flagged
    ``direct_only``. Justification cells without a direct counterpart are
    an error — the direct grid defines the shape.
    """
    if not direct or all(not row for row in direct.values()):
        raise SubmissionError("empty score grid")
    justification = justification or {}
    for system, row in justification.items():
        if system not in direct:
            raise SubmissionError(f"justification scores for unknown system {system!r}")
        stray = set(row) - set(direct[system])
        if stray:
            raise SubmissionError(
                f"justification scores for unknown questions on {system!r}: {sorted(stray)}"
            )
    out: dict[str, dict[str, MosCell]] = {}
    for system, row in direct.items():
        out[system] = {}
        for question, d_val in row.items():
            j_val = justification.get(system, {}).get(question)
            if j_val is None:
                out[system][question] = MosCell(
                    value=d_val, direct=d_val, justification=None, direct_only=True
                )
            else:
                out[system][question] = MosCell(
                    value=(d_val + j_val) / 2.0,
                    direct=d_val,
                    justification=j_val,
                    direct_only=False,
                )
    return out


# Metrics where a smaller raw value is the better one; the normalized
# report keeps min->0 / max->1 for every metric and annotates these so a
# radar consumer can invert for display if it wants "bigger is better".
LOWER_IS_BETTER = {"wer"}


def build_system_reports(
    metrics_by_system: dict[str, dict[str, dict[str, float]]],
) -> dict[str, dict]:
    """Cross-system normalized report.

    Input shape: system -> family -> metric -> raw value, with families
    like "text", "speech", "audio", "subjective". Each metric present in
    two or more systems is min-max normalized across systems (min -> 0,
    max -> 1; all-equal values normalize to 1.0); single-system metrics
    normalize to 1.0. Families a system lacks are marked not evaluated.
    """
    if not metrics_by_system:
        raise SubmissionError("no systems to report on")
    families: set[str] = set()
    for fams in metrics_by_system.values():
        families.update(fams)
    # Gather cross-system spans per (family, metric).
    spans: dict[tuple[str, str], tuple[float, float]] = {}
    for fams in metrics_by_system.values():
        for family, metrics in fams.items():
            for name, value in metrics.items():
                key = (family, name)
                lo, hi = spans.get(key, (value, value))
                spans[key] = (min(lo, value), max(hi, value))
    reports: dict[str, dict] = {}
    for system, fams in metrics_by_system.items():
        famdoc: dict[str, object] = {}
        for family in sorted(families):
            if family not in fams:
                famdoc[family] = {"evaluated": False}
                continue
            entries = {}
            for name, value in fams[family].items():
                lo, hi = spans[(family, name)]
                norm = 1.0 if hi == lo else (value - lo) / (hi - lo)
                entry = {"raw": value, "normalized": norm}
                if name in LOWER_IS_BETTER:
                    entry["direction"] = "lower"
                entries[name] = entry
            famdoc[family] = {"evaluated": True, "metrics": entries}
        reports[system] = {"system": system, "families": famdoc}
    return reports


def radar_payload(reports: dict[str, dict]) -> dict:
    """Flatten normalized metrics into the axis/series shape the UI plots."""
    axes: list[str] = []
    seen: set[str] = set()
    for rep in reports.values():
        for family, doc in sorted(rep["families"].items()):
            if not doc.get("evaluated"):
                continue
            for name in doc["metrics"]:
                label = f"{family}/{name}"
                if label not in seen:
                    seen.add(label)
                    axes.append(label)
    series = []
    for system, rep in sorted(reports.items()):
        values: list[float | None] = []
        for label in axes:
            family, name = label.split("/", 1)
            doc = rep["families"].get(family, {})
            if doc.get("evaluated") and name in doc["metrics"]:
                values.append(doc["metrics"][name]["normalized"])
            else:
                values.append(None)
        series.append({"system": system, "values": values})
    return {"axes": axes, "series": series}
