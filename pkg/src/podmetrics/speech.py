"""Transcript and speaker-embedding metrics.

Word error rate over normalized token sequences, cosine similarity between
speaker embeddings, voice-similarity aggregation against reference voices,
the pairwise timbre-difference score over a speaker set, and ingestion of
externally computed per-file model scores (speech/background/overall MOS
estimates and speech-music plausibility). ASR, embedding extraction, and
the scoring models themselves run out of process; this module consumes
their outputs.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MetricError

# Metric names accepted from external scorer output files. The first four
# are MOS-scale estimates in [1, 5]; CASP is a plausibility score in [0, 1].
EXTERNAL_METRIC_RANGES: dict[str, tuple[float, float]] = {
    "SIG": (1.0, 5.0),
    "BAK": (1.0, 5.0),
    "OVRL": (1.0, 5.0),
    "P808_MOS": (1.0, 5.0),
    "CASP": (0.0, 1.0),
}

# Keep intra-word apostrophes ("don't"); strip other punctuation from token
# edges. Unicode apostrophe variants are folded to ASCII first.
_APOSTROPHES = str.maketrans({"’": "'", "ʼ": "'"})
_EDGE_PUNCT = re.compile(r"^[^\w']+|[^\w']+$")

# Full S/D/I backtrace tables are kept only up to this many DP cells;
# larger pairs still get an exact distance via the O(min(m,n)) row DP.
_BACKTRACE_CELL_LIMIT = 4_000_000


def normalize_tokens(text: str) -> list[str]:
    """Deterministic tokenizer shared by WER and the text metrics.

    Lowercases, splits on whitespace, strips leading/trailing punctuation
    from each token, and keeps intra-word apostrophes. Numbers pass through
    unexpanded. Tokens that normalize to nothing are dropped.
    """
    out = []
    for raw in text.translate(_APOSTROPHES).lower().split():
        tok = _EDGE_PUNCT.sub("", raw)
        if tok:
            out.append(tok)
    return out


@dataclass(frozen=True)
class WerResult:
    """WER plus the alignment breakdown when the pair was small enough."""

    wer: float
    distance: int
    ref_len: int
    hyp_len: int
    substitutions: int | None = None
    deletions: int | None = None
    insertions: int | None = None

    @property
    def has_breakdown(self) -> bool:
        return self.substitutions is not None


def _edit_distance(ref: list[str], hyp: list[str]) -> int:
    """Levenshtein distance with unit costs, vectorized row DP.

    Row update: row[j] = min(sub/del candidates, row[j-1] + 1). The
    insertion term is a prefix-min recurrence; substituting
    u[j] = row[j] - j turns it into a plain cumulative minimum.
    """
    if not hyp:
        return len(ref)
    h = np.array(hyp)
    prev = np.arange(len(hyp) + 1, dtype=np.int64)
    for i, r_tok in enumerate(ref, start=1):
        row = np.empty_like(prev)
        row[0] = i
        sub = prev[:-1] + (h != r_tok)
        dele = prev[1:] + 1
        row[1:] = np.minimum(sub, dele)
        u = row - np.arange(len(hyp) + 1)
        row = np.minimum.accumulate(u) + np.arange(len(hyp) + 1)
        prev = row
    return int(prev[-1])


def _edit_breakdown(ref: list[str], hyp: list[str]) -> tuple[int, int, int]:
    """(S, D, I) from a full-table backtrace.

    Tie-break at equal cost prefers substitution, then insertion, then
    deletion, making the counts deterministic.
    """
    m, n = len(ref), len(hyp)
    d = np.zeros((m + 1, n + 1), dtype=np.int64)
    d[:, 0] = np.arange(m + 1)
    d[0, :] = np.arange(n + 1)
    for i in range(1, m + 1):
        sub = d[i - 1, :-1] + (np.array(hyp) != ref[i - 1] if n else 0)
        dele = d[i - 1, 1:] + 1
        d[i, 1:] = np.minimum(sub, dele)
        u = d[i] - np.arange(n + 1)
        d[i] = np.minimum.accumulate(u) + np.arange(n + 1)
    s = dd = ins = 0
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            diag_cost = 0 if ref[i - 1] == hyp[j - 1] else 1
            if d[i, j] == d[i - 1, j - 1] + diag_cost:
                s += diag_cost
                i -= 1
                j -= 1
                continue
        if j > 0 and d[i, j] == d[i, j - 1] + 1:
            ins += 1
            j -= 1
            continue
        dd += 1
        i -= 1
    return s, dd, ins


def wer(reference: list[str] | str, hypothesis: list[str] | str) -> WerResult:
    """Word error rate (S + D + I) / |reference|.

    String inputs are tokenized with :func:`normalize_tokens`; lists are
    taken as already-normalized tokens. An empty reference is an error; an
    empty hypothesis against a non-empty reference scores 1.0.
    """
    ref = normalize_tokens(reference) if isinstance(reference, str) else list(reference)
    hyp = normalize_tokens(hypothesis) if isinstance(hypothesis, str) else list(hypothesis)
    if not ref:
        raise MetricError("WER needs a non-empty reference")
    if (len(ref) + 1) * (len(hyp) + 1) <= _BACKTRACE_CELL_LIMIT:
        s, d, i = _edit_breakdown(ref, hyp)
        dist = s + d + i
        return WerResult(
            wer=dist / len(ref),
            distance=dist,
            ref_len=len(ref),
            hyp_len=len(hyp),
            substitutions=s,
            deletions=d,
            insertions=i,
        )
    dist = _edit_distance(ref, hyp)
    return WerResult(wer=dist / len(ref), distance=dist, ref_len=len(ref), hyp_len=len(hyp))


def cosine_sim(a, b) -> float:
    """dot(a, b) / (|a| * |b|); errors on dimension mismatch or zero norm."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape or va.ndim != 1:
        raise MetricError(f"embedding dimension mismatch: {va.shape} vs {vb.shape}")
    if not (np.all(np.isfinite(va)) and np.all(np.isfinite(vb))):
        raise MetricError("embeddings must be finite")
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise MetricError("zero-norm embedding")
    return float(np.dot(va, vb) / (na * nb))


@dataclass(frozen=True)
class SpeakerEmbedding:
    speaker_id: str
    vector: np.ndarray
    file_id: str = ""

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise MetricError(f"speaker {self.speaker_id!r}: embedding must be a 1-D vector")
        if not np.all(np.isfinite(v)):
            raise MetricError(f"speaker {self.speaker_id!r}: embedding has non-finite values")
        if np.linalg.norm(v) == 0.0:
            raise MetricError(f"speaker {self.speaker_id!r}: zero-norm embedding")
        object.__setattr__(self, "vector", v)


def pool_by_speaker(embeddings: list[SpeakerEmbedding]) -> dict[str, np.ndarray]:
    """One unit-norm vector per speaker: mean-pool, then renormalize."""
    grouped: dict[str, list[np.ndarray]] = {}
    dim: int | None = None
    for e in embeddings:
        if dim is None:
            dim = e.vector.size
        elif e.vector.size != dim:
            raise MetricError(
                f"speaker {e.speaker_id!r}: dimension {e.vector.size} != {dim}"
            )
        grouped.setdefault(e.speaker_id, []).append(e.vector)
    pooled: dict[str, np.ndarray] = {}
    for spk, vecs in grouped.items():
        mean = np.mean(vecs, axis=0)
        norm = np.linalg.norm(mean)
        if norm == 0.0:
            raise MetricError(f"speaker {spk!r}: embeddings cancel to a zero vector")
        pooled[spk] = mean / norm
    return pooled


def sptd(embeddings: list[SpeakerEmbedding]) -> float:
    """Pairwise timbre difference over N >= 2 distinct speakers.

    1 - (2 / (N(N-1))) * sum over unordered pairs of cosine_sim(e_i, e_j),
    after mean-pooling multi-embedding speakers. 0.0 means identical
    voices; larger values mean more distinct voices.
    """
    pooled = pool_by_speaker(embeddings)
    if len(pooled) < 2:
        raise MetricError(f"timbre difference needs >= 2 distinct speakers, got {len(pooled)}")
    mat = np.stack(list(pooled.values()))  # already unit-norm
    sims = mat @ mat.T
    n = mat.shape[0]
    iu = np.triu_indices(n, k=1)
    return float(1.0 - (2.0 / (n * (n - 1))) * sims[iu].sum())


@dataclass(frozen=True)
class SimilarityResult:
    per_speaker: dict[str, float]
    mean: float


def speaker_similarity(
    generated: list[SpeakerEmbedding], reference: list[SpeakerEmbedding]
) -> SimilarityResult:
    """Voice similarity of generated speech against reference voices.

    Each generated speaker's utterance embeddings are compared against the
    same speaker's reference embedding (both sides mean-pooled); reports
    the per-speaker cosine similarity and the mean across speakers.
    """
    gen = pool_by_speaker(generated)
    ref = pool_by_speaker(reference)
    missing = sorted(set(gen) - set(ref))
    if missing:
        raise MetricError(f"no reference embedding for speakers: {', '.join(missing)}")
    if not gen:
        raise MetricError("no generated embeddings")
    per = {spk: cosine_sim(gen[spk], ref[spk]) for spk in sorted(gen)}
    return SimilarityResult(per_speaker=per, mean=float(np.mean(list(per.values()))))


def load_embeddings(path: str | Path) -> list[SpeakerEmbedding]:
    """JSON-lines of {speaker_id, file_id?, vector: [...]}, order preserved."""
    path = Path(path)
    out: list[SpeakerEmbedding] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise MetricError(f"{path}:{lineno}: invalid JSON ({e})") from e
        if not isinstance(rec, dict) or "speaker_id" not in rec or "vector" not in rec:
            raise MetricError(f"{path}:{lineno}: need speaker_id and vector fields")
        out.append(
            SpeakerEmbedding(
                speaker_id=str(rec["speaker_id"]),
                vector=np.asarray(rec["vector"], dtype=np.float64),
                file_id=str(rec.get("file_id", "")),
            )
        )
    if not out:
        raise MetricError(f"{path}: no embeddings found")
    return out


@dataclass(frozen=True)
class ExternalScoreRecord:
    file_id: str
    metric: str
    value: float


def _validate_external(file_id: str, metric: str, value_raw, where: str) -> ExternalScoreRecord:
    if metric not in EXTERNAL_METRIC_RANGES:
        known = ", ".join(sorted(EXTERNAL_METRIC_RANGES))
        raise MetricError(f"{where}: unknown metric {metric!r} (expected one of {known})")
    try:
        value = float(value_raw)
    except (TypeError, ValueError) as e:
        raise MetricError(f"{where}: value {value_raw!r} is not a number") from e
    lo, hi = EXTERNAL_METRIC_RANGES[metric]
    if not (lo <= value <= hi) or not np.isfinite(value):
        raise MetricError(f"{where}: {metric} value {value} outside [{lo}, {hi}]")
    if not file_id:
        raise MetricError(f"{where}: empty file_id")
    return ExternalScoreRecord(file_id=file_id, metric=metric, value=value)


def ingest_external_scores(path: str | Path) -> list[ExternalScoreRecord]:
    """Load per-file scorer output from CSV or JSON-lines.

    CSV needs a header with file_id, metric, value columns; JSON-lines
    needs those keys per object. Records keep file order; every row is
    range-checked and errors carry the row number.
    """
    path = Path(path)
    text = path.read_text()
    records: list[ExternalScoreRecord] = []
    if path.suffix.lower() == ".csv":
        reader = csv.DictReader(text.splitlines())
        required = {"file_id", "metric", "value"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise MetricError(f"{path}: CSV header must include file_id, metric, value")
        for rownum, row in enumerate(reader, start=2):  # header is row 1
            records.append(
                _validate_external(
                    (row.get("file_id") or "").strip(),
                    (row.get("metric") or "").strip(),
                    row.get("value"),
                    f"{path}:row {rownum}",
                )
            )
    else:
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise MetricError(f"{path}:{lineno}: invalid JSON ({e})") from e
            records.append(
                _validate_external(
                    str(rec.get("file_id", "")),
                    str(rec.get("metric", "")),
                    rec.get("value"),
                    f"{path}:line {lineno}",
                )
            )
    if not records:
        raise MetricError(f"{path}: no score records found")
    return records
