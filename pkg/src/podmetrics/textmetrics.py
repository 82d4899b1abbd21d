"""Quantitative conversation-script metrics.

Four measures over a multi-turn script: n-gram uniqueness (lexical
variety), moving-average type-token ratio (vocabulary richness), unigram
entropy in bits (information density), and mean pairwise cosine distance
of externally supplied turn embeddings (semantic spread). Scripts are
tokenized with the same normalizer as the transcript metrics, so the two
views of a script always agree on its token stream.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MetricError
from .speech import normalize_tokens

DEFAULT_MATTR_WINDOW = 50

_TURN_LINE = re.compile(r"^\s*([^:]+?)\s*:\s*(.*)$")


@dataclass(frozen=True)
class TranscriptTurn:
    speaker_id: str
    text: str


@dataclass(frozen=True)
class Script:
    """A conversation: ordered turns plus the derived token stream."""

    turns: tuple[TranscriptTurn, ...]

    def __post_init__(self):
        if not self.turns or all(not t.text.strip() for t in self.turns):
            raise MetricError("script needs at least one non-empty turn")
        object.__setattr__(self, "turns", tuple(self.turns))

    @property
    def tokens(self) -> list[str]:
        """Normalized tokens of all turns, concatenated in order."""
        out: list[str] = []
        for t in self.turns:
            out.extend(normalize_tokens(t.text))
        return out

    @property
    def speakers(self) -> list[str]:
        seen: dict[str, None] = {}
        for t in self.turns:
            seen.setdefault(t.speaker_id)
        return list(seen)


def load_script(path: str | Path) -> Script:
    """Read a script from JSON-lines turns or tagged plain text.

    JSON-lines: one {"speaker_id": ..., "text": ...} object per line.
    Plain text: one "SPEAKER: text" turn per line; blank lines are
    skipped; a line without a colon continues the previous turn.
    """
    path = Path(path)
    text = path.read_text()
    turns: list[TranscriptTurn] = []
    if path.suffix.lower() in (".jsonl", ".ndjson", ".json"):
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise MetricError(f"{path}:{lineno}: invalid JSON ({e})") from e
            if not isinstance(rec, dict) or "speaker_id" not in rec or "text" not in rec:
                raise MetricError(f"{path}:{lineno}: need speaker_id and text fields")
            turns.append(TranscriptTurn(str(rec["speaker_id"]), str(rec["text"])))
    else:
        for line in text.splitlines():
            if not line.strip():
                continue
            m = _TURN_LINE.match(line)
            if m:
                turns.append(TranscriptTurn(m.group(1), m.group(2)))
            elif turns:
                turns[-1] = TranscriptTurn(turns[-1].speaker_id, turns[-1].text + " " + line.strip())
            else:
                raise MetricError(f"{path}: first line has no 'SPEAKER:' tag")
    if not turns:
        raise MetricError(f"{path}: no turns found")
    return Script(tuple(turns))


def distinct_n(script: Script, n: int) -> float:
    """Unique n-grams / total n-grams over the concatenated token stream."""
    if n < 1:
        raise MetricError("n must be >= 1")
    tokens = script.tokens
    total = len(tokens) - n + 1
    if total < 1:
        raise MetricError(f"need at least {n} tokens for {n}-grams, got {len(tokens)}")
    grams = {tuple(tokens[i : i + n]) for i in range(total)}
    return len(grams) / total


def mattr(script: Script, window: int = DEFAULT_MATTR_WINDOW) -> float:
    """Mean type-token ratio over every stride-1 window of ``window`` tokens."""
    if window < 1:
        raise MetricError("window must be >= 1")
    tokens = script.tokens
    if len(tokens) < window:
        raise MetricError(f"need at least {window} tokens, got {len(tokens)}")
    counts: Counter[str] = Counter(tokens[:window])
    n_types = len(counts)
    total = n_types
    for i in range(window, len(tokens)):
        out_tok, in_tok = tokens[i - window], tokens[i]
        if out_tok != in_tok:
            counts[out_tok] -= 1
            if counts[out_tok] == 0:
                del counts[out_tok]
                n_types -= 1
            if counts[in_tok] == 0:
                n_types += 1
            counts[in_tok] += 1
        total += n_types
    n_windows = len(tokens) - window + 1
    return total / (n_windows * window)


def info_dens(script: Script) -> float:
    """Shannon entropy (bits) of the unigram token distribution."""
    tokens = script.tokens
    if not tokens:
        raise MetricError("empty token stream")
    counts = np.array(list(Counter(tokens).values()), dtype=np.float64)
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


def sem_div(embeddings: list) -> float:
    """Mean pairwise cosine distance (1 - similarity) over turn embeddings."""
    if len(embeddings) < 2:
        raise MetricError(f"semantic spread needs >= 2 turn embeddings, got {len(embeddings)}")
    mat = np.asarray(embeddings, dtype=np.float64)
    if mat.ndim != 2:
        raise MetricError("turn embeddings must share one dimension")
    if not np.all(np.isfinite(mat)):
        raise MetricError("turn embeddings must be finite")
    norms = np.linalg.norm(mat, axis=1)
    if np.any(norms == 0.0):
        raise MetricError("zero-norm turn embedding")
    unit = mat / norms[:, np.newaxis]
    sims = unit @ unit.T
    n = mat.shape[0]
    iu = np.triu_indices(n, k=1)
    return float(np.mean(1.0 - sims[iu]))


@dataclass(frozen=True)
class ScriptMetrics:
    distinct_1: float
    distinct_2: float
    mattr: float
    info_dens: float
    sem_div: float | None
    n_turns: int
    n_tokens: int


def measure_script(
    script: Script,
    turn_embeddings: list | None = None,
    mattr_window: int = DEFAULT_MATTR_WINDOW,
) -> ScriptMetrics:
    """All four metrics for one script; semantic spread only with embeddings."""
    sd: float | None = None
    if turn_embeddings is not None:
        if len(turn_embeddings) != len(script.turns):
            raise MetricError(
                f"{len(turn_embeddings)} embeddings for {len(script.turns)} turns"
            )
        sd = sem_div(turn_embeddings)
    return ScriptMetrics(
        distinct_1=distinct_n(script, 1),
        distinct_2=distinct_n(script, 2),
        mattr=mattr(script, mattr_window),
        info_dens=info_dens(script),
        sem_div=sd,
        n_turns=len(script.turns),
        n_tokens=len(script.tokens),
    )
