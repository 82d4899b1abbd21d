"""Dataset manifest: taxonomy plus per-episode media references.

A manifest is one JSON document with a ``taxonomy`` object (ordered
category names mapped to topic lists) and an ``episodes`` array. Episodes
reference audio by source URL — the toolkit never redistributes media —
and optionally by local path, verified by content hash when a ``sha256``
field is present. The curated reference profile used for human-made
episodes expects exactly 17 categories of 3 topics each (51 total); the
general schema allows any counts.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ManifestError

REFERENCE_CATEGORY_COUNT = 17
REFERENCE_TOPICS_PER_CATEGORY = 3


@dataclass(frozen=True)
class Taxonomy:
    categories: tuple[str, ...]
    topics: dict[str, tuple[str, ...]]

    def __post_init__(self):
        if len(set(self.categories)) != len(self.categories):
            dupes = sorted({c for c in self.categories if self.categories.count(c) > 1})
            raise ManifestError(f"duplicate categories: {', '.join(dupes)}")
        if set(self.topics) != set(self.categories):
            raise ManifestError("topics map must cover exactly the listed categories")
        for cat, tops in self.topics.items():
            if len(set(tops)) != len(tops):
                raise ManifestError(f"category {cat!r} has duplicate topics")
            if not tops:
                raise ManifestError(f"category {cat!r} has no topics")

    @property
    def total_topics(self) -> int:
        return sum(len(t) for t in self.topics.values())

    def check_reference_profile(self) -> None:
        """Enforce the curated-collection shape: 17 categories x 3 topics."""
        if len(self.categories) != REFERENCE_CATEGORY_COUNT:
            raise ManifestError(
                f"reference profile needs {REFERENCE_CATEGORY_COUNT} categories, "
                f"got {len(self.categories)}"
            )
        bad = [c for c in self.categories if len(self.topics[c]) != REFERENCE_TOPICS_PER_CATEGORY]
        if bad:
            raise ManifestError(
                f"reference profile needs {REFERENCE_TOPICS_PER_CATEGORY} topics per "
                f"category; violated by: {', '.join(bad)}"
            )


@dataclass(frozen=True)
class EpisodeRecord:
    id: str
    category: str
    topic: str
    system: str
    source_url: str = ""
    audio_path: str | None = None
    transcript_path: str | None = None
    diarization_path: str | None = None
    embeddings_path: str | None = None
    sha256: str | None = None
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Manifest:
    taxonomy: Taxonomy
    episodes: tuple[EpisodeRecord, ...]
    base_dir: Path

    def resolve(self, relative: str) -> Path:
        p = Path(relative)
        return p if p.is_absolute() else self.base_dir / p


_EPISODE_FIELDS = {
    "id",
    "category",
    "topic",
    "system",
    "source_url",
    "audio_path",
    "transcript_path",
    "diarization_path",
    "embeddings_path",
    "sha256",
}


def _parse_episode(raw: dict, index: int) -> EpisodeRecord:
    where = f"episodes[{index}]"
    if not isinstance(raw, dict):
        raise ManifestError(f"{where}: must be an object")
    for key in ("id", "category", "topic", "system"):
        if not isinstance(raw.get(key), str) or not raw.get(key):
            raise ManifestError(f"{where}: missing or empty field {key!r}")
    extra = {k: v for k, v in raw.items() if k not in _EPISODE_FIELDS}
    return EpisodeRecord(
        id=raw["id"],
        category=raw["category"],
        topic=raw["topic"],
        system=raw["system"],
        source_url=str(raw.get("source_url", "")),
        audio_path=raw.get("audio_path"),
        transcript_path=raw.get("transcript_path"),
        diarization_path=raw.get("diarization_path"),
        embeddings_path=raw.get("embeddings_path"),
        sha256=raw.get("sha256"),
        extra=extra,
    )


def load_manifest(
    path: str | Path,
    check_files: bool = False,
    reference_profile: bool = False,
) -> Manifest:
    """Parse and validate a manifest document.

    ``check_files`` additionally requires every referenced audio_path to
    exist, decode as WAV, and match its sha256 when one is declared.
    ``reference_profile`` enforces the 17x3 taxonomy shape.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ManifestError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise ManifestError(f"{path}: top level must be an object")
    if "taxonomy" not in doc or "episodes" not in doc:
        raise ManifestError(f"{path}: need 'taxonomy' and 'episodes' fields")

    tax_raw = doc["taxonomy"]
    if not isinstance(tax_raw, dict) or not tax_raw:
        raise ManifestError(f"{path}: taxonomy must be a non-empty object of category -> topics")
    for cat, tops in tax_raw.items():
        if not isinstance(tops, list) or not all(isinstance(t, str) for t in tops):
            raise ManifestError(f"{path}: taxonomy.{cat}: topics must be a list of strings")
    taxonomy = Taxonomy(
        categories=tuple(tax_raw.keys()),
        topics={c: tuple(t) for c, t in tax_raw.items()},
    )
    if reference_profile:
        taxonomy.check_reference_profile()

    if not isinstance(doc["episodes"], list):
        raise ManifestError(f"{path}: episodes must be an array")
    episodes = [_parse_episode(raw, i) for i, raw in enumerate(doc["episodes"])]

    seen: set[str] = set()
    violations: list[str] = []
    for ep in episodes:
        if ep.id in seen:
            raise ManifestError(f"{path}: duplicate episode id {ep.id!r}")
        seen.add(ep.id)
        if ep.category not in taxonomy.topics:
            violations.append(f"{ep.id} (unknown category {ep.category!r})")
        elif ep.topic not in taxonomy.topics[ep.category]:
            violations.append(f"{ep.id} (topic {ep.topic!r} not under {ep.category!r})")
    if violations:
        raise ManifestError(f"{path}: taxonomy violations: {'; '.join(violations)}")

    manifest = Manifest(taxonomy=taxonomy, episodes=tuple(episodes), base_dir=path.parent)
    if check_files:
        verify_files(manifest)
    return manifest


def verify_files(manifest: Manifest) -> None:
    """Check that declared audio files exist, decode, and match hashes."""
    from .audio import probe_wav

    problems: list[str] = []
    for ep in manifest.episodes:
        if ep.audio_path is None:
            continue
        p = manifest.resolve(ep.audio_path)
        if not p.is_file():
            problems.append(f"{ep.id}: missing file {p}")
            continue
        try:
            probe_wav(p)
        except Exception as e:
            problems.append(f"{ep.id}: {e}")
            continue
        if ep.sha256:
            digest = hashlib.sha256(p.read_bytes()).hexdigest()
            if digest != ep.sha256.lower():
                problems.append(f"{ep.id}: sha256 mismatch for {p}")
    if problems:
        raise ManifestError("media validation failed: " + "; ".join(problems))


def select_by_category(manifest: Manifest, category: str) -> list[EpisodeRecord]:
    """All episodes in one category, manifest order preserved."""
    if category not in manifest.taxonomy.topics:
        known = ", ".join(manifest.taxonomy.categories)
        raise ManifestError(f"unknown category {category!r} (known: {known})")
    return [ep for ep in manifest.episodes if ep.category == category]


def dump_manifest(manifest: Manifest) -> str:
    """Serialize back to the manifest JSON format (load/dump round-trips)."""
    doc = {
        "taxonomy": {c: list(manifest.taxonomy.topics[c]) for c in manifest.taxonomy.categories},
        "episodes": [],
    }
    for ep in manifest.episodes:
        rec: dict = {
            "id": ep.id,
            "category": ep.category,
            "topic": ep.topic,
            "system": ep.system,
        }
        if ep.source_url:
            rec["source_url"] = ep.source_url
        for key in ("audio_path", "transcript_path", "diarization_path", "embeddings_path", "sha256"):
            val = getattr(ep, key)
            if val is not None:
                rec[key] = val
        rec.update(ep.extra)
        doc["episodes"].append(rec)
    return json.dumps(doc, indent=2)
