"""Manifest parsing, taxonomy validation, selection, and round-trips."""

from __future__ import annotations

import hashlib
import json

import pytest

from podmetrics.audio import encode_wav
from podmetrics.errors import ManifestError
from podmetrics.manifest import (
    Taxonomy,
    dump_manifest,
    load_manifest,
    select_by_category,
)

from .conftest import sine


def make_taxonomy(n_categories: int = 17, topics_per: int = 3) -> dict:
    return {
        f"Category {c:02d}": [f"Topic {c:02d}-{t}" for t in range(topics_per)]
        for c in range(n_categories)
    }


def make_manifest_doc(n_categories: int = 17, topics_per: int = 3, systems=("human-ref",)) -> dict:
    taxonomy = make_taxonomy(n_categories, topics_per)
    episodes = []
    i = 0
    for cat, topics in taxonomy.items():
        for topic in topics:
            for system in systems:
                episodes.append(
                    {
                        "id": f"ep-{i:03d}",
                        "category": cat,
                        "topic": topic,
                        "system": system,
                        "source_url": f"https://example.net/audio/{i}",
                    }
                )
                i += 1
    return {"taxonomy": taxonomy, "episodes": episodes}


def write_doc(tmp_path, doc) -> str:
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(doc))
    return str(path)


class TestLoadManifest:
    def test_minimal_two_records(self, tmp_path):
        doc = {
            "taxonomy": {"News": ["Elections", "Science"]},
            "episodes": [
                {"id": "a", "category": "News", "topic": "Elections", "system": "human-ref"},
                {"id": "b", "category": "News", "topic": "Science", "system": "gen-a"},
            ],
        }
        m = load_manifest(write_doc(tmp_path, doc))
        assert len(m.episodes) == 2
        assert m.taxonomy.total_topics == 2

    def test_reference_profile_shape(self, tmp_path):
        path = write_doc(tmp_path, make_manifest_doc())
        m = load_manifest(path, reference_profile=True)
        assert len(m.taxonomy.categories) == 17
        assert m.taxonomy.total_topics == 51
        assert len(m.episodes) == 51

    def test_reference_profile_rejects_wrong_shape(self, tmp_path):
        path = write_doc(tmp_path, make_manifest_doc(n_categories=16))
        with pytest.raises(ManifestError, match="17 categories"):
            load_manifest(path, reference_profile=True)
        path2 = write_doc(tmp_path, make_manifest_doc(topics_per=4))
        with pytest.raises(ManifestError, match="3 topics"):
            load_manifest(path2, reference_profile=True)

    def test_unknown_category_names_record(self, tmp_path):
        doc = make_manifest_doc(n_categories=2)
        doc["episodes"][0]["category"] = "Cooking"
        with pytest.raises(ManifestError, match="ep-000.*Cooking"):
            load_manifest(write_doc(tmp_path, doc))

    def test_topic_under_wrong_category_names_record(self, tmp_path):
        doc = make_manifest_doc(n_categories=2)
        doc["episodes"][0]["topic"] = "Topic 01-0"
        with pytest.raises(ManifestError, match="ep-000"):
            load_manifest(write_doc(tmp_path, doc))

    def test_duplicate_id_rejected(self, tmp_path):
        doc = make_manifest_doc(n_categories=1)
        doc["episodes"][1]["id"] = doc["episodes"][0]["id"]
        with pytest.raises(ManifestError, match="duplicate episode id"):
            load_manifest(write_doc(tmp_path, doc))

    def test_parse_error_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"taxonomy": {},\n  broken\n}')
        with pytest.raises(ManifestError, match="line 2"):
            load_manifest(path)

    def test_missing_field_names_index(self, tmp_path):
        doc = make_manifest_doc(n_categories=1)
        del doc["episodes"][1]["system"]
        with pytest.raises(ManifestError, match=r"episodes\[1\].*system"):
            load_manifest(write_doc(tmp_path, doc))

    def test_round_trip_identity(self, tmp_path):
        path = write_doc(tmp_path, make_manifest_doc(n_categories=3, systems=("a", "b")))
        m1 = load_manifest(path)
        path2 = tmp_path / "again.json"
        path2.write_text(dump_manifest(m1))
        m2 = load_manifest(path2)
        assert m1.taxonomy == m2.taxonomy
        assert m1.episodes == m2.episodes


class TestFileChecks:
    def test_existing_audio_accepted(self, tmp_path):
        wav = tmp_path / "ep.wav"
        encode_wav(sine(440.0, 0.1), wav)
        doc = make_manifest_doc(n_categories=1)
        doc["episodes"][0]["audio_path"] = "ep.wav"
        m = load_manifest(write_doc(tmp_path, doc), check_files=True)
        assert m.episodes[0].audio_path == "ep.wav"

    def test_missing_audio_rejected(self, tmp_path):
        doc = make_manifest_doc(n_categories=1)
        doc["episodes"][0]["audio_path"] = "nope.wav"
        with pytest.raises(ManifestError, match="missing file"):
            load_manifest(write_doc(tmp_path, doc), check_files=True)

    def test_sha256_mismatch_rejected(self, tmp_path):
        wav = tmp_path / "ep.wav"
        encode_wav(sine(440.0, 0.1), wav)
        doc = make_manifest_doc(n_categories=1)
        doc["episodes"][0]["audio_path"] = "ep.wav"
        doc["episodes"][0]["sha256"] = "0" * 64
        with pytest.raises(ManifestError, match="sha256 mismatch"):
            load_manifest(write_doc(tmp_path, doc), check_files=True)

    def test_sha256_match_accepted(self, tmp_path):
        wav = tmp_path / "ep.wav"
        encode_wav(sine(440.0, 0.1), wav)
        doc = make_manifest_doc(n_categories=1)
        doc["episodes"][0]["audio_path"] = "ep.wav"
        doc["episodes"][0]["sha256"] = hashlib.sha256(wav.read_bytes()).hexdigest()
        load_manifest(write_doc(tmp_path, doc), check_files=True)


class TestSelectByCategory:
    def test_three_per_category_on_reference_fixture(self, tmp_path):
        m = load_manifest(write_doc(tmp_path, make_manifest_doc()))
        first = m.taxonomy.categories[0]
        assert len(select_by_category(m, first)) == 3

    def test_unknown_category_rejected(self, tmp_path):
        m = load_manifest(write_doc(tmp_path, make_manifest_doc(n_categories=2)))
        with pytest.raises(ManifestError, match="unknown category"):
            select_by_category(m, "Cooking")

    def test_mixed_system_filtering_keeps_all_systems(self, tmp_path):
        m = load_manifest(
            write_doc(tmp_path, make_manifest_doc(n_categories=2, systems=("human-ref", "gen-a")))
        )
        cat = m.taxonomy.categories[0]
        records = select_by_category(m, cat)
        assert {r.system for r in records} == {"human-ref", "gen-a"}
        assert all(r.category == cat for r in records)

    def test_partition_property(self, tmp_path):
        m = load_manifest(write_doc(tmp_path, make_manifest_doc(n_categories=4)))
        seen: list[str] = []
        for cat in m.taxonomy.categories:
            seen.extend(r.id for r in select_by_category(m, cat))
        assert sorted(seen) == sorted(r.id for r in m.episodes)
        assert len(seen) == len(set(seen))


class TestTaxonomy:
    def test_duplicate_categories_rejected(self):
        with pytest.raises(ManifestError, match="duplicate categories"):
            Taxonomy(categories=("A", "A"), topics={"A": ("t",)})

    def test_duplicate_topics_rejected(self):
        with pytest.raises(ManifestError, match="duplicate topics"):
            Taxonomy(categories=("A",), topics={"A": ("t", "t")})

    def test_topics_cover_categories(self):
        with pytest.raises(ManifestError, match="cover exactly"):
            Taxonomy(categories=("A",), topics={"B": ("t",)})
