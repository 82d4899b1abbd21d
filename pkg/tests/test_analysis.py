"""Submission parsing, judger screening, aggregation, and report shaping."""

from __future__ import annotations

import json

import numpy as np
import pytest

from podmetrics.analysis import (
    FilterResult,
    JudgerStats,
    MosCell,
    SubmissionRecord,
    aggregate_mushra,
    build_system_reports,
    combine_mos,
    compute_all_judger_stats,
    compute_judger_stats,
    filter_judgers,
    load_submissions,
    parse_submission,
    radar_payload,
    validate_attention,
)
from podmetrics.errors import SubmissionError

from .conftest import JUDGER_TABLE


def make_page(
    judger: str,
    page_id: str,
    lq_hit: bool,
    hq_hit: bool,
) -> SubmissionRecord:
    """A 4-stimulus slider page engineered to hit or miss each anchor check.

    lq hit: the low anchor strictly below everything; lq miss: tied with a
    middle stimulus (the strictness requirement fails on a tie). hq hit:
    nothing scores above the high anchor; hq miss: two stimuli strictly
    above it.
    """
    ratings = {"s1": 50.0, "s2": 70.0}
    ratings["lq"] = 5.0 if lq_hit else 50.0
    ratings["hq"] = 85.0 if hq_hit else 30.0
    return SubmissionRecord(
        judger_id=judger,
        test_kind="mushra",
        page_id=page_id,
        ratings=ratings,
        anchors={"lq": "lq", "hq": "hq"},
    )


class TestParseSubmission:
    def base(self) -> dict:
        return {
            "schema_version": 1,
            "judger_id": "j1",
            "test_kind": "mushra",
            "page_id": "p1",
            "ratings": {"a": 10, "b": 90},
            "anchors": {"lq": "a", "hq": "b"},
        }

    def test_valid_mushra(self):
        rec = parse_submission(self.base())
        assert rec.ratings == {"a": 10.0, "b": 90.0}
        assert rec.anchors == {"lq": "a", "hq": "b"}

    def test_schema_version_default_and_mismatch(self):
        obj = self.base()
        del obj["schema_version"]
        parse_submission(obj)  # defaults to current
        obj["schema_version"] = 2
        with pytest.raises(SubmissionError, match="schema_version"):
            parse_submission(obj)

    def test_missing_field_named(self):
        obj = self.base()
        del obj["page_id"]
        with pytest.raises(SubmissionError, match=r"\.page_id"):
            parse_submission(obj)

    def test_score_out_of_range_named(self):
        obj = self.base()
        obj["ratings"]["a"] = 101
        with pytest.raises(SubmissionError, match=r"ratings\.a.*outside"):
            parse_submission(obj)

    def test_non_numeric_score(self):
        obj = self.base()
        obj["ratings"]["a"] = "great"
        with pytest.raises(SubmissionError, match="not a number"):
            parse_submission(obj)

    def test_questionnaire_answers(self):
        obj = {
            "judger_id": "j1",
            "test_kind": "questionnaire",
            "page_id": "p1",
            "answers": {"q1": {"choice": 4, "justification": "clear"}},
        }
        rec = parse_submission(obj)
        assert rec.answers["q1"]["choice"] == 4

    def test_answer_without_choice(self):
        obj = {
            "judger_id": "j1",
            "test_kind": "questionnaire",
            "page_id": "p1",
            "answers": {"q1": {"justification": "x"}},
        }
        with pytest.raises(SubmissionError, match=r"answers\.q1"):
            parse_submission(obj)

    def test_unknown_kind(self):
        obj = self.base()
        obj["test_kind"] = "abx"
        with pytest.raises(SubmissionError, match="unknown kind"):
            parse_submission(obj)


class TestLoadSubmissions:
    def rows(self) -> list[dict]:
        return [
            {
                "judger_id": f"j{i}",
                "test_kind": "mushra",
                "page_id": "p1",
                "ratings": {"a": 10, "b": 90},
                "anchors": {"lq": "a", "hq": "b"},
            }
            for i in range(3)
        ]

    def test_normal_log(self, tmp_path):
        p = tmp_path / "log.jsonl"
        p.write_text("".join(json.dumps(r) + "\n" for r in self.rows()))
        assert len(load_submissions(p)) == 3

    def test_truncated_tail_tolerated(self, tmp_path):
        p = tmp_path / "log.jsonl"
        full = "".join(json.dumps(r) + "\n" for r in self.rows())
        p.write_text(full + '{"judger_id": "j9", "test_ki')
        records = load_submissions(p)
        assert len(records) == 3
        assert all(r.judger_id != "j9" for r in records)

    def test_corrupt_middle_line_rejected(self, tmp_path):
        p = tmp_path / "log.jsonl"
        rows = self.rows()
        text = json.dumps(rows[0]) + "\n" + "NOT JSON\n" + json.dumps(rows[1]) + "\n"
        p.write_text(text)
        with pytest.raises(SubmissionError, match=":2"):
            load_submissions(p)

    def test_blank_lines_skipped(self, tmp_path):
        p = tmp_path / "log.jsonl"
        rows = self.rows()
        p.write_text(json.dumps(rows[0]) + "\n\n" + json.dumps(rows[1]) + "\n")
        assert len(load_submissions(p)) == 2


class TestJudgerStats:
    def test_counts_on_known_pattern(self):
        pages = [
            make_page("j", "p1", lq_hit=True, hq_hit=True),
            make_page("j", "p2", lq_hit=True, hq_hit=False),
            make_page("j", "p3", lq_hit=False, hq_hit=True),
            make_page("j", "p4", lq_hit=True, hq_hit=True),
        ]
        stats = compute_judger_stats(pages, "j")
        assert stats.n_pages == 4
        assert stats.lq_last_pct == pytest.approx(75.0)
        assert stats.hq_top2_pct == pytest.approx(75.0)

    def test_lq_tie_fails_page(self):
        page = SubmissionRecord(
            judger_id="j",
            test_kind="mushra",
            page_id="p",
            ratings={"lq": 20.0, "x": 20.0, "hq": 90.0},
            anchors={"lq": "lq", "hq": "hq"},
        )
        stats = compute_judger_stats([page], "j")
        assert stats.lq_last_pct == 0.0

    def test_hq_tie_counts_for_anchor(self):
        # One stimulus ties the high anchor, one sits below: zero strictly
        # above, so the page counts as a top-2 hit.
        page = SubmissionRecord(
            judger_id="j",
            test_kind="mushra",
            page_id="p",
            ratings={"lq": 5.0, "x": 80.0, "hq": 80.0},
            anchors={"lq": "lq", "hq": "hq"},
        )
        stats = compute_judger_stats([page], "j")
        assert stats.hq_top2_pct == 100.0

    def test_hq_exactly_one_above_still_hits(self):
        page = SubmissionRecord(
            judger_id="j",
            test_kind="mushra",
            page_id="p",
            ratings={"lq": 5.0, "x": 90.0, "hq": 80.0},
            anchors={"lq": "lq", "hq": "hq"},
        )
        assert compute_judger_stats([page], "j").hq_top2_pct == 100.0

    def test_hq_two_above_misses(self):
        page = SubmissionRecord(
            judger_id="j",
            test_kind="mushra",
            page_id="p",
            ratings={"lq": 5.0, "x": 90.0, "y": 85.0, "hq": 80.0},
            anchors={"lq": "lq", "hq": "hq"},
        )
        assert compute_judger_stats([page], "j").hq_top2_pct == 0.0

    def test_missing_anchor_labels_rejected(self):
        page = SubmissionRecord(
            judger_id="j", test_kind="mushra", page_id="p", ratings={"a": 1.0}, anchors={}
        )
        with pytest.raises(SubmissionError, match="anchor"):
            compute_judger_stats([page], "j")

    def test_no_pages_rejected(self):
        with pytest.raises(SubmissionError, match="no slider pages"):
            compute_judger_stats([], "ghost")


class TestScreeningFilter:
    def test_reference_screening_outcome(self, judger_stats_table):
        result = filter_judgers(judger_stats_table)
        assert set(result.excluded) == {"7", "18", "20"}
        assert len(result.kept) == 17
        assert set(result.kept) | set(result.excluded) == set(JUDGER_TABLE)

    def test_reasons_name_the_failed_check(self, judger_stats_table):
        result = filter_judgers(judger_stats_table)
        assert "high anchor" in result.reasons["7"]
        assert "low anchor" in result.reasons["18"]
        assert "high anchor" in result.reasons["20"]

    def test_lq_boundary_inclusive(self):
        stats = {"j": JudgerStats("j", lq_last_pct=90.0, hq_top2_pct=60.0, n_pages=10)}
        assert filter_judgers(stats).kept == ["j"]

    def test_hq_boundary_exclusive(self):
        stats = {"j": JudgerStats("j", lq_last_pct=100.0, hq_top2_pct=50.0, n_pages=10)}
        assert filter_judgers(stats).excluded == ["j"]

    def test_custom_thresholds(self):
        stats = {"j": JudgerStats("j", lq_last_pct=80.0, hq_top2_pct=60.0, n_pages=10)}
        assert filter_judgers(stats, lq_threshold=75.0).kept == ["j"]
        with pytest.raises(SubmissionError, match="thresholds"):
            filter_judgers(stats, lq_threshold=0.0)

    def test_pipeline_from_raw_pages_matches_table(self):
        """Raw pages -> stats -> filter reproduces the published screening.

        For each judger, build 17 pages whose engineered hit counts land on
        the tabulated percentages, then check both the recomputed stats and
        the final keep/exclude decision.
        """
        n_pages = 17
        submissions: list[SubmissionRecord] = []
        for jid, (lq_pct, hq_pct) in JUDGER_TABLE.items():
            lq_hits = round(lq_pct / 100.0 * n_pages)
            hq_hits = round(hq_pct / 100.0 * n_pages)
            for i in range(n_pages):
                submissions.append(
                    make_page(jid, f"p{i}", lq_hit=i < lq_hits, hq_hit=i < hq_hits)
                )
        stats = compute_all_judger_stats(submissions)
        assert set(stats) == set(JUDGER_TABLE)
        for jid, (lq_pct, hq_pct) in JUDGER_TABLE.items():
            assert stats[jid].lq_last_pct == pytest.approx(lq_pct, abs=0.005)
            assert stats[jid].hq_top2_pct == pytest.approx(hq_pct, abs=0.005)
        result = filter_judgers(stats)
        assert set(result.excluded) == {"7", "18", "20"}
        assert len(result.kept) == 17


class TestAggregateMushra:
    def make_pool(self) -> list[SubmissionRecord]:
        rows = []
        for j, base in (("j1", 0.0), ("j2", 10.0)):
            for p in range(3):
                rows.append(
                    SubmissionRecord(
                        judger_id=j,
                        test_kind="mushra",
                        page_id=f"p{p}",
                        ratings={"sys-a": 50.0 + base + p, "sys-b": 30.0 + base - p},
                        anchors={"lq": "sys-b", "hq": "sys-a"},
                    )
                )
        return rows

    def test_matches_numpy_oracle(self):
        rows = self.make_pool()
        out = aggregate_mushra(rows)
        scores_a = [r.ratings["sys-a"] for r in rows]
        assert out["sys-a"].n == 6
        assert out["sys-a"].mean == pytest.approx(np.mean(scores_a))
        assert out["sys-a"].median == pytest.approx(np.percentile(scores_a, 50))
        assert out["sys-a"].q1 == pytest.approx(np.percentile(scores_a, 25))
        assert out["sys-a"].q3 == pytest.approx(np.percentile(scores_a, 75))
        assert out["sys-a"].lo == min(scores_a)
        assert out["sys-a"].hi == max(scores_a)

    def test_kept_filter_applied(self):
        rows = self.make_pool()
        out = aggregate_mushra(rows, kept_judgers=["j1"])
        assert out["sys-a"].n == 3
        assert out["sys-a"].mean == pytest.approx(51.0)

    def test_empty_pool_rejected(self):
        with pytest.raises(SubmissionError, match="no slider scores"):
            aggregate_mushra([], kept_judgers=[])


class TestAttention:
    def page(self, **answers) -> SubmissionRecord:
        return SubmissionRecord(
            judger_id="j",
            test_kind="questionnaire",
            page_id="p",
            answers={q: {"choice": c, "justification": ""} for q, c in answers.items()},
        )

    def test_pass(self):
        sub = self.page(q_count=3, q_mood=4)
        assert validate_attention(sub, {"q_count": 3}).passed

    def test_numeric_string_equivalence(self):
        sub = self.page(q_count="3")
        assert validate_attention(sub, {"q_count": 3}).passed

    def test_wrong_answer_fails_with_detail(self):
        sub = self.page(q_count=2)
        res = validate_attention(sub, {"q_count": 3})
        assert not res.passed
        assert "q_count" in res.failures[0]

    def test_missing_answer_is_failure_not_error(self):
        sub = self.page(q_other=1)
        res = validate_attention(sub, {"q_count": 3})
        assert not res.passed
        assert "no answer" in res.failures[0]


class TestCombineMos:
    def test_contract_values(self):
        direct = {"sys": {"q1": 4.0, "q2": 2.4}}
        justification = {"sys": {"q1": 3.0, "q2": 2.0}}
        out = combine_mos(direct, justification)
        assert out["sys"]["q1"].value == pytest.approx(3.5)
        assert out["sys"]["q2"].value == pytest.approx(2.2)
        assert not out["sys"]["q1"].direct_only

    def test_identity_when_both_equal(self):
        out = combine_mos({"s": {"q": 3.7}}, {"s": {"q": 3.7}})
        assert out["s"]["q"].value == pytest.approx(3.7)

    def test_direct_only_cell_flagged(self):
        out = combine_mos({"s": {"q1": 4.0, "q2": 3.0}}, {"s": {"q1": 2.0}})
        assert out["s"]["q2"] == MosCell(value=3.0, direct=3.0, justification=None, direct_only=True)

    def test_no_justification_at_all(self):
        out = combine_mos({"s": {"q": 4.0}})
        assert out["s"]["q"].direct_only

    def test_stray_system_rejected(self):
        with pytest.raises(SubmissionError, match="unknown system"):
            combine_mos({"s": {"q": 4.0}}, {"other": {"q": 3.0}})

    def test_stray_question_rejected(self):
        with pytest.raises(SubmissionError, match="unknown questions"):
            combine_mos({"s": {"q": 4.0}}, {"s": {"q9": 3.0}})

    def test_empty_grid_rejected(self):
        with pytest.raises(SubmissionError, match="empty"):
            combine_mos({})


class TestSystemReports:
    def metrics(self) -> dict:
        return {
            "sys-a": {
                "text": {"distinct_1": 0.50, "mattr": 0.80},
                "speech": {"wer": 0.10},
            },
            "sys-b": {
                "text": {"distinct_1": 0.70, "mattr": 0.80},
                "speech": {"wer": 0.30},
                "audio": {"loudness_score": 0.9},
            },
        }

    def test_min_max_normalization(self):
        reports = build_system_reports(self.metrics())
        a_text = reports["sys-a"]["families"]["text"]["metrics"]
        b_text = reports["sys-b"]["families"]["text"]["metrics"]
        assert a_text["distinct_1"]["normalized"] == 0.0
        assert b_text["distinct_1"]["normalized"] == 1.0
        assert a_text["distinct_1"]["raw"] == 0.50

    def test_equal_values_normalize_to_one(self):
        reports = build_system_reports(self.metrics())
        assert reports["sys-a"]["families"]["text"]["metrics"]["mattr"]["normalized"] == 1.0
        assert reports["sys-b"]["families"]["text"]["metrics"]["mattr"]["normalized"] == 1.0

    def test_missing_family_marked_not_evaluated(self):
        reports = build_system_reports(self.metrics())
        assert reports["sys-a"]["families"]["audio"] == {"evaluated": False}
        assert reports["sys-b"]["families"]["audio"]["evaluated"] is True

    def test_lower_is_better_annotated(self):
        reports = build_system_reports(self.metrics())
        wer = reports["sys-a"]["families"]["speech"]["metrics"]["wer"]
        assert wer["direction"] == "lower"
        assert wer["normalized"] == 0.0  # min-max is direction-agnostic

    def test_single_system_normalizes_to_one(self):
        reports = build_system_reports({"only": {"text": {"mattr": 0.5}}})
        assert reports["only"]["families"]["text"]["metrics"]["mattr"]["normalized"] == 1.0

    def test_empty_rejected(self):
        with pytest.raises(SubmissionError):
            build_system_reports({})

    def test_radar_payload_shape(self):
        payload = radar_payload(build_system_reports(self.metrics()))
        assert "audio/loudness_score" in payload["axes"]
        by_system = {s["system"]: s["values"] for s in payload["series"]}
        assert set(by_system) == {"sys-a", "sys-b"}
        idx = payload["axes"].index("audio/loudness_score")
        assert by_system["sys-a"][idx] is None
        assert by_system["sys-b"][idx] == 1.0
        for series in payload["series"]:
            assert len(series["values"]) == len(payload["axes"])
