"""Command-line entry point.

One subcommand per pipeline stage. Results are JSON on stdout (or --out);
warnings go to stderr. Numeric output is serialized to 6 significant
digits for reproducible diffs; infinities become null with an explanatory
flag beside them. Exit codes: 0 success, 1 tool/metric error, 2 usage
error. Batch subcommands fan out across inputs up to --jobs workers.

Report-style subcommands (loudness, aggregate, report) can also write a
delimited CSV plus rendered PNG figures via --report-dir.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import analysis, audio, judge, loudness, manifest, mix, segments, speech, textmetrics
from .errors import PodmetricsError

SIG_DIGITS = 6


def _round_float(x: float):
    if math.isinf(x) or math.isnan(x):
        return None
    return float(f"{x:.{SIG_DIGITS}g}")


def _jsonify(obj):
    """6-significant-digit floats; non-finite values become null."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return _round_float(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    return str(obj)


def _emit(doc, out: str | None) -> None:
    text = json.dumps(_jsonify(doc), indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _parallel(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else v for v in row])


# ---------------------------------------------------------------- manifest


def cmd_manifest(args) -> dict:
    m = manifest.load_manifest(
        args.path, check_files=args.check_files, reference_profile=args.reference_profile
    )
    if args.category:
        records = manifest.select_by_category(m, args.category)
        return {
            "category": args.category,
            "episodes": [
                {"id": e.id, "topic": e.topic, "system": e.system} for e in records
            ],
        }
    systems: dict[str, int] = {}
    for ep in m.episodes:
        systems[ep.system] = systems.get(ep.system, 0) + 1
    return {
        "path": str(args.path),
        "categories": len(m.taxonomy.categories),
        "total_topics": m.taxonomy.total_topics,
        "episodes": len(m.episodes),
        "systems": systems,
    }


# ---------------------------------------------------------------- loudness


def _loudness_row(path: str) -> dict:
    buf = audio.decode_wav(path)
    rep = loudness.measure(buf)
    doc = {
        "file": path,
        "integrated_lufs": rep.integrated_lufs,
        "true_peak_dbtp": rep.true_peak_dbtp,
        "lra_lu": rep.lra_lu,
        "il_score": rep.il_score,
        "tp_score": rep.tp_score,
        "lra_score": rep.lra_score,
    }
    if math.isinf(rep.integrated_lufs):
        doc["silent"] = True
    return doc


def _loudness_report(rows: list[dict], report_dir: str) -> dict:
    from . import plots

    outdir = Path(report_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    header = ["file", "integrated_lufs", "true_peak_dbtp", "lra_lu", "il_score", "tp_score", "lra_score"]
    _write_csv(
        outdir / "loudness.csv",
        header,
        [[_jsonify(r.get(k)) for k in header] for r in rows],
    )
    figures = {
        "integrated_hist.png": ("integrated_lufs", "Integrated loudness", "LUFS", loudness.IL_TARGET),
        "true_peak_hist.png": ("true_peak_dbtp", "True peak", "dBTP", None),
        "lra_hist.png": ("lra_lu", "Loudness range", "LU", loudness.LRA_TARGET),
    }
    written = [str(outdir / "loudness.csv")]
    for fname, (key, title, xlabel, target) in figures.items():
        values = [r[key] for r in rows if r.get(key) is not None and math.isfinite(r[key])]
        if not values:  # e.g. every input silent; CSV still records that
            continue
        plots.save_loudness_histogram(
            values, outdir / fname, title=title, xlabel=xlabel, target=target
        )
        written.append(str(outdir / fname))
    return {"report_dir": str(outdir), "written": written}


def cmd_loudness(args) -> dict:
    rows = _parallel(_loudness_row, args.files, args.jobs)
    doc: dict = {"files": rows}
    if args.report_dir:
        doc["report"] = _loudness_report(rows, args.report_dir)
    return doc


def cmd_truepeak(args) -> dict:
    def row(path: str) -> dict:
        tp = loudness.true_peak_dbtp(audio.decode_wav(path))
        d = {"file": path, "true_peak_dbtp": tp, "tp_score": loudness.score_true_peak(tp)}
        if math.isinf(tp):
            d["silent"] = True
        return d

    return {"files": _parallel(row, args.files, args.jobs)}


def cmd_lra(args) -> dict:
    def row(path: str) -> dict:
        lra = loudness.loudness_range(audio.decode_wav(path))
        return {"file": path, "lra_lu": lra, "lra_score": loudness.score_lra(lra)}

    return {"files": _parallel(row, args.files, args.jobs)}


def cmd_score_loudness(args) -> dict:
    if args.il is None and args.tp is None and args.lra is None:
        raise PodmetricsError("provide at least one of --il, --tp, --lra")
    doc: dict = {}
    if args.il is not None:
        doc["il_score"] = loudness.score_integrated(args.il)
    if args.tp is not None:
        doc["tp_score"] = loudness.score_true_peak(args.tp)
    if args.lra is not None:
        doc["lra_score"] = loudness.score_lra(args.lra)
    return doc


# ---------------------------------------------------------------- speech


def _read_transcript_text(path: str) -> str:
    p = Path(path)
    if p.suffix.lower() in (".jsonl", ".ndjson", ".json"):
        script = textmetrics.load_script(p)
        return " ".join(t.text for t in script.turns)
    return p.read_text()


def cmd_wer(args) -> dict:
    res = speech.wer(_read_transcript_text(args.reference), _read_transcript_text(args.hypothesis))
    doc = {
        "wer": res.wer,
        "distance": res.distance,
        "ref_len": res.ref_len,
        "hyp_len": res.hyp_len,
    }
    if res.has_breakdown:
        doc.update(
            substitutions=res.substitutions,
            deletions=res.deletions,
            insertions=res.insertions,
        )
    return doc


def cmd_sim(args) -> dict:
    gen = speech.load_embeddings(args.generated)
    ref = speech.load_embeddings(args.reference)
    res = speech.speaker_similarity(gen, ref)
    return {"per_speaker": res.per_speaker, "mean": res.mean}


def cmd_sptd(args) -> dict:
    emb = speech.load_embeddings(args.embeddings)
    value = speech.sptd(emb)
    return {"sptd": value, "n_speakers": len(speech.pool_by_speaker(emb))}


# ---------------------------------------------------------------- mix


def cmd_smr(args) -> dict:
    pairs: list[tuple[str, str]] = []
    if args.pairs:
        with open(args.pairs, newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None or not {"speech_path", "mse_path"}.issubset(
                reader.fieldnames
            ):
                raise PodmetricsError(
                    f"{args.pairs}: CSV header must include speech_path, mse_path"
                )
            for row in reader:
                pairs.append((row["speech_path"], row["mse_path"]))
    elif args.speech and args.mse:
        pairs.append((args.speech, args.mse))
    else:
        raise PodmetricsError("provide --speech and --mse, or --pairs CSV")

    def row(pair: tuple[str, str]) -> tuple[dict, mix.SmrResult]:
        sp, ms = pair
        res = mix.smr(audio.decode_wav(sp), audio.decode_wav(ms))
        doc = {
            "speech": sp,
            "mse": ms,
            "smr_lu": res.smr_lu,
            "speech_lufs": res.speech_lufs,
            "mse_lufs": res.mse_lufs,
            "no_mse": res.no_mse,
        }
        return doc, res

    out = _parallel(row, pairs, args.jobs)
    doc: dict = {"pairs": [d for d, _ in out]}
    results = [r for _, r in out]
    if not all(r.no_mse for r in results):
        score = mix.smr_score(results)
        doc["smr_score"] = {
            "score": score.score,
            "n_valid": score.n_valid,
            "n_positive": score.n_positive,
            "n_no_mse": score.n_no_mse,
        }
    return doc


# ---------------------------------------------------------------- text


def cmd_text_metrics(args) -> dict:
    if not args.scripts and not args.manifest:
        raise PodmetricsError("provide script files or --manifest")
    docs = []
    for path in args.scripts:
        script = textmetrics.load_script(path)
        emb = None
        if args.embeddings:
            if len(args.scripts) != 1:
                raise PodmetricsError("--embeddings applies to exactly one script")
            emb = [e.vector for e in speech.load_embeddings(args.embeddings)]
        m = textmetrics.measure_script(script, emb, mattr_window=args.mattr_window)
        docs.append(
            {
                "file": path,
                "distinct_1": m.distinct_1,
                "distinct_2": m.distinct_2,
                "mattr": m.mattr,
                "info_dens": m.info_dens,
                "sem_div": m.sem_div,
                "n_turns": m.n_turns,
                "n_tokens": m.n_tokens,
            }
        )
    doc: dict = {"scripts": docs}
    if args.manifest:
        doc["by_category"] = _text_by_category(args.manifest, args.mattr_window, args.report_dir)
    return doc


def _text_by_category(manifest_path: str, window: int, report_dir: str | None) -> dict:
    m = manifest.load_manifest(manifest_path)
    sums: dict[str, dict[str, list[float]]] = {}
    for ep in m.episodes:
        if not ep.transcript_path:
            continue
        script = textmetrics.load_script(m.resolve(ep.transcript_path))
        met = textmetrics.measure_script(script, mattr_window=window)
        bucket = sums.setdefault(ep.category, {"distinct_1": [], "distinct_2": [], "mattr": [], "info_dens": []})
        bucket["distinct_1"].append(met.distinct_1)
        bucket["distinct_2"].append(met.distinct_2)
        bucket["mattr"].append(met.mattr)
        bucket["info_dens"].append(met.info_dens)
    table = {
        cat: {k: sum(v) / len(v) for k, v in buckets.items() if v}
        for cat, buckets in sums.items()
    }
    if report_dir:
        outdir = Path(report_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        rows = [
            [cat, *(_round_float(table[cat][k]) for k in ("distinct_1", "distinct_2", "mattr", "info_dens"))]
            for cat in sorted(table)
        ]
        _write_csv(
            outdir / "text_by_category.csv",
            ["category", "distinct_1", "distinct_2", "mattr", "info_dens"],
            rows,
        )
    return table


# ---------------------------------------------------------------- judge


def _judge_config(args) -> judge.JudgeConfig:
    return judge.JudgeConfig(
        endpoint_url=args.endpoint,
        model=args.model,
        api_key_env=args.api_key_env,
        temperature=args.temperature,
        max_retries=args.retries,
        timeout_s=args.timeout,
        retry_backoff_s=args.retry_backoff,
    )


def cmd_judge(args) -> dict:
    config = _judge_config(args)
    if args.comments:
        if not args.question:
            raise PodmetricsError("--comments mode needs --question")
        comments = json.loads(Path(args.comments).read_text())
        if not isinstance(comments, dict):
            raise PodmetricsError(f"{args.comments}: must map system -> list of comments")
        scores = judge.score_justifications(comments, args.question, config)
        return {
            "question": args.question,
            "prompt_version": judge.JUSTIFICATION_PROMPT_VERSION,
            "systems": {
                sys_name: {"summary": s.summary, "score": s.score}
                for sys_name, s in scores.items()
            },
        }
    if not (args.script_a and args.script_b):
        raise PodmetricsError("provide --a and --b scripts, or --comments")
    a = _read_transcript_text(args.script_a)
    b = _read_transcript_text(args.script_b)
    verdict = judge.judge_pair(a, b, config)
    return {
        "prompt_version": verdict.prompt_version,
        "scores": verdict.scores,
        "order_ab": verdict.order_ab,
        "order_ba": verdict.order_ba,
        "evidence_ab": verdict.evidence_ab,
        "evidence_ba": verdict.evidence_ba,
    }


# ---------------------------------------------------------------- segments


def cmd_segments(args) -> dict:
    diar = segments.load_diarization(args.diarization)
    duration = args.duration
    if duration is None:
        if args.audio:
            info = audio.probe_wav(args.audio)
            duration = info["frames"] / info["sample_rate"]
        else:
            duration = max(s.end_s for s in diar)
    specs = segments.extract_dialogue_segments(
        diar,
        duration_s=duration,
        episode_id=args.episode_id,
        min_len=args.min_len,
        max_len=args.max_len,
        count=args.count,
    )
    doc = {"plan": json.loads(segments.dump_plan(specs))}
    if args.render_dir:
        if not args.audio:
            raise PodmetricsError("--render-dir needs --audio")
        outdir = Path(args.render_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        buf = audio.decode_wav(args.audio)
        written = []
        for i, spec in enumerate(specs):
            out = outdir / f"{args.episode_id or 'segment'}_{i:02d}.wav"
            audio.encode_wav(audio.slice_seconds(buf, spec.start_s, spec.end_s), out)
            written.append(str(out))
        doc["written"] = written
    return doc


def cmd_fml(args) -> dict:
    buf = audio.decode_wav(args.audio)
    beep = audio.synth_beep(
        duration_s=args.beep_duration,
        freq_hz=args.beep_freq,
        level_dbfs=args.beep_level,
        rate=buf.sample_rate,
        channels=buf.channels,
    )
    windows = segments.plan_fml_windows(buf.duration_s)
    result = segments.extract_fml_minutes(buf, beep)
    audio.encode_wav(result, args.output)
    return {
        "input": args.audio,
        "output": args.output,
        "input_duration_s": buf.duration_s,
        "windows": [{"start_s": a, "end_s": b} for a, b in windows],
        "output_duration_s": result.duration_s,
    }


# ---------------------------------------------------------------- analysis


def _load_stats_or_submissions(path: str) -> dict[str, analysis.JudgerStats]:
    """Accept either raw submissions or precomputed per-judger stats."""
    p = Path(path)
    first = ""
    for line in p.read_text().splitlines():
        if line.strip():
            first = line
            break
    if not first:
        raise PodmetricsError(f"{path}: empty file")
    probe = json.loads(first)
    if "lq_last_pct" in probe:
        stats: dict[str, analysis.JudgerStats] = {}
        for lineno, line in enumerate(p.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            jid = str(rec.get("judger_id", ""))
            if not jid:
                raise PodmetricsError(f"{path}:{lineno}: missing judger_id")
            stats[jid] = analysis.JudgerStats(
                judger_id=jid,
                lq_last_pct=float(rec["lq_last_pct"]),
                hq_top2_pct=float(rec["hq_top2_pct"]),
                n_pages=int(rec.get("n_pages", 0)),
            )
        return stats
    subs = analysis.load_submissions(p)
    return analysis.compute_all_judger_stats(subs)


def cmd_filter_judgers(args) -> dict:
    stats = _load_stats_or_submissions(args.path)
    result = analysis.filter_judgers(
        stats, lq_threshold=args.lq_threshold, hq_threshold=args.hq_threshold
    )
    return {
        "kept": sorted(result.kept),
        "excluded": sorted(result.excluded),
        "n_kept": len(result.kept),
        "n_excluded": len(result.excluded),
        "reasons": result.reasons,
        "stats": {
            jid: {"lq_last_pct": s.lq_last_pct, "hq_top2_pct": s.hq_top2_pct, "n_pages": s.n_pages}
            for jid, s in sorted(stats.items())
        },
    }


def cmd_aggregate(args) -> dict:
    subs = analysis.load_submissions(args.submissions)
    mushra = [s for s in subs if s.test_kind == "mushra"]
    kept: list[str] | None = None
    filter_doc = None
    if mushra and not args.no_filter:
        stats = analysis.compute_all_judger_stats(subs)
        result = analysis.filter_judgers(
            stats, lq_threshold=args.lq_threshold, hq_threshold=args.hq_threshold
        )
        kept = result.kept
        filter_doc = {"kept": sorted(result.kept), "excluded": sorted(result.excluded)}
    doc: dict = {"n_submissions": len(subs)}
    if filter_doc:
        doc["filter"] = filter_doc
    if mushra:
        dists = analysis.aggregate_mushra(subs, kept_judgers=kept)
        doc["systems"] = {
            name: {
                "mean": d.mean,
                "median": d.median,
                "q1": d.q1,
                "q3": d.q3,
                "min": d.lo,
                "max": d.hi,
                "n": d.n,
            }
            for name, d in dists.items()
        }
        if args.report_dir:
            from . import plots

            outdir = Path(args.report_dir)
            outdir.mkdir(parents=True, exist_ok=True)
            pool: dict[str, list[float]] = {}
            for s in mushra:
                if kept is not None and s.judger_id not in kept:
                    continue
                for system, score in s.ratings.items():
                    pool.setdefault(system, []).append(score)
            plots.save_box_plot(pool, outdir / "box_plot.png")
            _write_csv(
                outdir / "systems.csv",
                ["system", "mean", "median", "q1", "q3", "min", "max", "n"],
                [
                    [
                        name,
                        *(
                            _round_float(getattr(d, k))
                            for k in ("mean", "median", "q1", "q3", "lo", "hi")
                        ),
                        d.n,
                    ]
                    for name, d in sorted(dists.items())
                ],
            )
            doc["report"] = {
                "report_dir": str(outdir),
                "written": [str(outdir / "box_plot.png"), str(outdir / "systems.csv")],
            }
    return doc


def cmd_report(args) -> dict:
    metrics = json.loads(Path(args.metrics).read_text())
    if not isinstance(metrics, dict):
        raise PodmetricsError(f"{args.metrics}: must map system -> family -> metric -> value")
    reports = analysis.build_system_reports(metrics)
    payload = analysis.radar_payload(reports)
    doc: dict = {"systems": reports, "radar": payload}
    if args.report_dir:
        from . import plots

        outdir = Path(args.report_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        plots.save_radar(_jsonify(payload), outdir / "radar.png")
        rows = []
        for s in payload["series"]:
            for label, value in zip(payload["axes"], s["values"]):
                rows.append([s["system"], label, None if value is None else _round_float(value)])
        _write_csv(outdir / "normalized.csv", ["system", "metric", "normalized"], rows)
        doc["report"] = {
            "report_dir": str(outdir),
            "written": [str(outdir / "radar.png"), str(outdir / "normalized.csv")],
        }
    return doc


# ---------------------------------------------------------------- serve


def cmd_serve(args) -> dict | None:
    from . import service

    config = service.load_test_config(args.config)
    app = service.create_app(
        config,
        data_dir=args.data_dir,
        submissions_path=args.submissions,
        ui_dir=args.ui_dir,
    )
    if args.check:
        import warnings

        with warnings.catch_warnings():
            # The in-process client import warns about its own future; that
            # noise is not actionable from here.
            warnings.simplefilter("ignore")
            from fastapi.testclient import TestClient

            with TestClient(app) as client:
                resp = client.get(f"/api/tests/{config.test_id}", params={"pid": "smoke"})
                resp.raise_for_status()
                payload = resp.json()
        return {
            "ok": True,
            "test_id": config.test_id,
            "kind": config.kind,
            "pages": len(payload["pages"]),
        }
    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return None


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="podmetrics",
        description="Objective metrics and listening-test tooling for long-form audio.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, func) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", help="write JSON result to this file instead of stdout")
        p.set_defaults(func=func)
        return p

    p = add("manifest", "validate a dataset manifest", cmd_manifest)
    p.add_argument("path", help="manifest JSON file")
    p.add_argument("--check-files", action="store_true", help="verify referenced audio files")
    p.add_argument(
        "--reference-profile",
        action="store_true",
        help="enforce the curated 17x3 taxonomy shape",
    )
    p.add_argument("--category", help="list episodes of one category")

    p = add("loudness", "integrated loudness, true peak, range, and scores", cmd_loudness)
    p.add_argument("files", nargs="+", help="WAV files")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--report-dir", help="write loudness.csv plus histogram PNGs here")

    p = add("truepeak", "inter-sample peak level", cmd_truepeak)
    p.add_argument("files", nargs="+")
    p.add_argument("--jobs", type=int, default=1)

    p = add("lra", "loudness range", cmd_lra)
    p.add_argument("files", nargs="+")
    p.add_argument("--jobs", type=int, default=1)

    p = add("score-loudness", "score raw loudness measurements", cmd_score_loudness)
    p.add_argument("--il", type=float, help="integrated loudness, LUFS")
    p.add_argument("--tp", type=float, help="true peak, dBTP")
    p.add_argument("--lra", type=float, help="loudness range, LU")

    p = add("wer", "word error rate between two transcripts", cmd_wer)
    p.add_argument("reference", help="reference transcript (text or JSON-lines)")
    p.add_argument("hypothesis", help="hypothesis transcript")

    p = add("sim", "speaker similarity against reference voices", cmd_sim)
    p.add_argument("--generated", required=True, help="generated-speech embeddings JSONL")
    p.add_argument("--reference", required=True, help="reference-voice embeddings JSONL")

    p = add("sptd", "pairwise speaker timbre difference", cmd_sptd)
    p.add_argument("--embeddings", required=True, help="speaker embeddings JSONL")

    p = add("smr", "speech-to-background loudness ratio", cmd_smr)
    p.add_argument("--speech", help="speech stem WAV")
    p.add_argument("--mse", help="music/effects stem WAV")
    p.add_argument("--pairs", help="CSV of speech_path,mse_path rows")
    p.add_argument("--jobs", type=int, default=1)

    p = add("text-metrics", "lexical and semantic script metrics", cmd_text_metrics)
    p.add_argument("scripts", nargs="*", help="script files (JSON-lines or 'SPEAKER: text')")
    p.add_argument("--embeddings", help="turn embeddings JSONL (single script only)")
    p.add_argument("--mattr-window", type=int, default=textmetrics.DEFAULT_MATTR_WINDOW)
    p.add_argument("--manifest", help="aggregate transcripts per category from this manifest")
    p.add_argument("--report-dir", help="write text_by_category.csv here (with --manifest)")

    p = add("judge", "LLM comparison of two scripts, or comment scoring", cmd_judge)
    p.add_argument("--a", dest="script_a", help="first script file")
    p.add_argument("--b", dest="script_b", help="second script file")
    p.add_argument("--comments", help="JSON file of system -> list of comments")
    p.add_argument("--question", help="question text for --comments mode")
    p.add_argument("--endpoint", required=True, help="chat-completion endpoint URL")
    p.add_argument("--model", required=True, help="model name")
    p.add_argument("--api-key-env", default="JUDGE_API_KEY", help="env var holding the API key")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--retry-backoff", type=float, default=1.0)

    p = add("segments", "plan (and render) turn-taking dialogue windows", cmd_segments)
    p.add_argument("--diarization", required=True, help="RTTM or JSON-lines diarization")
    p.add_argument("--duration", type=float, help="episode duration in seconds")
    p.add_argument("--audio", help="episode WAV (for duration and rendering)")
    p.add_argument("--episode-id", default="", help="id stamped into the plan")
    p.add_argument("--count", type=int, default=1, help="how many windows to pick")
    p.add_argument("--min-len", type=float, default=segments.MIN_SEGMENT_S)
    p.add_argument("--max-len", type=float, default=segments.MAX_SEGMENT_S)
    p.add_argument("--render-dir", help="write selected windows as WAVs here")

    p = add("fml", "first/middle/final-minute concatenation with beeps", cmd_fml)
    p.add_argument("--audio", required=True, help="episode WAV")
    p.add_argument("--output", required=True, help="output WAV path")
    p.add_argument("--beep-freq", type=float, default=1000.0)
    p.add_argument("--beep-level", type=float, default=-20.0)
    p.add_argument("--beep-duration", type=float, default=0.5)

    p = add("filter-judgers", "screen judgers on anchor statistics", cmd_filter_judgers)
    p.add_argument("path", help="submissions JSONL or precomputed stats JSONL")
    p.add_argument("--lq-threshold", type=float, default=analysis.LQ_THRESHOLD)
    p.add_argument("--hq-threshold", type=float, default=analysis.HQ_THRESHOLD)

    p = add("aggregate", "pool slider scores per system", cmd_aggregate)
    p.add_argument("submissions", help="submissions JSONL")
    p.add_argument("--no-filter", action="store_true", help="skip the judger screen")
    p.add_argument("--lq-threshold", type=float, default=analysis.LQ_THRESHOLD)
    p.add_argument("--hq-threshold", type=float, default=analysis.HQ_THRESHOLD)
    p.add_argument("--report-dir", help="write systems.csv plus box_plot.png here")

    p = add("report", "normalized cross-system report with radar payload", cmd_report)
    p.add_argument("--metrics", required=True, help="JSON of system -> family -> metric -> value")
    p.add_argument("--report-dir", help="write radar.png plus normalized.csv here")

    p = add("serve", "run the listening-test HTTP service", cmd_serve)
    p.add_argument("--config", required=True, help="test definition YAML/JSON")
    p.add_argument("--data-dir", required=True, help="audio and submission-log directory")
    p.add_argument("--submissions", help="submission log path (default data-dir/submissions.jsonl)")
    p.add_argument("--ui-dir", help="built UI directory (default data-dir/ui)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--check", action="store_true", help="validate config and routes, then exit")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        doc = args.func(args)
    except (PodmetricsError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if doc is not None:
        _emit(doc, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
