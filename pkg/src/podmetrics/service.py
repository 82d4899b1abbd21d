"""HTTP service behind the listening-test UI.

Serves client-safe test configurations (hidden anchor roles and attention
keys never leave the server), streams stimulus audio, persists submissions
to an append-only JSON-lines log with single-writer discipline, and
statically serves the built web UI. Participant identity is an opaque
``pid`` query token; per-participant stimulus order is shuffled with a
seed derived from (test_id, pid) so a reload never reshuffles a session.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import yaml
from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .analysis import SUBMISSION_SCHEMA_VERSION
from .errors import ConfigError, SubmissionError

MAX_BODY_BYTES = 256 * 1024
ROLE_HQ = "hq"
ROLE_LQ = "lq"
SCALE_STAGES = ("Bad", "Poor", "Fair", "Good", "Excellent")


@dataclass(frozen=True)
class Stimulus:
    stimulus_id: str
    audio: str
    role: str = ""  # "hq" | "lq" | system name; "" for reference/questionnaire


@dataclass(frozen=True)
class Question:
    question_id: str
    text: str
    kind: str = "scale"  # "scale" (5-point) or "count" (numeric)
    attention_key: str | None = None
    choices: tuple[str, ...] = ()


@dataclass(frozen=True)
class TestPage:
    page_id: str
    stimuli: tuple[Stimulus, ...]
    reference: Stimulus | None = None
    questions: tuple[Question, ...] = ()


@dataclass(frozen=True)
class TestConfig:
    test_id: str
    kind: str  # "mushra" | "questionnaire"
    pages: tuple[TestPage, ...]
    require_justification: bool = False
    scale_stages: tuple[str, ...] = SCALE_STAGES
    instructions: str = ""

    def page(self, page_id: str) -> TestPage | None:
        for p in self.pages:
            if p.page_id == page_id:
                return p
        return None

    def attention_keys(self, page_id: str) -> dict[str, str]:
        page = self.page(page_id)
        if page is None:
            return {}
        return {
            q.question_id: q.attention_key
            for q in page.questions
            if q.attention_key is not None
        }


def _parse_stimulus(raw: dict, where: str, need_role: bool) -> Stimulus:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: must be an object")
    sid, audio = raw.get("stimulus_id"), raw.get("audio")
    if not isinstance(sid, str) or not sid:
        raise ConfigError(f"{where}.stimulus_id: missing or empty")
    if not isinstance(audio, str) or not audio:
        raise ConfigError(f"{where}.audio: missing or empty")
    role = str(raw.get("role", ""))
    if need_role and not role:
        raise ConfigError(f"{where}.role: required for rated stimuli")
    return Stimulus(stimulus_id=sid, audio=audio, role=role)


def load_test_config(path: str | Path) -> TestConfig:
    """Parse and validate a YAML or JSON test definition.

    Slider tests need, per page, exactly one high-quality anchor, exactly
    one low-quality anchor, and a visible reference; questionnaire tests
    need one stimulus and at least one question per page.
    """
    path = Path(path)
    doc = yaml.safe_load(path.read_text())
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    test_id = doc.get("test_id")
    kind = doc.get("kind")
    if not isinstance(test_id, str) or not test_id:
        raise ConfigError(f"{path}: test_id missing or empty")
    if kind not in ("mushra", "questionnaire"):
        raise ConfigError(f"{path}: kind must be 'mushra' or 'questionnaire', got {kind!r}")
    pages_raw = doc.get("pages")
    if not isinstance(pages_raw, list) or not pages_raw:
        raise ConfigError(f"{path}: pages must be a non-empty list")

    pages: list[TestPage] = []
    seen_pages: set[str] = set()
    seen_stimuli: set[str] = set()
    for i, praw in enumerate(pages_raw):
        where = f"{path}:pages[{i}]"
        if not isinstance(praw, dict):
            raise ConfigError(f"{where}: must be an object")
        page_id = praw.get("page_id")
        if not isinstance(page_id, str) or not page_id:
            raise ConfigError(f"{where}.page_id: missing or empty")
        if page_id in seen_pages:
            raise ConfigError(f"{where}: duplicate page_id {page_id!r}")
        seen_pages.add(page_id)

        if kind == "mushra":
            sraw = praw.get("stimuli")
            if not isinstance(sraw, list) or len(sraw) < 2:
                raise ConfigError(f"{where}.stimuli: need at least 2 rated stimuli")
            stimuli = tuple(
                _parse_stimulus(s, f"{where}.stimuli[{j}]", need_role=True)
                for j, s in enumerate(sraw)
            )
            roles = [s.role for s in stimuli]
            if roles.count(ROLE_HQ) != 1 or roles.count(ROLE_LQ) != 1:
                raise ConfigError(
                    f"{where}: need exactly one '{ROLE_HQ}' and one '{ROLE_LQ}' anchor, "
                    f"got roles {roles}"
                )
            if len(set(roles)) != len(roles):
                raise ConfigError(f"{where}: stimulus roles must be unique per page")
            if "reference" not in praw:
                raise ConfigError(f"{where}.reference: slider pages need a visible reference")
            reference = _parse_stimulus(praw["reference"], f"{where}.reference", need_role=False)
            questions: tuple[Question, ...] = ()
        else:
            if "stimulus" not in praw:
                raise ConfigError(f"{where}.stimulus: questionnaire pages need one stimulus")
            reference = None
            stimuli = (_parse_stimulus(praw["stimulus"], f"{where}.stimulus", need_role=False),)
            qraw = praw.get("questions")
            if not isinstance(qraw, list) or not qraw:
                raise ConfigError(f"{where}.questions: must be a non-empty list")
            qs = []
            seen_q: set[str] = set()
            for j, q in enumerate(qraw):
                qwhere = f"{where}.questions[{j}]"
                if not isinstance(q, dict):
                    raise ConfigError(f"{qwhere}: must be an object")
                qid, text = q.get("question_id"), q.get("text")
                if not isinstance(qid, str) or not qid:
                    raise ConfigError(f"{qwhere}.question_id: missing or empty")
                if qid in seen_q:
                    raise ConfigError(f"{qwhere}: duplicate question_id {qid!r}")
                seen_q.add(qid)
                if not isinstance(text, str) or not text:
                    raise ConfigError(f"{qwhere}.text: missing or empty")
                qkind = str(q.get("type", "scale"))
                if qkind not in ("scale", "count"):
                    raise ConfigError(f"{qwhere}.type: must be 'scale' or 'count'")
                key = q.get("attention_key")
                choices = q.get("choices", [])
                if not isinstance(choices, list):
                    raise ConfigError(f"{qwhere}.choices: must be a list")
                qs.append(
                    Question(
                        question_id=qid,
                        text=text,
                        kind=qkind,
                        attention_key=None if key is None else str(key),
                        choices=tuple(str(c) for c in choices),
                    )
                )
            questions = tuple(qs)

        for s in list(stimuli) + ([reference] if reference else []):
            if s.stimulus_id in seen_stimuli:
                raise ConfigError(f"{where}: duplicate stimulus_id {s.stimulus_id!r}")
            seen_stimuli.add(s.stimulus_id)
        pages.append(
            TestPage(page_id=page_id, stimuli=stimuli, reference=reference, questions=questions)
        )

    stages = doc.get("scale", {}).get("stages", list(SCALE_STAGES)) if isinstance(
        doc.get("scale"), dict
    ) else list(SCALE_STAGES)
    if len(stages) != 5 or not all(isinstance(s, str) and s for s in stages):
        raise ConfigError(f"{path}: scale.stages must be 5 non-empty labels")
    return TestConfig(
        test_id=test_id,
        kind=kind,
        pages=tuple(pages),
        require_justification=bool(doc.get("require_justification", False)),
        scale_stages=tuple(stages),
        instructions=str(doc.get("instructions", "")),
    )


def session_seed(test_id: str, judger_id: str) -> str:
    """Deterministic per-session shuffle seed; recorded with submissions."""
    return hashlib.sha256(f"{test_id}:{judger_id}".encode()).hexdigest()[:16]


def client_config(config: TestConfig, judger_id: str) -> dict:
    """The wire form of a test config: shuffled, with all secrets stripped.

    Hidden roles and attention keys never appear; stimulus order within a
    page is shuffled deterministically from (test_id, judger_id).
    """
    seed = session_seed(config.test_id, judger_id)
    rng = random.Random(int(seed, 16))
    pages = []
    for page in config.pages:
        ids = [s.stimulus_id for s in page.stimuli]
        order = rng.sample(ids, k=len(ids))
        pdoc: dict = {"page_id": page.page_id, "stimuli": [{"stimulus_id": sid} for sid in order]}
        if page.reference is not None:
            pdoc["reference"] = {"stimulus_id": page.reference.stimulus_id}
        if page.questions:
            pdoc["questions"] = [
                {
                    "question_id": q.question_id,
                    "text": q.text,
                    "type": q.kind,
                    **({"choices": list(q.choices)} if q.choices else {}),
                }
                for q in page.questions
            ]
        pages.append(pdoc)
    return {
        "test_id": config.test_id,
        "kind": config.kind,
        "require_justification": config.require_justification,
        "scale_stages": list(config.scale_stages),
        "instructions": config.instructions,
        "session_seed": seed,
        "pages": pages,
    }


class SubmissionLog:
    """Append-only JSON-lines store with serialized, fsynced writes."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._seen: set[tuple[str, str, str]] = set()
        if self.path.exists():
            for rec in self._read_raw():
                self._seen.add((rec.get("test_id", ""), rec["judger_id"], rec["page_id"]))

    def _read_raw(self) -> list[dict]:
        out = []
        lines = self.path.read_text().split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError:
                if i == len(lines) - 1:
                    continue  # torn trailing write
                raise SubmissionError(f"{self.path}:{i + 1}: corrupt submission line")
        return out

    def append(self, record: dict) -> None:
        key = (record.get("test_id", ""), record["judger_id"], record["page_id"])
        line = json.dumps(record, separators=(",", ":"), sort_keys=True)
        with self._lock:
            if key in self._seen:
                raise SubmissionError("duplicate submission for this page")
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(line + "\n")
                f.flush()
                os.fsync(f.fileno())
            self._seen.add(key)

    def has(self, test_id: str, judger_id: str, page_id: str) -> bool:
        with self._lock:
            return (test_id, judger_id, page_id) in self._seen


def _error(status: int, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": detail})


def _validate_wire_submission(body: dict, config: TestConfig) -> tuple[dict, str]:
    """Check a POST body against the test config.

    Returns (persistable record, page_id). Raises SubmissionError with a
    field path for every rejection; callers map that to HTTP 400.
    """
    if not isinstance(body, dict):
        raise SubmissionError("body: must be a JSON object")
    version = body.get("schema_version", SUBMISSION_SCHEMA_VERSION)
    if version != SUBMISSION_SCHEMA_VERSION:
        raise SubmissionError(f"schema_version: unsupported value {version!r}")
    for fld in ("test_id", "judger_id", "page_id"):
        if not isinstance(body.get(fld), str) or not body[fld]:
            raise SubmissionError(f"{fld}: missing or empty")
    if body["test_id"] != config.test_id:
        raise SubmissionError(f"test_id: unknown test {body['test_id']!r}")
    page = config.page(body["page_id"])
    if page is None:
        raise SubmissionError(f"page_id: unknown page {body['page_id']!r}")
    kind = body.get("test_kind", config.kind)
    if kind != config.kind:
        raise SubmissionError(f"test_kind: expected {config.kind!r}, got {kind!r}")

    record: dict = {
        "schema_version": SUBMISSION_SCHEMA_VERSION,
        "test_id": config.test_id,
        "judger_id": body["judger_id"],
        "page_id": body["page_id"],
        "test_kind": config.kind,
        "session_seed": session_seed(config.test_id, body["judger_id"]),
        "timestamp": time.time(),
    }

    if config.kind == "mushra":
        ratings = body.get("ratings")
        if not isinstance(ratings, dict) or not ratings:
            raise SubmissionError("ratings: missing or empty")
        expected = {s.stimulus_id: s for s in page.stimuli}
        missing = sorted(set(expected) - set(ratings))
        if missing:
            raise SubmissionError(f"ratings.{missing[0]}: stimulus not rated")
        stray = sorted(set(ratings) - set(expected))
        if stray:
            raise SubmissionError(f"ratings.{stray[0]}: unknown stimulus")
        by_system: dict[str, float] = {}
        anchors: dict[str, str] = {}
        for sid, score in ratings.items():
            if isinstance(score, bool) or not isinstance(score, (int, float)):
                raise SubmissionError(f"ratings.{sid}: score must be a number")
            if not 0 <= float(score) <= 100:
                raise SubmissionError(f"ratings.{sid}: score {score} outside [0, 100]")
            role = expected[sid].role
            by_system[role] = float(score)
            if role in (ROLE_HQ, ROLE_LQ):
                anchors[role] = role
        record["ratings"] = by_system
        record["anchors"] = anchors
        record["stimulus_map"] = {sid: expected[sid].role for sid in sorted(expected)}
    else:
        answers = body.get("answers")
        if not isinstance(answers, dict) or not answers:
            raise SubmissionError("answers: missing or empty")
        expected_q = {q.question_id: q for q in page.questions}
        missing = sorted(set(expected_q) - set(answers))
        if missing:
            raise SubmissionError(f"answers.{missing[0]}: question not answered")
        stray = sorted(set(answers) - set(expected_q))
        if stray:
            raise SubmissionError(f"answers.{stray[0]}: unknown question")
        clean: dict[str, dict] = {}
        for qid in sorted(expected_q):
            cell = answers[qid]
            if not isinstance(cell, dict) or "choice" not in cell:
                raise SubmissionError(f"answers.{qid}: need a choice field")
            choice = cell["choice"]
            q = expected_q[qid]
            if q.kind == "scale":
                if isinstance(choice, bool) or not isinstance(choice, int) or not 1 <= choice <= 5:
                    raise SubmissionError(f"answers.{qid}.choice: must be an integer 1..5")
            else:  # count or labeled choice
                if isinstance(choice, bool) or not isinstance(choice, (int, str)):
                    raise SubmissionError(f"answers.{qid}.choice: must be a count or label")
                if isinstance(choice, int) and choice < 0:
                    raise SubmissionError(f"answers.{qid}.choice: must be >= 0")
            just = cell.get("justification", "")
            if not isinstance(just, str):
                raise SubmissionError(f"answers.{qid}.justification: must be a string")
            if config.require_justification and not just.strip():
                raise SubmissionError(f"answers.{qid}.justification: required")
            clean[qid] = {"choice": choice, "justification": just}
        record["answers"] = clean
    return record, body["page_id"]


def create_app(
    config: TestConfig,
    data_dir: str | Path,
    submissions_path: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    """Assemble the service around one test configuration.

    ``data_dir`` anchors relative audio paths and holds the submission
    log (``submissions.jsonl``) unless an explicit path is given. When
    ``ui_dir`` (or ``data_dir/ui``) exists, the built web UI is served
    from the site root.
    """
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    log = SubmissionLog(submissions_path or data_dir / "submissions.jsonl")
    audio_index: dict[str, Path] = {}
    for page in config.pages:
        for s in list(page.stimuli) + ([page.reference] if page.reference else []):
            p = Path(s.audio)
            audio_index[s.stimulus_id] = p if p.is_absolute() else data_dir / p

    app = FastAPI(title="listening-test service", docs_url=None, redoc_url=None)
    app.state.config = config
    app.state.submission_log = log

    @app.get("/api/tests/{test_id}")
    def get_test(test_id: str, pid: str = ""):
        if test_id != config.test_id:
            return _error(404, f"unknown test {test_id!r}")
        if not pid:
            return _error(400, "pid: participant token required")
        return client_config(config, pid)

    @app.get("/api/audio/{stimulus_id}")
    def get_audio(stimulus_id: str):
        path = audio_index.get(stimulus_id)
        if path is None or not path.is_file():
            return _error(404, f"unknown stimulus {stimulus_id!r}")
        return FileResponse(path, media_type="audio/wav")

    @app.post("/api/submissions")
    async def post_submission(request: Request):
        raw = await request.body()
        if len(raw) > MAX_BODY_BYTES:
            return _error(413, f"body exceeds {MAX_BODY_BYTES} bytes")
        try:
            body = json.loads(raw)
        except json.JSONDecodeError:
            return _error(400, "body: invalid JSON")
        try:
            record, page_id = _validate_wire_submission(body, config)
        except SubmissionError as e:
            return _error(400, str(e))
        if log.has(config.test_id, record["judger_id"], page_id):
            return _error(409, "page already submitted for this participant")
        submission_id = hashlib.sha256(
            f"{config.test_id}:{record['judger_id']}:{page_id}".encode()
        ).hexdigest()[:16]
        record["submission_id"] = submission_id
        try:
            log.append(record)
        except SubmissionError:
            return _error(409, "page already submitted for this participant")
        return {"accepted": True, "submission_id": submission_id}

    ui_path = Path(ui_dir) if ui_dir else data_dir / "ui"
    if ui_path.is_dir():
        app.mount("/", StaticFiles(directory=ui_path, html=True), name="ui")
    return app
