"""Comparative script judging and comment scoring through an external LLM.

Two protocols over a generic chat-completion HTTP client: pairwise script
comparison on six criteria with order-bias cancellation (each pair is
judged twice with the presentation order swapped; the two verdicts are
averaged with the second one's sign flipped), and per-question scoring of
listener justifications (one request per question covering every system's
comments). Prompts are versioned text assets shipped with the package,
and every result records the prompt version that produced it.
"""

from __future__ import annotations

import json
import math
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources

import httpx

from .errors import JudgeError, JudgeParseError

CRITERIA = (
    "coherence",
    "engagingness",
    "diversity",
    "informativeness",
    "speaker_difference",
    "overall",
)
SCORE_MIN, SCORE_MAX = -3, 3
JUSTIFICATION_SCORE_RANGE = (1, 5)

PAIR_PROMPT_VERSION = "pair_judge_v1"
JUSTIFICATION_PROMPT_VERSION = "justification_score_v1"

_FENCED_JSON = re.compile(r"```(?:json)?\s*(\{.*?\})\s*```", re.DOTALL)


@dataclass(frozen=True)
class JudgeConfig:
    """Connection and retry settings for the judge endpoint."""

    endpoint_url: str
    model: str
    api_key_env: str = "JUDGE_API_KEY"
    temperature: float = 0.0
    max_retries: int = 2
    timeout_s: float = 60.0
    parallelism: int = 4
    retry_backoff_s: float = 1.0

    def __post_init__(self):
        if self.max_retries < 0:
            raise JudgeError("max_retries must be >= 0")
        if self.timeout_s <= 0:
            raise JudgeError("timeout_s must be positive")
        if self.parallelism < 1:
            raise JudgeError("parallelism must be >= 1")


def load_prompt(version: str) -> str:
    """Read a versioned prompt asset shipped inside the package."""
    try:
        return (resources.files("podmetrics") / "prompts" / f"{version}.txt").read_text()
    except FileNotFoundError as e:
        raise JudgeError(f"unknown prompt version {version!r}") from e


class HttpChatClient:
    """Chat-completion client: messages in, assistant text out.

    Speaks the common wire shape: POST {model, messages, temperature} to
    the endpoint; reads choices[0].message.content from the JSON reply.
    The API key is read from the configured environment variable at call
    time and sent as a bearer token when present.
    """

    def __init__(self, config: JudgeConfig):
        self.config = config

    def complete(self, messages: list[dict]) -> str:
        cfg = self.config
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(cfg.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        payload = {
            "model": cfg.model,
            "messages": messages,
            "temperature": cfg.temperature,
        }
        last_error: Exception | None = None
        for attempt in range(cfg.max_retries + 1):
            try:
                resp = httpx.post(
                    cfg.endpoint_url, json=payload, headers=headers, timeout=cfg.timeout_s
                )
                resp.raise_for_status()
                body = resp.json()
                return body["choices"][0]["message"]["content"]
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as e:
                last_error = e
                if attempt < cfg.max_retries and cfg.retry_backoff_s > 0:
                    time.sleep(cfg.retry_backoff_s * (2**attempt))
        raise JudgeError(
            f"judge endpoint failed after {cfg.max_retries + 1} attempts: {last_error}"
        ) from last_error


class MockChatClient:
    """Scripted client for tests: returns queued replies in order."""

    def __init__(self, replies: list[str] | None = None, responder=None):
        self.replies = list(replies or [])
        self.responder = responder
        self.requests: list[list[dict]] = []

    def complete(self, messages: list[dict]) -> str:
        self.requests.append(messages)
        if self.responder is not None:
            return self.responder(messages)
        if not self.replies:
            raise JudgeError("mock client exhausted")
        return self.replies.pop(0)


def extract_json_object(text: str) -> dict:
    """Pull the first JSON object out of a model reply.

    Accepts a bare object, an object inside a ```json fence, or an object
    embedded in surrounding prose (first balanced {...} region). Raises
    :class:`JudgeParseError` carrying the raw text when nothing parses.
    """
    m = _FENCED_JSON.search(text)
    candidates = [m.group(1)] if m else []
    start = text.find("{")
    if start != -1:
        depth = 0
        in_str = False
        esc = False
        for i in range(start, len(text)):
            c = text[i]
            if esc:
                esc = False
            elif c == "\\":
                esc = True
            elif c == '"':
                in_str = not in_str
            elif not in_str:
                if c == "{":
                    depth += 1
                elif c == "}":
                    depth -= 1
                    if depth == 0:
                        candidates.append(text[start : i + 1])
                        break
    for cand in candidates:
        try:
            obj = json.loads(cand)
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    raise JudgeParseError("no JSON object found in model reply", raw=text)


def _parse_pair_scores(text: str) -> tuple[dict[str, int], str]:
    obj = extract_json_object(text)
    scores: dict[str, int] = {}
    for crit in CRITERIA:
        if crit not in obj:
            raise JudgeParseError(f"reply missing criterion {crit!r}", raw=text)
        val = obj[crit]
        if isinstance(val, bool) or not isinstance(val, int):
            if isinstance(val, float) and val.is_integer():
                val = int(val)
            else:
                raise JudgeParseError(f"criterion {crit!r} score {val!r} is not an integer", raw=text)
        if not SCORE_MIN <= val <= SCORE_MAX:
            raise JudgeParseError(
                f"criterion {crit!r} score {val} outside [{SCORE_MIN}, {SCORE_MAX}]", raw=text
            )
        scores[crit] = val
    evidence = obj.get("evidence", "")
    if not isinstance(evidence, str):
        evidence = json.dumps(evidence)
    return scores, evidence


def _round_half_away_from_zero(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class ComparativeVerdict:
    """Order-debiased comparison of script A against script B.

    Positive scores favor A, negative favor B. ``order_ab`` / ``order_ba``
    keep each presentation order's raw scores; ``scores`` is the combined
    verdict: round_half_away_from_zero(mean(ab, -ba)) per criterion.
    """

    scores: dict[str, int]
    order_ab: dict[str, int]
    order_ba: dict[str, int]
    evidence_ab: str
    evidence_ba: str
    prompt_version: str = PAIR_PROMPT_VERSION


def _format_script(script: str | list) -> str:
    if isinstance(script, str):
        return script
    return "\n".join(f"{t.speaker_id}: {t.text}" for t in script)


def _ask_pair(client, first: str, second: str, config: JudgeConfig) -> tuple[dict[str, int], str]:
    prompt = (
        load_prompt(PAIR_PROMPT_VERSION)
        .replace("<<SCRIPT_1>>", first)
        .replace("<<SCRIPT_2>>", second)
    )
    messages = [{"role": "user", "content": prompt}]
    last: JudgeParseError | None = None
    for _ in range(config.max_retries + 1):
        reply = client.complete(messages)
        try:
            return _parse_pair_scores(reply)
        except JudgeParseError as e:
            last = e
    assert last is not None
    raise last


def judge_pair(script_a, script_b, config: JudgeConfig, client=None) -> ComparativeVerdict:
    """Compare two scripts with order-bias cancellation.

    Issues two requests — (A, B) then (B, A) — and combines them so a
    consistent verdict survives and a pure position preference cancels to
    zero. Parse failures are retried per request up to max_retries; the
    final failure carries the raw model text.
    """
    a_text, b_text = _format_script(script_a), _format_script(script_b)
    if not a_text.strip() or not b_text.strip():
        raise JudgeError("both scripts must be non-empty")
    if client is None:
        client = HttpChatClient(config)
    ab_scores, ab_evidence = _ask_pair(client, a_text, b_text, config)
    ba_scores, ba_evidence = _ask_pair(client, b_text, a_text, config)
    combined = {
        crit: _round_half_away_from_zero((ab_scores[crit] - ba_scores[crit]) / 2.0)
        for crit in CRITERIA
    }
    return ComparativeVerdict(
        scores=combined,
        order_ab=ab_scores,
        order_ba=ba_scores,
        evidence_ab=ab_evidence,
        evidence_ba=ba_evidence,
    )


def judge_pairs(
    pairs: list[tuple], config: JudgeConfig, client=None
) -> list[ComparativeVerdict]:
    """Judge many (script_a, script_b) pairs, up to config.parallelism at once."""
    if client is None:
        client = HttpChatClient(config)
    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        futures = [pool.submit(judge_pair, a, b, config, client) for a, b in pairs]
        return [f.result() for f in futures]


@dataclass(frozen=True)
class JustificationScore:
    summary: str
    score: int
    prompt_version: str = JUSTIFICATION_PROMPT_VERSION


def _parse_justification_scores(text: str, systems: list[str]) -> dict[str, JustificationScore]:
    obj = extract_json_object(text)
    out: dict[str, JustificationScore] = {}
    lo, hi = JUSTIFICATION_SCORE_RANGE
    for system in systems:
        if system not in obj:
            raise JudgeParseError(f"reply missing system {system!r}", raw=text)
        cell = obj[system]
        if not isinstance(cell, dict) or "summary" not in cell or "score" not in cell:
            raise JudgeParseError(f"system {system!r} needs summary and score", raw=text)
        score = cell["score"]
        if isinstance(score, bool) or not isinstance(score, int):
            raise JudgeParseError(f"system {system!r} score {score!r} is not an integer", raw=text)
        if not lo <= score <= hi:
            raise JudgeParseError(f"system {system!r} score {score} outside [{lo}, {hi}]", raw=text)
        out[system] = JustificationScore(summary=str(cell["summary"]), score=score)
    return out


def score_justifications(
    comments: dict[str, list[str]],
    question: str,
    config: JudgeConfig,
    client=None,
) -> dict[str, JustificationScore]:
    """Summarize and score listener comments, one request per question.

    Systems with no comments are omitted from both the request and the
    result. The model must return an integer score in [1, 5] per system;
    out-of-range or non-integer replies are retried, then rejected.
    """
    present = {sys: c for sys, c in comments.items() if c}
    if not present:
        raise JudgeError("no comments to score")
    if client is None:
        client = HttpChatClient(config)
    blocks = []
    for sys in sorted(present):
        lines = "\n".join(f"- {c}" for c in present[sys])
        blocks.append(f"{sys}:\n{lines}")
    prompt = (
        load_prompt(JUSTIFICATION_PROMPT_VERSION)
        .replace("<<QUESTION>>", question)
        .replace("<<COMMENTS>>", "\n\n".join(blocks))
    )
    messages = [{"role": "user", "content": prompt}]
    systems = sorted(present)
    last: JudgeParseError | None = None
    for _ in range(config.max_retries + 1):
        reply = client.complete(messages)
        try:
            return _parse_justification_scores(reply, systems)
        except JudgeParseError as e:
            last = e
    assert last is not None
    raise last
