"""Accuracy scorers producing a value in (0, 1] for each response."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from string import Template
from typing import Protocol

import numpy as np

from .backends import TRUE_QUALITY_KEY, BackendResponse, BackendRegistry, QueryRequest
from .core import InvalidConfig, RoutingError

SCORE_FLOOR = 1e-6
JUDGE_TEMPLATE_NAME = "judge_prompt_v1.txt"
NO_REFERENCE_LINE = "No reference answer available."


class ScoringError(RoutingError):
    code = "ScoringError"


class MissingQualityMetadata(ScoringError):
    code = "MissingQualityMetadata"


class JudgeUnparseable(ScoringError):
    code = "JudgeUnparseable"


@dataclass(frozen=True)
class ScoreRequest:
    question: str
    ai_response: str
    human_response: str | None = None

    def __post_init__(self) -> None:
        if not self.question or not self.ai_response:
            raise InvalidConfig("question and ai_response must be nonempty")


@dataclass(frozen=True)
class Score:
    value: float
    scorer_id: str

    def __post_init__(self) -> None:
        if not 0.0 < self.value <= 1.0:
            raise ValueError(f"score must be in (0, 1], got {self.value}")


def _floor(value: float) -> float:
    return min(1.0, max(SCORE_FLOOR, value))


class Scorer(Protocol):
    scorer_id: str

    def score(self, request: ScoreRequest, response: BackendResponse) -> Score: ...


def score_oracle(response: BackendResponse) -> Score:
    """Read back the quality a simulated backend drew for this response."""
    try:
        quality = float(response.metadata[TRUE_QUALITY_KEY])
    except (KeyError, TypeError, ValueError):
        raise MissingQualityMetadata(
            f"response from {response.backend_id!r} carries no simulated quality"
        ) from None
    return Score(_floor(quality), "oracle")


class OracleScorer:
    scorer_id = "oracle"

    def score(self, request: ScoreRequest, response: BackendResponse) -> Score:
        return score_oracle(response)


def load_judge_template() -> str:
    return resources.files("llmroute.templates").joinpath(JUDGE_TEMPLATE_NAME).read_text(encoding="utf-8")


def render_judge_prompt(request: ScoreRequest, template: str | None = None) -> str:
    template = load_judge_template() if template is None else template
    human = request.human_response if request.human_response else NO_REFERENCE_LINE
    # substitute() only parses the template, so "$" inside user text is inert.
    return Template(template).substitute(
        question=request.question,
        ai_response=request.ai_response,
        human_response=human,
    )


_DECIMAL = r"(?:0|1)(?:\.\d+)?|\.\d+"
_STRICT = re.compile(rf"^(?:{_DECIMAL})$")
# Fallback: the first line is a lone decimal, optionally wrapped in quotes,
# backticks or emphasis markers, optionally followed by a period.
_FALLBACK = re.compile(rf"^[\"'`*]*({_DECIMAL})[\"'`*]*\.?$")


def parse_judge_reply(reply: str) -> float:
    """Parse a judge reply into a score in (0, 1].

    The whole trimmed reply must be a decimal in [0, 1]; failing that, the
    first line may be one (quoted or not). Anything else raises
    ``JudgeUnparseable``. A zero is floored to ``SCORE_FLOOR``.
    """
    text = (reply or "").strip()
    if _STRICT.match(text):
        token = text
    else:
        first_line = text.splitlines()[0].strip() if text else ""
        m = _FALLBACK.match(first_line)
        if m is None:
            raise JudgeUnparseable(f"judge reply is not a lone decimal: {reply[:80]!r}")
        token = m.group(1)
    value = float(token)
    if not 0.0 <= value <= 1.0:
        raise JudgeUnparseable(f"judge score {value} outside [0, 1]")
    return _floor(value)


class LlmJudgeScorer:
    """Scores a response by asking a judge model with the fixed prompt template."""

    scorer_id = "llm_judge"

    def __init__(self, registry: BackendRegistry, judge_ref: str, template: str | None = None):
        self.registry = registry
        self.judge_ref = judge_ref
        self.template = load_judge_template() if template is None else template
        self._rng = np.random.default_rng(0)

    def score(self, request: ScoreRequest, response: BackendResponse | None = None) -> Score:
        prompt = render_judge_prompt(request, self.template)
        reply = self.registry.execute(
            self.judge_ref, QueryRequest(session_id="judge", prompt=prompt), self._rng
        )
        return Score(parse_judge_reply(reply.text), self.scorer_id)


def score_llm_judge(request: ScoreRequest, registry: BackendRegistry, judge_ref: str) -> Score:
    return LlmJudgeScorer(registry, judge_ref).score(request)
