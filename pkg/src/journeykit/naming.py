"""Journey naming: prompt assembly, completion backends, and overlap scoring.

Prompts render a journey's item titles (and optionally its top keywords)
into one of four fixed formats, with optional few-shot exemplars prepended
as completed input/output pairs. Names come from either a minimal remote
text-completion endpoint or a deterministic offline fallback, and generated
names are scored against text with a smoothed n-gram overlap metric.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import requests

from .concepts import ConceptVector, UserHistory, aggregate, top_terms
from .extraction import ExtractionResult

__all__ = [
    "TEMPLATE_KINDS",
    "BackendError",
    "Exemplar",
    "PromptTemplate",
    "JourneyText",
    "NamingRequest",
    "NamingResult",
    "OfflineBackend",
    "RemoteBackend",
    "build_prompt",
    "name_journey",
    "bleu",
    "ModeOutcome",
    "NamingModesReport",
    "compare_naming_modes",
    "load_exemplars",
]

TEMPLATE_KINDS = (
    "natural_titles",
    "structured_titles",
    "structured_keywords",
    "structured_titles_keywords",
)

# Generated names are cut to this many whitespace tokens.
NAME_TOKEN_LIMIT = 64

# How many representation terms feed the keyword formats.
PROMPT_KEYWORDS = 10


class BackendError(RuntimeError):
    """A completion backend failed; carries the HTTP status when known."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


@dataclass
class Exemplar:
    """One few-shot demonstration: input fields plus the target name."""

    titles: list[str] = field(default_factory=list)
    keywords: list[str] = field(default_factory=list)
    target: str = ""


@dataclass
class PromptTemplate:
    kind: str
    max_items: int | None = None  # keep only the LAST N titles of the journey
    exemplars: list[Exemplar] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in TEMPLATE_KINDS:
            raise ValueError(f"unknown template kind {self.kind!r}; expected one of {TEMPLATE_KINDS}")
        if self.max_items is not None and self.max_items < 1:
            raise ValueError(f"max_items must be >= 1, got {self.max_items}")


@dataclass
class JourneyText:
    """What the namer sees of a journey: ordered titles and the aggregate vector."""

    titles: list[str]
    representation: ConceptVector


@dataclass
class NamingRequest:
    journey: JourneyText
    template: PromptTemplate


@dataclass
class NamingResult:
    name: str
    prompt: str
    backend: str


def _render(kind: str, titles_text: str, keywords: Sequence[str]) -> str:
    if kind == "natural_titles":
        return (
            f"I consumed content with titles: {titles_text}.\n"
            "I would describe one of my interests as:"
        )
    if kind == "structured_titles":
        return f"titles: {{{titles_text}}} interest_journey:"
    if kind == "structured_keywords":
        return f"keywords: {{{', '.join(keywords)}}} interest_journey:"
    return f"titles: {{{titles_text}}} keywords: {{{', '.join(keywords)}}} interest_journey:"


def _needs_titles(kind: str) -> bool:
    return kind != "structured_keywords"


def _needs_keywords(kind: str) -> bool:
    return kind in ("structured_keywords", "structured_titles_keywords")


def build_prompt(journey: JourneyText, template: PromptTemplate) -> str:
    """Deterministic prompt text for one journey under one template.

    Titles are joined with "; ", keywords (the ten heaviest representation
    terms) with ", "; exemplars are prepended in order as completed pairs
    separated by blank lines, and ``max_items`` keeps only the journey's
    last N titles.
    """
    if not journey.titles:
        raise ValueError("cannot build a prompt for an empty journey")
    blocks: list[str] = []
    for ex in template.exemplars:
        if _needs_titles(template.kind) and not ex.titles:
            raise ValueError(f"exemplar for {template.kind!r} template needs titles")
        if _needs_keywords(template.kind) and not ex.keywords:
            raise ValueError(f"exemplar for {template.kind!r} template needs keywords")
        rendered = _render(template.kind, "; ".join(ex.titles), ex.keywords)
        blocks.append(f"{rendered} {ex.target}")
    titles = journey.titles[-template.max_items :] if template.max_items else journey.titles
    keywords = [t for t, _ in top_terms(journey.representation, PROMPT_KEYWORDS)] if journey.representation else []
    blocks.append(_render(template.kind, "; ".join(titles), keywords))
    return "\n\n".join(blocks)


class OfflineBackend:
    """Deterministic fallback namer: the journey's three heaviest terms."""

    tag = "offline"

    def generate(self, prompt: str, journey: JourneyText) -> str:
        return " ".join(t for t, _ in top_terms(journey.representation, 3))


class RemoteBackend:
    """Minimal text-completion client: POST {prompt, max_tokens, temperature},
    expect {text}. Failures raise BackendError; there is no silent fallback."""

    tag = "remote"

    def __init__(
        self,
        endpoint: str,
        auth_token: str | None = None,
        timeout: float = 30.0,
        max_tokens: int = NAME_TOKEN_LIMIT,
        temperature: float = 0.0,
    ):
        self.endpoint = endpoint
        self.auth_token = auth_token
        self.timeout = timeout
        self.max_tokens = max_tokens
        self.temperature = temperature

    def generate(self, prompt: str, journey: JourneyText) -> str:
        headers = {"Content-Type": "application/json"}
        if self.auth_token:
            headers["Authorization"] = f"Bearer {self.auth_token}"
        payload = {
            "prompt": prompt,
            "max_tokens": self.max_tokens,
            "temperature": self.temperature,
        }
        try:
            response = requests.post(
                self.endpoint, json=payload, headers=headers, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise BackendError(f"completion request failed: {exc}") from exc
        if response.status_code != 200:
            raise BackendError(
                f"completion endpoint returned HTTP {response.status_code}",
                status=response.status_code,
            )
        try:
            data = response.json()
        except ValueError as exc:
            raise BackendError("completion endpoint returned non-JSON body", status=200) from exc
        text = data.get("text")
        if not isinstance(text, str):
            raise BackendError("completion response missing string field 'text'", status=200)
        first_line = text.strip().splitlines()[0] if text.strip() else ""
        return " ".join(first_line.split()[:NAME_TOKEN_LIMIT])


def name_journey(request: NamingRequest, backend) -> NamingResult:
    """Generate one journey name; the prompt is reproducible from the request."""
    prompt = build_prompt(request.journey, request.template)
    name = backend.generate(prompt, request.journey)
    return NamingResult(name=name, prompt=prompt, backend=backend.tag)


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, reference: str, max_n: int = 4) -> float:
    """Smoothed n-gram overlap in [0, 1].

    Geometric mean of clipped n-gram precisions for n up to
    min(max_n, candidate length), with add-1 smoothing on counts for n >= 2,
    times a brevity penalty min(1, e^(1 - |ref|/|cand|)). Tokenization is
    lowercase whitespace splitting; an empty candidate scores 0.
    """
    cand = candidate.lower().split()
    ref = reference.lower().split()
    if not cand:
        return 0.0
    limit = min(max_n, len(cand))
    log_sum = 0.0
    for n in range(1, limit + 1):
        cand_counts = _ngrams(cand, n)
        ref_counts = _ngrams(ref, n)
        total = sum(cand_counts.values())
        matched = sum(min(count, ref_counts[g]) for g, count in cand_counts.items())
        if n == 1:
            if matched == 0:
                return 0.0
            p = matched / total
        else:
            p = (matched + 1) / (total + 1)
        log_sum += math.log(p)
    brevity = min(1.0, math.exp(1.0 - len(ref) / len(cand)))
    return brevity * math.exp(log_sum / limit)


@dataclass
class ModeOutcome:
    names: list[str]
    score: float
    calls: int
    partial: bool = False
    errors: list[str] = field(default_factory=list)


@dataclass
class NamingModesReport:
    whole_history: ModeOutcome
    concatenated_groups: ModeOutcome
    per_journey: ModeOutcome


# Line inserted between journey groups in the single-prompt grouped mode.
GROUP_SEPARATOR = "\n---\n"


def compare_naming_modes(
    user_history: UserHistory,
    extractor: Callable[[UserHistory], ExtractionResult],
    template: PromptTemplate,
    backend,
) -> NamingModesReport:
    """Score three ways of naming one user's interests.

    1. whole_history: a single prompt over the entire mixed history.
    2. concatenated_groups: a single prompt whose title slot holds each
       extracted journey's titles, groups separated by a separator line.
    3. per_journey: one prompt (and one backend call) per extracted journey.

    Each mode's concatenated names are scored against the concatenated
    titles of the whole input history. Backend failures in per-journey mode
    are collected per journey and flag the outcome as partial.
    """
    by_id = {item.id: item for item in user_history.items}
    reference = " ".join(item.title for item in user_history.items)
    result = extractor(user_history)
    groups = result.journeys

    def outcome(names: list[str], calls: int, partial=False, errors=None) -> ModeOutcome:
        return ModeOutcome(
            names=names,
            score=bleu(" ".join(names), reference),
            calls=calls,
            partial=partial,
            errors=errors or [],
        )

    whole = JourneyText(
        titles=[item.title for item in user_history.items],
        representation=aggregate(item.concepts for item in user_history.items),
    )
    whole_result = name_journey(NamingRequest(whole, template), backend)
    mode1 = outcome([whole_result.name], calls=1)

    if groups:
        group_titles = [
            "; ".join(by_id[m].title for m in journey.members) for journey in groups
        ]
        combined_rep = aggregate(j.representation for j in groups)
        keywords = [t for t, _ in top_terms(combined_rep, PROMPT_KEYWORDS)] if combined_rep else []
        prompt = _render(template.kind, GROUP_SEPARATOR.join(group_titles), keywords)
        grouped_journey = JourneyText(
            titles=[t for j in groups for m in j.members for t in [by_id[m].title]],
            representation=combined_rep,
        )
        mode2 = outcome([backend.generate(prompt, grouped_journey)], calls=1)
    else:
        mode2 = outcome([], calls=0)

    names: list[str] = []
    errors: list[str] = []
    calls = 0
    for journey in groups:
        text = JourneyText(
            titles=[by_id[m].title for m in journey.members],
            representation=journey.representation,
        )
        calls += 1
        try:
            names.append(name_journey(NamingRequest(text, template), backend).name)
        except BackendError as exc:
            errors.append(f"journey {journey.creation_index}: {exc}")
    mode3 = outcome(names, calls=calls, partial=bool(errors), errors=errors)
    return NamingModesReport(mode1, mode2, mode3)


def load_exemplars(path: str) -> list[Exemplar]:
    """Read few-shot exemplars from JSONL of {"input": {...}, "target": str}."""
    exemplars: list[Exemplar] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed JSON ({exc})") from exc
            if not isinstance(record, dict) or "target" not in record:
                raise ValueError(f"{path}:{lineno}: exemplar needs 'input' and 'target'")
            fields = record.get("input") or {}
            exemplars.append(
                Exemplar(
                    titles=list(fields.get("titles") or []),
                    keywords=list(fields.get("keywords") or []),
                    target=str(record["target"]),
                )
            )
    return exemplars
