"""Deterministic synthetic corpora with planted journey structure.

Each user gets a few ground-truth journeys; every journey owns a term
vocabulary that is disjoint from other journeys except for a global shared
pool. Items sample a handful of journey terms (plus optional noise terms),
titles are the sampled terms joined, and per-user histories riffle the
user's journeys together so extraction has to undo the interleaving.

Dense embeddings model a cross-cutting "production format" signal rather
than the journey structure: each item lands near one of a few format
centers regardless of its journey, which is what makes dense-similarity
clustering split semantic journeys apart.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .concepts import ConceptVector, Item, UserHistory
from .evaluation import riffle
from .io import Playlist, write_histories, write_items, write_playlists

__all__ = ["SynthSpec", "SynthCorpus", "generate", "save_corpus"]

# Dense-embedding geometry: a few far-apart format centers with unit jitter.
# Format choice is independent of journey membership and deliberately
# unbalanced so that the median pairwise distance falls inside the dominant
# format's cloud.
DENSE_DIM = 8
FORMAT_WEIGHTS = (0.75, 0.15, 0.10)
FORMAT_SCALE = 150.0
NOISE_POOL_SIZE = 400

_SYLLABLES = (
    "ba", "ce", "di", "fo", "gu", "ha", "je", "ki", "lo", "mu",
    "na", "pe", "ri", "so", "tu", "va", "we", "xi", "yo", "zu",
)


def _word(index: int) -> str:
    """Unique pronounceable pseudo-word for a global term index."""
    parts = []
    n = index
    for _ in range(3):
        parts.append(_SYLLABLES[n % len(_SYLLABLES)])
        n //= len(_SYLLABLES)
    return "".join(parts)


@dataclass
class SynthSpec:
    n_users: int
    journeys_per_user: int
    items_per_journey: int
    vocab_per_journey: int = 12
    shared_vocab_fraction: float = 0.0
    noise_terms_per_item: int = 0
    seed: int = 0

    def __post_init__(self):
        for name in ("n_users", "journeys_per_user", "items_per_journey"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.vocab_per_journey < 3:
            raise ValueError(
                f"vocab_per_journey must be >= 3 (items sample 3+ terms), got {self.vocab_per_journey}"
            )
        if not (0.0 <= self.shared_vocab_fraction <= 1.0):
            raise ValueError("shared_vocab_fraction must lie in [0, 1]")
        if self.noise_terms_per_item < 0:
            raise ValueError("noise_terms_per_item must be >= 0")
        shared = round(self.shared_vocab_fraction * self.vocab_per_journey)
        if shared >= self.vocab_per_journey:
            raise ValueError("shared pool would leave no journey-specific terms")

    @classmethod
    def from_dict(cls, record: dict) -> "SynthSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(record) - known
        if unknown:
            raise ValueError(f"unknown spec field(s): {sorted(unknown)}")
        return cls(**record)


@dataclass
class SynthCorpus:
    items: list[Item]
    playlists: list[Playlist]
    histories: list[UserHistory]

    def items_by_id(self) -> dict[str, Item]:
        return {item.id: item for item in self.items}


def generate(spec: SynthSpec) -> SynthCorpus:
    """Produce (item corpus, golden playlists, user histories) from a spec.

    Fully deterministic for a fixed spec: the same seed always yields a
    byte-identical corpus.
    """
    rng = np.random.default_rng(spec.seed)
    word_cursor = 0

    def take_words(count: int) -> list[str]:
        nonlocal word_cursor
        words = [_word(i) for i in range(word_cursor, word_cursor + count)]
        word_cursor += count
        return words

    shared_count = round(spec.shared_vocab_fraction * spec.vocab_per_journey)
    shared_pool = take_words(shared_count)
    noise_pool = take_words(NOISE_POOL_SIZE) if spec.noise_terms_per_item else []
    centers = np.zeros((len(FORMAT_WEIGHTS), DENSE_DIM))
    for k in range(len(FORMAT_WEIGHTS)):
        centers[k, k] = FORMAT_SCALE * (k + 1)

    items: list[Item] = []
    playlists: list[Playlist] = []
    histories: list[UserHistory] = []
    for u in range(spec.n_users):
        user_id = f"u{u:03d}"
        journey_drafts: list[list[dict]] = []
        for j in range(spec.journeys_per_user):
            pid = f"{user_id}-j{j}"
            vocab = take_words(spec.vocab_per_journey - shared_count) + shared_pool
            drafts = []
            for k in range(spec.items_per_journey):
                n_terms = int(rng.integers(3, min(6, spec.vocab_per_journey) + 1))
                picks = rng.choice(len(vocab), size=n_terms, replace=False)
                terms = [vocab[p] for p in picks]
                weights = rng.uniform(0.4, 1.0, size=n_terms)
                entries = dict(zip(terms, weights.tolist()))
                if spec.noise_terms_per_item:
                    noise_picks = rng.choice(
                        NOISE_POOL_SIZE, size=spec.noise_terms_per_item, replace=False
                    )
                    noise_weights = rng.uniform(0.4, 1.0, size=spec.noise_terms_per_item)
                    for p, w in zip(noise_picks, noise_weights.tolist()):
                        entries[noise_pool[p]] = w
                fmt = int(rng.choice(len(FORMAT_WEIGHTS), p=FORMAT_WEIGHTS))
                dense = centers[fmt] + rng.normal(0.0, 1.0, size=DENSE_DIM)
                drafts.append(
                    {
                        "id": f"{pid}-i{k:02d}",
                        "title": " ".join(entries.keys()),
                        "concepts": ConceptVector(entries),
                        "dense": tuple(float(x) for x in dense),
                    }
                )
            journey_drafts.append(drafts)
            playlists.append(Playlist(pid, " ".join(vocab[:3]), [d["id"] for d in drafts]))

        mix_rng = random.Random(spec.seed * 1_000_003 + u)
        mixed = riffle(journey_drafts, mix_rng)
        user_items = [
            Item(
                id=draft["id"],
                title=draft["title"],
                timestamp=1_700_000_000 + 60 * pos,
                concepts=draft["concepts"],
                dense=draft["dense"],
            )
            for pos, draft in enumerate(mixed)
        ]
        items.extend(user_items)
        histories.append(UserHistory(user_id, user_items))
    return SynthCorpus(items, playlists, histories)


def save_corpus(corpus: SynthCorpus, out_dir: str | Path) -> None:
    """Write the corpus in the same JSONL formats the CLI ingests."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_items(out / "items.jsonl", corpus.items)
    write_histories(out / "histories.jsonl", corpus.histories)
    write_playlists(out / "playlists.jsonl", corpus.playlists)
