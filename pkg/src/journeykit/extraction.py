"""Per-user online journey extraction over sparse concept vectors.

One pass over a user's time-ordered history: each item joins the existing
journey it is most similar to (cosine against the journey's running
term-weight sum) when that similarity clears a threshold, and otherwise
starts a new journey. Journeys that end up below the minimum size are
dissolved into a pruned-item list, so singletons never count as journeys.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .concepts import ConceptVector, Item, UserHistory, cosine

__all__ = [
    "ExtractorConfig",
    "JourneyCluster",
    "ExtractionResult",
    "item_journey_sim",
    "extract_journeys",
    "effective_min_size",
]


@dataclass
class ExtractorConfig:
    """Knobs for the online pass.

    epsilon: similarity threshold in [0, 1] for joining an existing journey.
    min_cluster_size: requested minimum journey size; pruning always removes
        at least singletons, so the effective threshold is max(value, 2).
    """

    epsilon: float = 0.1
    min_cluster_size: int = 1

    def __post_init__(self):
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.min_cluster_size < 1:
            raise ValueError(f"min_cluster_size must be >= 1, got {self.min_cluster_size}")


@dataclass
class JourneyCluster:
    """One extracted journey: member item ids plus their aggregate vector."""

    creation_index: int
    members: list[str]
    representation: ConceptVector


@dataclass
class ExtractionResult:
    """Partition of one user's history into journeys and pruned items.

    Every input item id appears exactly once across journeys' members and
    pruned_items. ``cold_items`` counts items a global-cluster method had
    never seen (always 0 for the online extractor).
    """

    user_id: str
    journeys: list[JourneyCluster]
    pruned_items: list[str]
    cold_items: int = 0

    def covered_ids(self) -> list[str]:
        ids = [m for j in self.journeys for m in j.members]
        ids.extend(self.pruned_items)
        return ids


def effective_min_size(min_cluster_size: int) -> int:
    """Pruning floor: singletons are never journeys, so at least 2."""
    return max(min_cluster_size, 2)


def item_journey_sim(item: Item, journey: JourneyCluster) -> float:
    """Similarity between an item and a journey's current representation."""
    return cosine(item.concepts, journey.representation)


class _Run:
    """Mutable per-journey state used only inside one extraction pass."""

    __slots__ = ("created", "members", "rep", "norm")

    def __init__(self, created: int):
        self.created = created
        self.members: list[str] = []
        self.rep: dict[str, float] = {}
        self.norm = 0.0

    def add(self, item: Item) -> None:
        self.members.append(item.id)
        rep = self.rep
        for term, weight in item.concepts.items():
            rep[term] = rep.get(term, 0.0) + weight
        self.norm = math.sqrt(math.fsum(w * w for w in rep.values()))

    def sim(self, vec: ConceptVector) -> float:
        if self.norm == 0.0 or vec.norm == 0.0:
            return 0.0
        rep = self.rep
        dot = math.fsum(w * rep.get(t, 0.0) for t, w in vec.items())
        return min(1.0, max(0.0, dot / (vec.norm * self.norm)))


def extract_journeys(history: UserHistory, cfg: ExtractorConfig) -> ExtractionResult:
    """Run the online pass over one history and prune undersized journeys.

    Items are processed in sequence order (the caller sorts by timestamp;
    ties keep input order). Assignment compares against each journey's
    representation as it stands before the current item is added; argmax
    ties resolve to the oldest journey. Items with an empty concept vector
    carry no semantic evidence and always start a new journey.
    """
    seen: set[str] = set()
    for item in history.items:
        if item.id in seen:
            raise ValueError(f"history {history.user_id!r}: duplicate item id {item.id!r}")
        seen.add(item.id)

    runs: list[_Run] = []
    for item in history.items:
        vec = item.concepts
        target: _Run | None = None
        if vec:
            best_sim = -1.0
            for run in runs:
                sim = run.sim(vec)
                if sim > best_sim:
                    best_sim = sim
                    target = run
            if target is None or best_sim < cfg.epsilon:
                target = None
        if target is None:
            target = _Run(len(runs))
            runs.append(target)
        target.add(item)

    floor = effective_min_size(cfg.min_cluster_size)
    journeys: list[JourneyCluster] = []
    pruned: list[str] = []
    for run in runs:
        if len(run.members) >= floor:
            journeys.append(JourneyCluster(run.created, run.members, ConceptVector(run.rep)))
        else:
            pruned.extend(run.members)
    return ExtractionResult(history.user_id, journeys, pruned)
