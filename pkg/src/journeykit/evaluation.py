"""Golden-playlist evaluation: mixing, cluster matching, and metrics.

The benchmark mixes a handful of curated playlists into one synthetic noisy
history per user; an extractor then has to pull the playlists back apart.
Extracted clusters are attributed to golden journeys by overlap, and the
report carries recall, precision, and granularity statistics.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Collection, Sequence

from .concepts import Item, UserHistory
from .extraction import ExtractionResult

__all__ = [
    "GoldenInstance",
    "EvalReport",
    "riffle",
    "mix_playlists",
    "match_clusters",
    "recall",
    "precision",
    "clusters_per_journey",
    "granularity_stats",
    "build_report",
]

Golden = Sequence[tuple[str, Sequence[str]]]


@dataclass
class GoldenInstance:
    """One synthetic user: golden playlists plus their shuffled-together mix."""

    user_id: str
    golden: list[tuple[str, list[str]]]
    mixed_history: UserHistory
    seed: int


@dataclass
class EvalReport:
    """Metrics for one extraction method over one dataset.

    ``mean_recall``, ``mean_precision``, and ``clusters_per_journey`` are
    None when no golden labels exist (granularity-only runs).
    """

    method: str
    mean_recall: float | None
    mean_precision: float | None
    total_journeys: int
    clusters_per_journey: float | None
    journeys_per_user: float
    singleton_fraction: float
    items_per_journey: dict[str, float]

    def __post_init__(self):
        for name in ("mean_recall", "mean_precision", "singleton_fraction"):
            value = getattr(self, name)
            if value is not None and not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.clusters_per_journey is not None and self.clusters_per_journey < 0:
            raise ValueError("clusters_per_journey must be >= 0")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "mean_recall": self.mean_recall,
            "mean_precision": self.mean_precision,
            "total_journeys": self.total_journeys,
            "clusters_per_journey": self.clusters_per_journey,
            "journeys_per_user": self.journeys_per_user,
            "singleton_fraction": self.singleton_fraction,
            "items_per_journey": self.items_per_journey,
        }


def riffle(sequences: Sequence[Sequence], rng: random.Random) -> list:
    """Uniform order-preserving interleave of several sequences.

    At each step the next element is drawn from a sequence with probability
    proportional to how many elements it still holds, which makes every
    interleaving equally likely while keeping each sequence's own order.
    """
    cursors = [0] * len(sequences)
    remaining = sum(len(s) for s in sequences)
    out: list = []
    while remaining:
        pick = rng.random() * remaining
        for idx, seq in enumerate(sequences):
            left = len(seq) - cursors[idx]
            if pick < left:
                out.append(seq[cursors[idx]])
                cursors[idx] += 1
                break
            pick -= left
        remaining -= 1
    return out


def mix_playlists(
    playlists: Sequence[tuple[str, Sequence[Item]]],
    per_user: int = 2,
    seed: int = 0,
    n_instances: int | None = None,
) -> list[GoldenInstance]:
    """Build golden instances by sampling and riffling playlists together.

    With ``n_instances`` unset, a seeded shuffle partitions the pool into
    floor(len/per_user) disjoint instances; otherwise each instance samples
    ``per_user`` distinct playlists from the full pool.
    """
    if per_user < 2:
        raise ValueError(f"per_user must be >= 2, got {per_user}")
    if len(playlists) < per_user:
        raise ValueError(
            f"need at least {per_user} playlists, got {len(playlists)}"
        )
    rng = random.Random(seed)
    chosen_sets: list[list[int]] = []
    if n_instances is None:
        order = list(range(len(playlists)))
        rng.shuffle(order)
        for start in range(0, len(order) - per_user + 1, per_user):
            chosen_sets.append(order[start : start + per_user])
    else:
        for _ in range(n_instances):
            chosen_sets.append(rng.sample(range(len(playlists)), per_user))

    instances: list[GoldenInstance] = []
    for k, chosen in enumerate(chosen_sets):
        inst_seed = rng.getrandbits(32)
        inst_rng = random.Random(inst_seed)
        picked = [playlists[c] for c in chosen]
        mixed = riffle([list(items) for _, items in picked], inst_rng)
        user_id = f"mix-{k:04d}"
        golden = [(pid, [it.id for it in items]) for pid, items in picked]
        instances.append(
            GoldenInstance(user_id, golden, UserHistory(user_id, mixed), inst_seed)
        )
    return instances


def _attribute(
    golden: Golden, extracted: Sequence[Collection[str]]
) -> list[tuple[str, int]]:
    """Per extracted cluster: (attributed journey id, overlap with it).

    Ties go to the journey with the larger overlap, then more total items,
    then the lexicographically lower id.
    """
    golden_sets = [(jid, set(ids), len(ids)) for jid, ids in golden]
    out: list[tuple[str, int]] = []
    for cluster in extracted:
        members = set(cluster)
        best = min(
            golden_sets,
            key=lambda g: (-len(members & g[1]), -g[2], g[0]),
        )
        out.append((best[0], len(members & best[1])))
    return out


def match_clusters(
    golden: Golden, extracted: Sequence[Collection[str]]
) -> dict[str, list[tuple[int, int]]]:
    """Map each golden journey id to its attributed clusters.

    Values are (cluster index, overlap) pairs sorted by descending overlap
    then cluster index; the first entry is the journey's best cluster.
    """
    if not golden:
        return {}
    attribution = _attribute(golden, extracted)
    out: dict[str, list[tuple[int, int]]] = {jid: [] for jid, _ in golden}
    for idx, (jid, overlap) in enumerate(attribution):
        out[jid].append((idx, overlap))
    for jid in out:
        out[jid].sort(key=lambda pair: (-pair[1], pair[0]))
    return out


def recall(golden: Golden, extracted: Sequence[Collection[str]]) -> float:
    """Mean over golden journeys of best-cluster overlap / journey size."""
    if not golden:
        raise ValueError("golden journey set must be non-empty")
    matches = match_clusters(golden, extracted)
    scores = []
    for jid, ids in golden:
        best = matches[jid][0][1] if matches[jid] else 0
        scores.append(best / len(ids))
    return math.fsum(scores) / len(scores)


def precision(golden: Golden, extracted: Sequence[Collection[str]]) -> float:
    """Item-weighted purity: fraction of clustered items that sit in their
    cluster's attributed golden journey. Zero when nothing was extracted."""
    if not extracted or not golden:
        return 0.0
    attribution = _attribute(golden, extracted)
    total = sum(len(c) for c in extracted)
    correct = sum(overlap for _, overlap in attribution)
    return correct / total if total else 0.0


def clusters_per_journey(golden: Golden, extracted: Sequence[Collection[str]]) -> float:
    """Mean number of extracted clusters attributed to each golden journey."""
    if not golden:
        raise ValueError("golden journey set must be non-empty")
    matches = match_clusters(golden, extracted)
    return math.fsum(len(v) for v in matches.values()) / len(matches)


def _size_summary(sizes: Sequence[int]) -> dict[str, float]:
    if not sizes:
        return {"min": 0.0, "median": 0.0, "mean": 0.0, "max": 0.0}
    ordered = sorted(sizes)
    n = len(ordered)
    median = (
        float(ordered[n // 2])
        if n % 2
        else (ordered[n // 2 - 1] + ordered[n // 2]) / 2.0
    )
    return {
        "min": float(ordered[0]),
        "median": median,
        "mean": math.fsum(ordered) / n,
        "max": float(ordered[-1]),
    }


def granularity_stats(
    results: Sequence[ExtractionResult], min_size: int = 2, method: str = ""
) -> EvalReport:
    """Granularity statistics over per-user extraction results.

    Expects results extracted at the default pruning floor (2), where every
    pruned item was a singleton cluster; ``min_size`` then re-thresholds the
    surviving journeys for the per-user journey counts and size summary.
    """
    if not results:
        raise ValueError("results must be non-empty")
    singleton_fractions = []
    journeys_per_user_counts = []
    sizes: list[int] = []
    total = 0
    for res in results:
        n_items = len(res.pruned_items) + sum(len(j.members) for j in res.journeys)
        singleton_fractions.append(
            len(res.pruned_items) / n_items if n_items else 0.0
        )
        kept = [j for j in res.journeys if len(j.members) >= min_size]
        journeys_per_user_counts.append(len(kept))
        sizes.extend(len(j.members) for j in kept)
        total += len(kept)
    return EvalReport(
        method=method,
        mean_recall=None,
        mean_precision=None,
        total_journeys=total,
        clusters_per_journey=None,
        journeys_per_user=math.fsum(journeys_per_user_counts) / len(results),
        singleton_fraction=math.fsum(singleton_fractions) / len(results),
        items_per_journey=_size_summary(sizes),
    )


def build_report(
    method: str,
    pairs: Sequence[tuple[Golden, ExtractionResult]],
    min_size: int = 2,
) -> EvalReport:
    """Full report for one method over golden-labelled extraction results.

    Recall, precision, and clusters-per-journey are averaged per user and
    then over users; totals and the size summary pool all journeys.
    """
    if not pairs:
        raise ValueError("pairs must be non-empty")
    recalls, precisions, cpjs = [], [], []
    for golden, result in pairs:
        clusters = [j.members for j in result.journeys]
        recalls.append(recall(golden, clusters))
        precisions.append(precision(golden, clusters))
        cpjs.append(clusters_per_journey(golden, clusters))
    stats = granularity_stats([r for _, r in pairs], min_size=min_size, method=method)
    n = len(pairs)
    return EvalReport(
        method=method,
        mean_recall=math.fsum(recalls) / n,
        mean_precision=math.fsum(precisions) / n,
        total_journeys=stats.total_journeys,
        clusters_per_journey=math.fsum(cpjs) / n,
        journeys_per_user=stats.journeys_per_user,
        singleton_fraction=stats.singleton_fraction,
        items_per_journey=stats.items_per_journey,
    )
