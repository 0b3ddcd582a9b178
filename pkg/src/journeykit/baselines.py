"""Non-personalized baselines: global clusters reused as per-user journeys.

Two strategies for partitioning the whole item corpus, each restricted to a
single user's history at extraction time:

* co-occurrence route: count consecutive interactions, factorize the damped
  count matrix into low-rank item embeddings, k-means them into K global
  clusters, and split each history by cluster id;
* dense-similarity route: a one-pass micro/macro agglomerative clustering of
  dense item embeddings, where micro-clusters that repeatedly compete for
  the same item get their macro-clusters merged.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .concepts import Item, UserHistory, aggregate
from .extraction import ExtractionResult, JourneyCluster, effective_min_size

__all__ = [
    "CoocMatrix",
    "GlobalAssignment",
    "build_cooccurrence",
    "factorize",
    "kmeans",
    "cooc_extract",
    "multimodal_extract",
    "default_eps_dist",
]


@dataclass
class CoocMatrix:
    """Symmetric consecutive-interaction counts with an id<->row bijection."""

    ids: list[str]
    index: dict[str, int]
    counts: np.ndarray  # (n, n) int64, symmetric, zero diagonal


@dataclass
class GlobalAssignment:
    """Corpus-wide clustering: every item id mapped to a cluster in [0, K)."""

    K: int
    centroid_dim: int
    assignment: dict[str, int]


def build_cooccurrence(histories: Sequence[UserHistory]) -> CoocMatrix:
    """Count consecutive same-user pairs; (i, j) and (j, i) both increment."""
    ids: list[str] = []
    index: dict[str, int] = {}
    for history in histories:
        for item in history.items:
            if item.id not in index:
                index[item.id] = len(ids)
                ids.append(item.id)
    counts = np.zeros((len(ids), len(ids)), dtype=np.int64)
    for history in histories:
        seq = history.items
        for prev, nxt in zip(seq, seq[1:]):
            if prev.id == nxt.id:
                continue
            i, j = index[prev.id], index[nxt.id]
            counts[i, j] += 1
            counts[j, i] += 1
    return CoocMatrix(ids, index, counts)


def _factorize_trace(
    matrix: CoocMatrix, dim: int, iters: int, seed: int
) -> tuple[np.ndarray, list[float]]:
    n = len(matrix.ids)
    if n == 0:
        raise ValueError("cannot factorize an empty matrix")
    if not 1 <= dim <= n:
        raise ValueError(f"dim must be in [1, {n}], got {dim}")
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    a = np.log1p(matrix.counts.astype(np.float64))
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, dim)))

    def residual(basis: np.ndarray) -> float:
        core = basis.T @ a @ basis
        return float(np.linalg.norm(a - basis @ core @ basis.T))

    best_q, best_err = q, residual(q)
    errors = [best_err]
    for _ in range(iters):
        q, _ = np.linalg.qr(a @ q)
        err = residual(q)
        if err < best_err:
            best_q, best_err = q, err
        errors.append(best_err)

    core = best_q.T @ a @ best_q
    eigvals, eigvecs = np.linalg.eigh(core)
    order = np.argsort(-np.abs(eigvals))
    scale = np.sqrt(np.abs(eigvals[order]))
    embeddings = best_q @ (eigvecs[:, order] * scale)
    return embeddings, errors


def factorize(
    matrix: CoocMatrix, dim: int, iters: int = 20, seed: int = 0
) -> dict[str, np.ndarray]:
    """Low-rank symmetric factorization of ln(1 + counts) into item embeddings.

    Seeded randomized subspace iteration keeps the best basis seen, so the
    retained reconstruction error never increases across iterations.
    """
    embeddings, _ = _factorize_trace(matrix, dim, iters, seed)
    return {item_id: embeddings[i].copy() for i, item_id in enumerate(matrix.ids)}


def _kmeans_trace(
    points: np.ndarray, k: int, max_iters: int, seed: int
) -> tuple[np.ndarray, list[float]]:
    n = points.shape[0]
    rng = np.random.default_rng(seed)

    # k-means++ seeding
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = points[first]
    closest = ((points - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            pick = int(rng.integers(n))
        else:
            pick = int(rng.choice(n, p=closest / total))
        centroids[c] = points[pick]
        closest = np.minimum(closest, ((points - centroids[c]) ** 2).sum(axis=1))

    labels: np.ndarray | None = None
    objectives: list[float] = []
    for _ in range(max_iters):
        dist2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = dist2.argmin(axis=1)  # argmin picks the lowest cluster id on ties
        objectives.append(float(dist2[np.arange(n), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            mask = labels == c
            if mask.any():
                centroids[c] = points[mask].mean(axis=0)
            # empty clusters keep their previous centroid
    assert labels is not None
    return labels, objectives


def kmeans(
    embeddings: Mapping[str, np.ndarray | Sequence[float]],
    k: int,
    max_iters: int = 100,
    seed: int = 0,
) -> GlobalAssignment:
    """Lloyd's iterations with k-means++ seeding over an id->vector map.

    Stops when assignments stabilize or at max_iters; points tie-break to
    the lowest cluster id. Deterministic for a fixed seed.
    """
    ids = sorted(embeddings)
    n = len(ids)
    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")
    if k > n:
        raise ValueError(f"K ({k}) exceeds the number of points ({n})")
    points = np.asarray([np.asarray(embeddings[i], dtype=np.float64) for i in ids])
    labels, _ = _kmeans_trace(points, k, max_iters, seed)
    return GlobalAssignment(
        K=k,
        centroid_dim=int(points.shape[1]),
        assignment={item_id: int(labels[i]) for i, item_id in enumerate(ids)},
    )


def _build_result(
    user_id: str,
    groups: list[list[Item]],
    min_cluster_size: int,
    cold_items: int = 0,
) -> ExtractionResult:
    floor = effective_min_size(min_cluster_size)
    journeys: list[JourneyCluster] = []
    pruned: list[str] = []
    for created, members in enumerate(groups):
        if len(members) >= floor:
            rep = aggregate(item.concepts for item in members)
            journeys.append(JourneyCluster(created, [it.id for it in members], rep))
        else:
            pruned.extend(it.id for it in members)
    return ExtractionResult(user_id, journeys, pruned, cold_items=cold_items)


def cooc_extract(
    history: UserHistory,
    assignment: GlobalAssignment,
    min_cluster_size: int = 1,
) -> ExtractionResult:
    """Partition one history by global cluster id.

    Groups are created in order of first appearance in the history. Items
    the assignment has never seen (cold items) become their own singleton
    groups and are counted in ``cold_items``.
    """
    seen: set[str] = set()
    for item in history.items:
        if item.id in seen:
            raise ValueError(f"history {history.user_id!r}: duplicate item id {item.id!r}")
        seen.add(item.id)

    groups: dict[object, list[Item]] = {}
    order: list[object] = []
    cold = 0
    for item in history.items:
        cluster = assignment.assignment.get(item.id)
        key: object = ("cold", item.id) if cluster is None else ("cluster", cluster)
        if cluster is None:
            cold += 1
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(item)
    return _build_result(history.user_id, [groups[k] for k in order], min_cluster_size, cold)


class _UnionFind:
    def __init__(self):
        self.parent: list[int] = []

    def add(self) -> int:
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def multimodal_extract(
    items: Sequence[Item],
    eps_dist: float,
    merge_conflicts: int = 3,
    min_cluster_size: int = 1,
    user_id: str = "",
) -> ExtractionResult:
    """One-pass micro/macro agglomerative clustering of dense embeddings.

    Each item joins the nearest micro-cluster within ``eps_dist`` (running
    mean centroid) or starts a new one. Whenever an item sits within range
    of two or more micro-clusters, each such pair accrues one conflict;
    a pair reaching ``merge_conflicts`` gets its macro-clusters merged.
    Macro-clusters become the journeys, pruned below the usual floor.
    """
    if eps_dist <= 0.0 or not np.isfinite(eps_dist):
        raise ValueError(f"eps_dist must be a positive finite number, got {eps_dist}")
    if merge_conflicts < 1:
        raise ValueError(f"merge_conflicts must be >= 1, got {merge_conflicts}")
    vectors = []
    seen: set[str] = set()
    for item in items:
        if item.dense is None:
            raise ValueError(f"item {item.id!r} has no dense embedding")
        if item.id in seen:
            raise ValueError(f"duplicate item id {item.id!r}")
        seen.add(item.id)
        vectors.append(np.asarray(item.dense, dtype=np.float64))
    lengths = {v.shape[0] for v in vectors}
    if len(lengths) > 1:
        raise ValueError(f"mixed dense embedding lengths: {sorted(lengths)}")

    centroids: list[np.ndarray] = []
    sizes: list[int] = []
    micro_of_item: list[int] = []
    conflicts: Counter[tuple[int, int]] = Counter()
    macros = _UnionFind()

    for vec in vectors:
        in_range: list[int] = []
        nearest = -1
        nearest_dist = np.inf
        for m, centroid in enumerate(centroids):
            dist = float(np.linalg.norm(vec - centroid))
            if dist <= eps_dist:
                in_range.append(m)
                if dist < nearest_dist:
                    nearest_dist = dist
                    nearest = m
        if nearest < 0:
            micro = macros.add()
            centroids.append(vec.copy())
            sizes.append(1)
        else:
            micro = nearest
            sizes[micro] += 1
            centroids[micro] += (vec - centroids[micro]) / sizes[micro]
        micro_of_item.append(micro)
        if len(in_range) >= 2:
            for a_idx in range(len(in_range)):
                for b_idx in range(a_idx + 1, len(in_range)):
                    pair = (in_range[a_idx], in_range[b_idx])
                    conflicts[pair] += 1
                    if conflicts[pair] == merge_conflicts:
                        macros.union(*pair)

    groups: dict[int, list[Item]] = {}
    order: list[int] = []
    for item, micro in zip(items, micro_of_item):
        root = macros.find(micro)
        if root not in groups:
            groups[root] = []
            order.append(root)
        groups[root].append(item)
    return _build_result(user_id, [groups[r] for r in order], min_cluster_size)


def default_eps_dist(
    items: Iterable[Item], seed: int = 0, sample_pairs: int = 1000
) -> float:
    """Median pairwise distance over a seeded sample of item pairs."""
    vectors = [np.asarray(it.dense, dtype=np.float64) for it in items if it.dense is not None]
    if len(vectors) < 2:
        raise ValueError("need at least two items with dense embeddings")
    rng = np.random.default_rng(seed)
    n = len(vectors)
    dists = np.empty(sample_pairs)
    for s in range(sample_pairs):
        i = int(rng.integers(n))
        j = int(rng.integers(n - 1))
        if j >= i:
            j += 1
        dists[s] = np.linalg.norm(vectors[i] - vectors[j])
    return float(np.median(dists))
