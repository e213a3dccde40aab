"""Population clustering in normalized objective space.

Three strategies share the k-leader-means core:

* original  - donor clusters of the 2n/k nearest individuals per center;
              membership from donor sets with random assignment of leftovers
              and random tie-breaks.
* bkrr      - balanced round-robin: centers are kept, memberships rebuilt by
              letting clusters claim their nearest unassigned individual in
              per-round shuffled order, giving sizes within 1 of n/k.
* bkmrr     - per objective, the top n/k individuals are carved off into a
              true extreme cluster first; the remainder is clustered by bkrr
              with k-m clusters.

Extreme clusters get single-objective acceptance during mixing; middle
clusters use the multi-objective rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KMEANS_TOL = 1e-9
KMEANS_MAX_ITER = 100

MIDDLE = "middle"
EXTREME = "extreme"


@dataclass
class Cluster:
    center: np.ndarray
    members: np.ndarray
    donors: np.ndarray
    kind: str = MIDDLE
    objective: int | None = None


@dataclass
class ClusteringResult:
    clusters: list[Cluster]
    assignment: np.ndarray
    objective_order: np.ndarray | None = None

    @property
    def k(self) -> int:
        return len(self.clusters)


def normalize(values: np.ndarray) -> np.ndarray:
    """Per-objective min-max scaling to [0, 1]; zero-range objectives map to 0."""
    lo = values.min(axis=0)
    span = values.max(axis=0) - lo
    out = np.zeros_like(values, dtype=float)
    ok = span > 0
    out[:, ok] = (values[:, ok] - lo[ok]) / span[ok]
    return out


def prepared_points(values: np.ndarray, valid: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Normalized objective points with invalid rows pinned to the worst corner."""
    values = np.array(values, dtype=float)
    if not valid.any():
        return np.zeros_like(values)
    for j in range(values.shape[1]):
        col = values[valid, j]
        worst = col.min() if directions[j] > 0 else col.max()
        values[~valid, j] = worst
    return normalize(values)


def _best_index(points: np.ndarray, objective: int, direction: int) -> int:
    col = points[:, objective]
    return int(np.argmax(col) if direction > 0 else np.argmin(col))


def leaders_kmeans(points: np.ndarray, k: int, directions: np.ndarray, rng) -> tuple[np.ndarray, np.ndarray]:
    """k-leader initialization followed by Lloyd's k-means.

    The first leader is the best point in a uniformly random objective;
    the rest greedily maximize the distance to their nearest leader.
    Returns (centers, assignment).
    """
    n = points.shape[0]
    if k > n:
        raise ValueError(f"cannot form {k} clusters from {n} points")
    first_obj = int(rng.integers(points.shape[1]))
    leaders = [_best_index(points, first_obj, int(directions[first_obj]))]
    dist = np.linalg.norm(points - points[leaders[0]], axis=1)
    while len(leaders) < k:
        nxt = int(np.argmax(dist))
        leaders.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(points - points[nxt], axis=1))

    centers = points[leaders].astype(float).copy()
    assignment = np.zeros(n, dtype=np.int64)
    for _ in range(KMEANS_MAX_ITER):
        d = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2)
        assignment = d.argmin(axis=1)
        moved = 0.0
        for c in range(k):
            sel = assignment == c
            if sel.any():
                new = points[sel].mean(axis=0)
                moved = max(moved, float(np.linalg.norm(new - centers[c])))
                centers[c] = new
        if moved < KMEANS_TOL:
            break
    return centers, assignment


def _identify_extremes(clusters: list[Cluster], directions: np.ndarray) -> None:
    """Mark, per objective, the cluster with the best center as extreme.

    Objectives are processed in index order; a cluster already claimed stays
    with its first objective, and ties break toward the lowest cluster index.
    """
    taken: set[int] = set()
    for j, direction in enumerate(directions):
        best, best_val = None, None
        for ci, cl in enumerate(clusters):
            if ci in taken:
                continue
            v = cl.center[j] * direction
            if best_val is None or v > best_val:
                best, best_val = ci, v
        clusters[best].kind = EXTREME
        clusters[best].objective = j
        taken.add(best)


def cluster_original(values, valid, directions, k: int, rng) -> ClusteringResult:
    """Donor-cluster strategy: 2n/k nearest individuals per center form the
    donor pool; final memberships resolve leftover/multiple assignments
    uniformly at random."""
    points = prepared_points(values, valid, directions)
    n = points.shape[0]
    if n < k:
        raise ValueError("population smaller than cluster count")
    centers, _ = leaders_kmeans(points, k, directions, rng)
    donor_size = (2 * n) // k
    d = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2)
    donor_sets = [np.sort(np.argsort(d[:, c], kind="stable")[:donor_size]) for c in range(k)]

    in_donor = np.zeros((n, k), dtype=bool)
    for c, ds in enumerate(donor_sets):
        in_donor[ds, c] = True
    counts = in_donor.sum(axis=1)
    assignment = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        if counts[i] == 0:
            assignment[i] = int(rng.integers(k))
        elif counts[i] == 1:
            assignment[i] = int(np.flatnonzero(in_donor[i])[0])
        else:
            owners = np.flatnonzero(in_donor[i])
            assignment[i] = int(owners[int(rng.integers(len(owners)))])
    membership_of: list[list[int]] = [[] for _ in range(k)]
    for i in range(n):
        membership_of[assignment[i]].append(i)

    clusters = [
        Cluster(centers[c], np.array(membership_of[c], dtype=np.int64), donor_sets[c])
        for c in range(k)
    ]
    _identify_extremes(clusters, directions)
    return ClusteringResult(clusters, assignment)


def _round_robin(points: np.ndarray, centers: np.ndarray, pool: np.ndarray, rng) -> list[np.ndarray]:
    """Clusters claim their nearest unassigned individual, round by round,
    shuffling the cluster order each round; centers stay frozen."""
    k = centers.shape[0]
    order_by_center = []
    for c in range(k):
        d = np.linalg.norm(points[pool] - centers[c], axis=1)
        order_by_center.append(pool[np.argsort(d, kind="stable")])
    cursor = np.zeros(k, dtype=np.int64)
    assigned = set()
    members: list[list[int]] = [[] for _ in range(k)]
    remaining = len(pool)
    while remaining > 0:
        for c in rng.permutation(k):
            if remaining == 0:
                break
            queue = order_by_center[c]
            idx = cursor[c]
            while idx < len(queue) and int(queue[idx]) in assigned:
                idx += 1
            cursor[c] = idx + 1
            pick = int(queue[idx])
            assigned.add(pick)
            members[c].append(pick)
            remaining -= 1
    return [np.array(sorted(m), dtype=np.int64) for m in members]


def cluster_bkrr(values, valid, directions, k: int, rng) -> ClusteringResult:
    """Balanced round-robin clustering; donors are the members themselves."""
    points = prepared_points(values, valid, directions)
    n = points.shape[0]
    if n < k:
        raise ValueError("population smaller than cluster count")
    centers, _ = leaders_kmeans(points, k, directions, rng)
    members = _round_robin(points, centers, np.arange(n), rng)
    clusters = [Cluster(centers[c], members[c], members[c]) for c in range(k)]
    _identify_extremes(clusters, directions)
    assignment = np.empty(n, dtype=np.int64)
    for c, m in enumerate(members):
        assignment[m] = c
    return ClusteringResult(clusters, assignment)


def cluster_bkmrr(values, valid, directions, k: int, rng) -> ClusteringResult:
    """Carve one true extreme cluster of the top n/k per objective, then
    cluster the remainder with bkrr over k-m clusters."""
    values = np.asarray(values, dtype=float)
    m_obj = values.shape[1]
    if k <= m_obj:
        raise ValueError("bkmrr needs more clusters than objectives")
    points = prepared_points(values, valid, directions)
    n = points.shape[0]
    if n < k:
        raise ValueError("population smaller than cluster count")
    take = n // k

    objective_order = rng.permutation(m_obj)
    pool = np.arange(n)
    extreme_clusters: list[Cluster] = []
    for j in objective_order:
        oriented = points[pool, j] * directions[j]
        # best first; ties break toward the lower individual index
        ranked = pool[np.argsort(-oriented, kind="stable")]
        chosen = np.sort(ranked[:take])
        extreme_clusters.append(
            Cluster(points[chosen].mean(axis=0), chosen, chosen, EXTREME, int(j))
        )
        keep = np.ones(len(pool), dtype=bool)
        keep[np.searchsorted(pool, chosen)] = False
        pool = pool[keep]

    sub_k = k - m_obj
    centers, _ = leaders_kmeans(points[pool], sub_k, directions, rng)
    rel_members = _round_robin(points[pool], centers, np.arange(len(pool)), rng)
    middle_clusters = [
        Cluster(centers[c], pool[rel_members[c]], pool[rel_members[c]]) for c in range(sub_k)
    ]

    clusters = extreme_clusters + middle_clusters
    assignment = np.empty(n, dtype=np.int64)
    for c, cl in enumerate(clusters):
        assignment[cl.members] = c
    return ClusteringResult(clusters, assignment, objective_order=objective_order)


def no_clustering(values, valid, directions) -> ClusteringResult:
    """Single middle cluster holding everyone; MO acceptance for all."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    everyone = np.arange(n)
    points = prepared_points(values, valid, directions)
    center = points.mean(axis=0) if n else np.zeros(values.shape[1])
    return ClusteringResult([Cluster(center, everyone, everyone)], np.zeros(n, dtype=np.int64))
