"""Linkage learning: mutual information over genotype positions and UPGMA.

MI between two positions is estimated from the empirical joint distribution
of symbol categories in a population slice; the integer symbol code is the
category (so all constants share one category). UPGMA then agglomerates
positions under average-linkage similarity, and the resulting cluster
hierarchy is the family of subsets (FOS) used as crossover masks.
"""

from __future__ import annotations

import numpy as np

from .representation import MultiTreeGenotype, SearchSpace

# FOS subsets are (tree_index, positions) pairs
Subset = tuple[int, np.ndarray]


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def mi_matrix(codes: np.ndarray) -> np.ndarray:
    """Pairwise mutual information between positions, natural log.

    `codes` is an (N, L) matrix of symbol codes for one tree across a
    population slice. The diagonal holds per-position entropy; tiny negative
    rounding is clamped to zero.
    """
    if codes.ndim != 2 or codes.shape[0] == 0:
        raise ValueError("need a non-empty (N, L) code matrix")
    n, size = codes.shape
    ranks = np.empty((size, n), dtype=np.int64)
    n_cats = np.empty(size, dtype=np.int64)
    ent = np.empty(size)
    for i in range(size):
        cats, inv = np.unique(codes[:, i], return_inverse=True)
        ranks[i] = inv
        n_cats[i] = len(cats)
        ent[i] = _entropy(np.bincount(inv))

    mi = np.zeros((size, size))
    np.fill_diagonal(mi, ent)
    for i in range(size):
        if n_cats[i] == 1:
            continue
        for j in range(i + 1, size):
            if n_cats[j] == 1:
                continue
            joint = np.bincount(ranks[i] * n_cats[j] + ranks[j], minlength=n_cats[i] * n_cats[j])
            value = ent[i] + ent[j] - _entropy(joint)
            mi[i, j] = mi[j, i] = max(value, 0.0)
    return mi


def upgma_fos(mi: np.ndarray, tree_index: int, include_root: bool) -> list[Subset]:
    """All singletons plus every UPGMA merge under similarity = MI.

    Average-linkage agglomeration: repeatedly merge the most similar cluster
    pair, breaking ties toward the pair with the lowest contained position
    indices. The root set {0..L-1} is appended only when `include_root`.
    """
    size = mi.shape[0]
    fos: list[Subset] = [(tree_index, np.array([i])) for i in range(size)]
    if size == 1:
        return fos

    clusters: list[list[int]] = [[i] for i in range(size)]
    ids = list(range(size))  # cluster id = lowest contained position
    sim = mi.astype(float).copy()
    sizes = np.ones(size)
    alive = list(range(size))

    while len(alive) > 1:
        idx = np.array(alive)
        iu, ju = np.triu_indices(len(idx), k=1)
        vals = sim[idx[iu], idx[ju]]
        best_pair = None
        for c in np.flatnonzero(vals == vals.max()):
            pa, pb = ids[idx[iu[c]]], ids[idx[ju[c]]]
            lo, hi = (pa, pb) if pa < pb else (pb, pa)
            if best_pair is None or (lo, hi) < best_pair[:2]:
                best_pair = (lo, hi, int(idx[iu[c]]), int(idx[ju[c]]))
        a, b = best_pair[2], best_pair[3]
        if ids[b] < ids[a]:
            a, b = b, a
        merged = sorted(clusters[a] + clusters[b])
        if len(merged) < size or include_root:
            fos.append((tree_index, np.array(merged)))
        # average linkage: weighted mean of the two merged rows
        for c in alive:
            if c in (a, b):
                continue
            sim[a, c] = sim[c, a] = (sizes[a] * sim[a, c] + sizes[b] * sim[b, c]) / (sizes[a] + sizes[b])
        clusters[a] = merged
        sizes[a] += sizes[b]
        alive.remove(b)

    return fos


def tree_fos(genotypes: list[MultiTreeGenotype], tree_index: int, include_root: bool) -> list[Subset]:
    codes = np.stack([g.codes[tree_index] for g in genotypes])
    return upgma_fos(mi_matrix(codes), tree_index, include_root)


def combined_fos(genotypes: list[MultiTreeGenotype], space: SearchSpace, rng=None) -> list[Subset]:
    """Union of per-tree FOSes for one donor pool.

    Every tree except the last contributes its full-tree subset (the UPGMA
    root), so whole subexpressions can be swapped; the top-level tree's root
    set is dropped since swapping a whole individual is a no-op for search.
    The order is shuffled again per GOM application.
    """
    if not genotypes:
        raise ValueError("empty donor pool")
    fos: list[Subset] = []
    last = space.n_trees - 1
    for t in range(space.n_trees):
        fos.extend(tree_fos(genotypes, t, include_root=(t != last)))
    if rng is not None:
        order = rng.permutation(len(fos))
        fos = [fos[i] for i in order]
    return fos
