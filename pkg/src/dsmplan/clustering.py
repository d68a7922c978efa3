"""Clustering a DSM to minimize coordination cost.

The objective balances two pressures: big clusters are penalized through the
sum of squared cluster sizes, scattered interactions through the total weight
sitting outside all clusters::

    J = alpha * sum_i size(C_i)^2  +  beta * sum(weights outside clusters)

``size`` is the element count of a cluster, or — in token-sum mode — the
cluster's summed token counts normalized by the mean element token count so
the two modes agree on uniform corpora.

The search is restarted simulated annealing over single-element moves, fully
deterministic for a fixed seed: every restart chain draws from its own
``SeedSequence(seed, chain_index)`` stream, the winner is the lowest cost with
ties to the lowest chain index, and the two trivial assignments (all
singletons, one big cluster) are always scored as explicit candidates so the
result can never be worse than either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from .dsm import Dsm
from .errors import EmptyMatrix, IncompleteAssignment, TooLarge

SIZE_MODE_COUNT = "count"
SIZE_MODE_TOKENS = "tokens"

_BRUTE_FORCE_LIMIT = 10
_COOL_RATIO = 1e-3  # final temperature as a fraction of the initial one


@dataclass(frozen=True)
class ClusterParams:
    alpha: float = 2.0
    beta: float = 1.0
    size_mode: str = SIZE_MODE_COUNT
    max_cluster_tokens: int | None = None
    seed: int = 42
    restarts: int = 32
    iterations_per_restart: int = 2000

    def __post_init__(self) -> None:
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        if self.size_mode not in (SIZE_MODE_COUNT, SIZE_MODE_TOKENS):
            raise ValueError(f"unknown size mode {self.size_mode!r}")
        if self.max_cluster_tokens is not None and self.max_cluster_tokens <= 0:
            raise ValueError("max_cluster_tokens must be positive when set")
        if self.restarts < 1 or self.iterations_per_restart < 0:
            raise ValueError("need at least one restart and non-negative iterations")


@dataclass(frozen=True)
class ClusterAssignment:
    """A complete partition of the elements into clusters 0..num_clusters-1."""

    cluster_of: dict[str, int]
    num_clusters: int
    j_total: float
    j_size_term: float  # raw sum of squared sizes, unweighted by alpha
    j_interaction_term: float  # raw outside-cluster weight, unweighted by beta

    def clusters(self) -> list[list[str]]:
        groups: list[list[str]] = [[] for _ in range(self.num_clusters)]
        for element_id, index in self.cluster_of.items():
            groups[index].append(element_id)
        return groups


def _token_vector(
    dsm: Dsm, token_counts: Mapping[str, int] | None, params: ClusterParams
) -> np.ndarray | None:
    needs_tokens = params.size_mode == SIZE_MODE_TOKENS or params.max_cluster_tokens is not None
    if token_counts is None:
        if needs_tokens:
            raise ValueError("token counts required for token-sum sizing or a token cap")
        return None
    missing = [e for e in dsm.element_ids if e not in token_counts]
    if missing:
        raise IncompleteAssignment(tuple(missing))
    return np.array([token_counts[e] for e in dsm.element_ids], dtype=np.int64)


def _size_sq(labels: np.ndarray, params: ClusterParams, tok: np.ndarray | None) -> float:
    counts: dict[int, float] = {}
    for pos, label in enumerate(labels.tolist()):
        if params.size_mode == SIZE_MODE_COUNT:
            counts[label] = counts.get(label, 0) + 1
        else:
            counts[label] = counts.get(label, 0) + int(tok[pos])  # type: ignore[index]
    if params.size_mode == SIZE_MODE_TOKENS:
        mean = float(np.mean(tok)) if tok is not None and len(tok) else 0.0
        if mean == 0.0:
            return float(len(counts))  # degenerate all-zero corpus: fall back to counts
        return float(sum((c / mean) ** 2 for c in counts.values()))
    return float(sum(c * c for c in counts.values()))


def _interaction(weights: np.ndarray, labels: np.ndarray) -> int:
    outside = labels[:, None] != labels[None, :]
    return int(weights[outside].sum())


def clustering_cost(
    dsm: Dsm,
    assignment: Mapping[str, int],
    params: ClusterParams,
    token_counts: Mapping[str, int] | None = None,
) -> float:
    """Direct-summation cost of a complete assignment (no incremental state).

    This is the ground-truth scorer: the annealer's bookkeeping is always
    re-checked against it before a result is returned.
    """
    missing = tuple(e for e in dsm.element_ids if e not in assignment)
    if missing:
        raise IncompleteAssignment(missing)
    labels = np.array([assignment[e] for e in dsm.element_ids], dtype=np.int64)
    tok = _token_vector(dsm, token_counts, params) if params.size_mode == SIZE_MODE_TOKENS else None
    if params.size_mode == SIZE_MODE_TOKENS and tok is None:
        raise ValueError("token counts required for token-sum sizing")
    size_sq = _size_sq(labels, params, tok)
    interaction = _interaction(dsm.weights, labels)
    return params.alpha * size_sq + params.beta * interaction


def _canonical(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Relabel clusters by first appearance; returns (labels, cluster count)."""
    mapping: dict[int, int] = {}
    out = np.empty_like(labels)
    for pos, label in enumerate(labels.tolist()):
        if label not in mapping:
            mapping[label] = len(mapping)
        out[pos] = mapping[label]
    return out, len(mapping)


def _cap_ok(labels: np.ndarray, tok: np.ndarray | None, cap: int | None) -> bool:
    if cap is None:
        return True
    sums: dict[int, int] = {}
    for pos, label in enumerate(labels.tolist()):
        sums[label] = sums.get(label, 0) + int(tok[pos])  # type: ignore[index]
        if sums[label] > cap:
            return False
    return True


def _anneal_chain(
    sym: np.ndarray,
    params: ClusterParams,
    tok: np.ndarray | None,
    chain_index: int,
) -> np.ndarray:
    """One annealing restart; returns the best label vector seen."""
    n = sym.shape[0]
    rng = np.random.default_rng(np.random.SeedSequence([params.seed, chain_index]))
    cap = params.max_cluster_tokens
    iters = params.iterations_per_restart

    if cap is None:
        labels = rng.integers(0, n, size=n).astype(np.int64)
    else:
        labels = np.arange(n, dtype=np.int64)  # singletons are always cap-feasible here
    count = np.bincount(labels, minlength=n).astype(np.int64)
    toksum = np.zeros(n, dtype=np.int64)
    if tok is not None:
        np.add.at(toksum, labels, tok)
    mean_tok = float(np.mean(tok)) if tok is not None and n else 1.0
    if mean_tok == 0.0:
        mean_tok = 1.0

    # exact integer interaction bookkeeping: I0 = total - intra
    total = int(sym.sum()) // 2
    intra = 0
    seen_members: dict[int, list[int]] = {}
    for pos, label in enumerate(labels.tolist()):
        for other in seen_members.setdefault(label, []):
            intra += int(sym[pos, other])
        seen_members[label].append(pos)
    interaction = total - intra
    size_sq = _size_sq(labels, params, tok)

    # per-element sums of symmetric weight into each cluster, for O(1) deltas
    cluster_weight = np.zeros((n, n), dtype=np.int64)
    for pos in range(n):
        cluster_weight[:, labels[pos]] += sym[:, pos]

    current_j = params.alpha * size_sq + params.beta * interaction
    best_j = current_j
    best_labels = labels.copy()

    if iters == 0 or n < 2:
        return best_labels

    temperature = max(1.0, 0.05 * current_j)
    cool = _COOL_RATIO ** (1.0 / iters)

    picks = rng.integers(0, n, size=iters)
    target_u = rng.random(iters)
    accept_u = rng.random(iters)

    for it in range(iters):
        temperature *= cool
        e = int(picks[it])
        source = int(labels[e])
        targets = [c for c in range(n) if count[c] > 0 and c != source]
        if count[source] > 1:
            for c in range(n):  # lowest free label as the fresh cluster
                if count[c] == 0:
                    targets.append(c)
                    break
        if not targets:
            continue
        target = targets[int(target_u[it] * len(targets))]
        if cap is not None and toksum[target] + tok[e] > cap:  # type: ignore[index]
            continue  # infinite penalty: never even propose acceptance

        d_interaction = int(cluster_weight[e, source] - cluster_weight[e, target])
        if params.size_mode == SIZE_MODE_COUNT:
            d_size = 2 * (int(count[target]) - int(count[source]) + 1)
        else:
            te = tok[e] / mean_tok  # type: ignore[index]
            s_src = toksum[source] / mean_tok
            s_tgt = toksum[target] / mean_tok
            d_size = 2.0 * te * (s_tgt - s_src + te)
        delta = params.alpha * d_size + params.beta * d_interaction

        if delta > 0 and accept_u[it] >= math.exp(-delta / temperature):
            continue

        labels[e] = target
        count[source] -= 1
        count[target] += 1
        if tok is not None:
            toksum[source] -= tok[e]
            toksum[target] += tok[e]
        cluster_weight[:, source] -= sym[:, e]
        cluster_weight[:, target] += sym[:, e]
        interaction += d_interaction
        size_sq += d_size
        current_j = params.alpha * size_sq + params.beta * interaction
        if current_j < best_j:
            best_j = current_j
            best_labels = labels.copy()

    return best_labels


def _finalize(
    dsm: Dsm, labels: np.ndarray, params: ClusterParams, tok: np.ndarray | None
) -> ClusterAssignment:
    canon, num_clusters = _canonical(labels)
    cluster_of = {e: int(canon[k]) for k, e in enumerate(dsm.element_ids)}
    size_sq = _size_sq(canon, params, tok)
    interaction = _interaction(dsm.weights, canon)
    return ClusterAssignment(
        cluster_of=cluster_of,
        num_clusters=num_clusters,
        j_total=params.alpha * size_sq + params.beta * interaction,
        j_size_term=size_sq,
        j_interaction_term=float(interaction),
    )


def cluster(
    dsm: Dsm,
    params: ClusterParams | None = None,
    token_counts: Mapping[str, int] | None = None,
) -> ClusterAssignment:
    """Search for a low-cost clustering of ``dsm``.

    Deterministic for fixed (matrix, params, token_counts).  The returned
    cost is never above the all-singletons or one-big-cluster assignment
    (whenever those respect ``max_cluster_tokens``).
    """
    params = params or ClusterParams()
    n = dsm.n
    if n == 0:
        raise EmptyMatrix()
    tok = _token_vector(dsm, token_counts, params)
    cap = params.max_cluster_tokens
    if cap is not None and tok is not None and int(tok.max(initial=0)) > cap:
        worst = dsm.element_ids[int(tok.argmax())]
        raise ValueError(f"element {worst!r} alone exceeds max_cluster_tokens={cap}")
    if n == 1:
        return _finalize(dsm, np.zeros(1, dtype=np.int64), params, tok)

    sym = dsm.weights + dsm.weights.T

    candidates: list[np.ndarray] = [
        _anneal_chain(sym, params, tok, chain) for chain in range(params.restarts)
    ]
    candidates.append(np.arange(n, dtype=np.int64))  # all singletons
    one_cluster = np.zeros(n, dtype=np.int64)
    if _cap_ok(one_cluster, tok, cap):
        candidates.append(one_cluster)

    best: ClusterAssignment | None = None
    for labels in candidates:
        scored = _finalize(dsm, labels, params, tok)
        if best is None or scored.j_total < best.j_total:
            best = scored
    assert best is not None
    return best


def assignment_from_groups(
    dsm: Dsm,
    groups: Iterable[Iterable[str]],
    params: ClusterParams | None = None,
    token_counts: Mapping[str, int] | None = None,
) -> ClusterAssignment:
    """Score an explicitly given partition, e.g. a hand-made reference grouping.

    ``groups`` must cover every element exactly once.  The result goes through
    the same canonicalization and direct-summation scoring as search results,
    so costs are comparable.
    """
    params = params or ClusterParams()
    if dsm.n == 0:
        raise EmptyMatrix()
    flat: dict[str, int] = {}
    for index, group in enumerate(groups):
        for element_id in group:
            if element_id in flat or element_id not in dsm.element_ids:
                raise ValueError(f"groups must cover each element exactly once; bad id {element_id!r}")
            flat[element_id] = index
    missing = tuple(e for e in dsm.element_ids if e not in flat)
    if missing:
        raise IncompleteAssignment(missing)
    tok = _token_vector(dsm, token_counts, params)
    labels = np.array([flat[e] for e in dsm.element_ids], dtype=np.int64)
    return _finalize(dsm, labels, params, tok)


def _growth_strings(n: int) -> Iterator[tuple[int, ...]]:
    """All canonical assignment vectors of length n, in lexicographic order."""
    if n == 0:
        return
    vector = [0] * n

    def extend(pos: int, max_label: int) -> Iterator[tuple[int, ...]]:
        if pos == n:
            yield tuple(vector)
            return
        for label in range(max_label + 2):
            vector[pos] = label
            yield from extend(pos + 1, max(max_label, label))

    yield from extend(1, 0)


def brute_force_cluster(
    dsm: Dsm,
    params: ClusterParams | None = None,
    token_counts: Mapping[str, int] | None = None,
) -> ClusterAssignment:
    """Exhaustive global optimum over all set partitions (n <= 10 guard).

    Ties resolve to the lexicographically smallest canonical assignment
    vector, which is the first one the enumeration visits.
    """
    params = params or ClusterParams()
    n = dsm.n
    if n == 0:
        raise EmptyMatrix()
    if n > _BRUTE_FORCE_LIMIT:
        raise TooLarge(n, _BRUTE_FORCE_LIMIT)
    tok = _token_vector(dsm, token_counts, params)
    cap = params.max_cluster_tokens

    best_labels: np.ndarray | None = None
    best_j = math.inf
    for vector in _growth_strings(n):
        labels = np.array(vector, dtype=np.int64)
        if not _cap_ok(labels, tok, cap):
            continue
        j = params.alpha * _size_sq(labels, params, tok) + params.beta * _interaction(
            dsm.weights, labels
        )
        if j < best_j:
            best_j = j
            best_labels = labels
    if best_labels is None:
        raise ValueError("no assignment satisfies max_cluster_tokens")
    return _finalize(dsm, best_labels, params, tok)
