"""Per-sample cost reduction: compiled witness views, coalition-result
caching, static stratum pruning, and quantile binning of relation vectors.

A compiled view stores one row per satisfying join combination of the full
instance together with that combination's aggregate term.  Evaluating a
coalition then reduces to scanning rows and keeping those whose witnesses
are present, which the kernel backends do orders of magnitude faster than
re-running the join.  Row order is the same canonical order used by the
naive evaluator, so both paths sum identical terms in an identical order
and agree bit-exactly.
"""

from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from math import comb
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import CapacityError, DomainError
from .provenance import EndogenousPartition
from .relcore import (
    DatabaseInstance,
    Mask,
    QuerySpec,
    bind,
    canonical_key,
    iter_combinations,
)

__all__ = [
    "CompiledView",
    "compile_view",
    "eval_compiled",
    "PlayerMaskEvaluator",
    "CoalitionCache",
    "cached_eval",
    "prune_strata",
    "StratumGroup",
    "bin_strata",
    "DEFAULT_CACHE_CAPACITY",
    "DEFAULT_VIEW_CAP",
]

DEFAULT_CACHE_CAPACITY = 1 << 20
DEFAULT_VIEW_CAP = 1_000_000

_KIND_CODE = {"sum": 0, "count": 1, "exists": 2}


@dataclass(frozen=True)
class CompiledView:
    """Witness rows of the full instance with per-row aggregate terms."""

    relations: tuple[str, ...]
    endogenous: tuple[bool, ...]
    witness_ids: tuple[tuple[str, ...], ...]
    terms: tuple[float, ...]
    kind: str

    @property
    def row_count(self) -> int:
        return len(self.witness_ids)

    def total(self) -> float:
        """Value with every witness present (mask = None)."""
        return eval_compiled(self, None)


def compile_view(
    query: QuerySpec, instance: DatabaseInstance, max_rows: int = DEFAULT_VIEW_CAP
) -> CompiledView:
    """Materialize all satisfying join combinations with their terms.

    Rows come out in the canonical combination order shared with the naive
    evaluator.  Raises CapacityError above ``max_rows`` (use the naive
    evaluator for such queries).
    """
    binding = bind(query, instance)
    kind = binding.kind
    rows = []
    for idxs, combo_rows in iter_combinations(binding, None):
        if len(rows) >= max_rows:
            raise CapacityError(
                f"compiled view exceeds {max_rows} rows; use the naive evaluator"
            )
        term = float(binding.term_fn(combo_rows)) if kind == "sum" else 1.0
        rows.append((canonical_key(binding, idxs), idxs, term))
    rows.sort(key=lambda r: r[0])
    witness_ids = tuple(
        tuple(binding.rels[p].ids[idxs[p]] for p in range(len(binding.rels)))
        for _, idxs, _ in rows
    )
    terms = tuple(term for _, _, term in rows)
    return CompiledView(
        relations=tuple(query.relations),
        endogenous=tuple(rel.endogenous for rel in binding.rels),
        witness_ids=witness_ids,
        terms=terms,
        kind=kind,
    )


def eval_compiled(view: CompiledView, mask: Mask) -> float:
    """Aggregate over rows whose every witness is present under the mask.

    Witnesses of relations absent from the mask count as present (the
    exogenous default), matching relcore.evaluate on the same mask.
    """
    restricted = (
        [(p, frozenset(mask[rel])) for p, rel in enumerate(view.relations) if rel in mask]
        if mask
        else []
    )

    def present(ws: tuple[str, ...]) -> bool:
        return all(ws[p] in ids for p, ids in restricted)

    if view.kind == "exists":
        return 1.0 if any(present(ws) for ws in view.witness_ids) else 0.0
    if view.kind == "count":
        return float(sum(1 for ws in view.witness_ids if present(ws)))
    acc = 0.0
    for ws, term in zip(view.witness_ids, view.terms):
        if present(ws):
            acc += term
    return acc


class PlayerMaskEvaluator:
    """View evaluation against coalition bit masks via the kernel backend.

    Bound to an endogenous partition: each row's endogenous witnesses map to
    player bit positions once, after which evaluating a coalition is a single
    kernel call.  Exogenous witnesses are always present and drop out of the
    row check entirely.
    """

    def __init__(
        self,
        view: CompiledView,
        partition: EndogenousPartition,
        backend: str | None = None,
    ):
        self.backend = backend or kernels.BACKEND
        self.kind_code = _KIND_CODE[view.kind]
        endo_pos = [p for p, e in enumerate(view.endogenous) if e]
        rows = [
            tuple(partition.player_index(ws[p]) for p in endo_pos)
            for ws in view.witness_ids
        ]
        self.n_words = max(1, (partition.n + 63) // 64)
        if self.backend == "c":
            width = max((len(r) for r in rows), default=0)
            mat = np.full((len(rows), max(width, 1)), -1, dtype=np.int32)
            for i, r in enumerate(rows):
                mat[i, : len(r)] = r
            self._witnesses = mat
            self._terms = np.asarray(view.terms, dtype=np.float64)
            self._kernel = kernels.compiled_module().eval_players
        else:
            self._witnesses = rows
            self._terms = list(view.terms)
            self._kernel = kernels.python_module().eval_players

    def __call__(self, coalition: int) -> float:
        if self.backend == "c":
            words = np.frombuffer(
                coalition.to_bytes(self.n_words * 8, "little"), dtype=np.uint64
            )
            return self._kernel(self._witnesses, self._terms, words, self.kind_code)
        return self._kernel(self._witnesses, self._terms, coalition, self.kind_code)


class CoalitionCache:
    """LRU store from canonical coalition encoding to v(S).

    Thread-safe; a lost insert race is benign because re-evaluation returns
    the identical value.  Capacity 0 disables storage (every lookup misses).
    """

    def __init__(self, capacity: int = DEFAULT_CACHE_CAPACITY):
        self.capacity = int(capacity)
        self._store: OrderedDict[int, float] = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def lookup(self, key: int) -> tuple[bool, float]:
        with self._lock:
            if key in self._store:
                self._store.move_to_end(key)
                self.hits += 1
                return True, self._store[key]
            self.misses += 1
            return False, 0.0

    def store(self, key: int, value: float) -> None:
        if self.capacity <= 0:
            return
        with self._lock:
            self._store[key] = value
            self._store.move_to_end(key)
            while len(self._store) > self.capacity:
                self._store.popitem(last=False)

    def __len__(self) -> int:
        return len(self._store)

    def counters(self) -> tuple[int, int]:
        with self._lock:
            return self.hits, self.misses

    def clear(self) -> None:
        with self._lock:
            self._store.clear()
            self.hits = 0
            self.misses = 0


def cached_eval(
    cache: CoalitionCache | None,
    evaluator: Callable[[object, int], float],
    ctx,
    coalition: int,
) -> float:
    """Return the cached value for the coalition or evaluate, store, return."""
    if cache is None:
        return evaluator(ctx, coalition)
    found, value = cache.lookup(coalition)
    if found:
        return value
    value = evaluator(ctx, coalition)
    cache.store(coalition, value)
    return value


def prune_strata(
    strata: Sequence[tuple[int, ...]],
    query: QuerySpec,
    partition: EndogenousPartition,
    t: str,
) -> list[bool]:
    """Mark relation vectors whose coalitions all have a zero marginal.

    A stratum is pruned iff some endogenous relation other than the target's
    contributes zero tuples: inner joins need a row from every listed
    relation, so each witness stays incomplete with and without the target.
    Purely schema-level; data values are never consulted.
    """
    if t not in partition.index:
        raise DomainError(f"target {t!r} is not endogenous")
    t_rel = partition.player_relation[t]
    skip = [rel != t_rel for rel in partition.relations]
    return [any(v[i] == 0 and skip[i] for i in range(len(v))) for v in strata]


@dataclass(frozen=True)
class StratumGroup:
    """A cross-product of per-relation bins over relation vectors."""

    key: tuple[int, ...]
    bins: tuple[tuple[int, int], ...]  # per relation, (lo, hi) inclusive vector values
    members: tuple[tuple[int, ...], ...]
    cards: tuple[int, ...]

    @property
    def card(self) -> int:
        return sum(self.cards)


def _split_contiguous(values: list[int], weights: list[int], nbins: int) -> list[tuple[int, int]]:
    """Greedy contiguous split of value positions into nbins near-equal-mass bins."""
    bounds = []
    start = 0
    remaining = sum(weights)
    for b in range(nbins):
        left = nbins - b
        if left == 1:
            bounds.append((start, len(values)))
            break
        max_end = len(values) - (left - 1)
        end = start + 1
        acc = weights[start]
        # extend while acc < remaining / left, exactly in integer arithmetic
        while end < max_end and acc * left < remaining:
            acc += weights[end]
            end += 1
        bounds.append((start, end))
        remaining -= acc
        start = end
    return bounds


def bin_strata(
    strata: Sequence[tuple[int, ...]], q: int, nprime: Sequence[int]
) -> list[StratumGroup]:
    """Coarsen relation vectors into groups of per-relation quantile bins.

    Each relation's observed vector values split into min(q, #values)
    contiguous bins with near-equal binomial mass; a group is one cell of
    the bin cross-product.  Within-group sampling picks a member vector with
    probability proportional to its cardinality and then samples uniformly
    inside it, which keeps the distribution uniform over the group.
    """
    if q < 1:
        raise DomainError(f"quantile bin count must be >= 1, got {q}")
    if not strata:
        return []
    r = len(strata[0])
    value_bins: list[dict[int, int]] = []
    bin_ranges: list[list[tuple[int, int]]] = []
    for i in range(r):
        values = sorted({v[i] for v in strata})
        weights = [comb(nprime[i], x) for x in values]
        nbins = min(q, len(values))
        bounds = _split_contiguous(values, weights, nbins)
        mapping = {}
        ranges = []
        for bno, (lo, hi) in enumerate(bounds):
            ranges.append((values[lo], values[hi - 1]))
            for pos in range(lo, hi):
                mapping[values[pos]] = bno
        value_bins.append(mapping)
        bin_ranges.append(ranges)
    grouped: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
    for v in strata:
        key = tuple(value_bins[i][v[i]] for i in range(r))
        grouped.setdefault(key, []).append(v)
    groups = []
    for key in sorted(grouped):
        members = tuple(sorted(grouped[key]))
        cards = tuple(
            math.prod(comb(nprime[i], v[i]) for i in range(r)) for v in members
        )
        bins = tuple(bin_ranges[i][key[i]] for i in range(r))
        groups.append(StratumGroup(key, bins, members, cards))
    return groups
