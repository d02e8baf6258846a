"""Sampling estimators for tuple-level Shapley values.

Five estimators share one machinery:

* ``mcs``  - uniform coalitions over 2^(n-1) subsets, importance-weighted.
* ``ss``   - strata by coalition size, proportional allocation.
* ``ass``  - size strata, budget split into cycles, Neyman reallocation.
* ``rss``  - strata by relation vector (per-relation tuple counts).
* ``arss`` - relation-vector strata with cyclewise Neyman reallocation.

Every stratum gets an exact rational combining weight (the probability that
a size-uniform random coalition lands in it), so the stratified estimate
``sum_v pi_v * mean_v`` reproduces the subset-form Shapley sum exactly when
intra-stratum variance vanishes.  The final combination runs in rational
arithmetic and rounds once.

Sampling draws come from one independent counter-based RNG stream per
(stratum, cycle), derived from (seed, stratum index, cycle index), so
results are bit-identical regardless of how strata are scheduled across
workers.
"""

from __future__ import annotations

import bisect
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import accumulate, chain, combinations, product
from typing import Callable, Iterator, Sequence

import numpy as np

from . import kernels
from .accel import StratumGroup, bin_strata, cached_eval, prune_strata
from .errors import DomainError
from .game import GameContext, _raw_value, _w_fraction
from .provenance import EndogenousPartition

__all__ = [
    "StratumStats",
    "merge_stats",
    "EstimatorConfig",
    "EstimateReport",
    "enumerate_strata",
    "stratum_card",
    "stratum_prob",
    "proportional_allocation",
    "neyman_allocation",
    "sample_coalition",
    "run_mcs",
    "run_ss",
    "run_ass",
    "run_rss",
    "run_arss",
    "estimate",
    "METHODS",
]

logger = logging.getLogger("relshap")

METHODS = ("mcs", "ss", "ass", "rss", "arss")

_MASK64 = (1 << 64) - 1


def _stream(seed: int, stratum_index: int, cycle_index: int) -> np.random.Generator:
    """Independent counter-based stream for one (stratum, cycle) pair."""
    counter = np.array([0, 0, stratum_index, cycle_index], dtype=np.uint64)
    return np.random.Generator(
        np.random.Philox(counter=counter, key=np.uint64(seed & _MASK64))
    )


# --- stratum statistics ------------------------------------------------------


@dataclass
class StratumStats:
    """Running count/mean/M2 accumulator plus stratum bookkeeping."""

    key: object
    prob: float
    card: int
    pruned: bool = False
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def update(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count >= 2 else 0.0

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    def snapshot(self) -> dict:
        return {
            "key": list(self.key) if isinstance(self.key, tuple) else self.key,
            "count": self.count,
            "mean": self.mean,
            "variance": self.variance,
            "prob": self.prob,
            "card": self.card,
            "pruned": self.pruned,
        }


def merge_stats(a: StratumStats, b: StratumStats) -> StratumStats:
    """Exact pooled merge of two accumulators over the same stratum."""
    if a.key != b.key or a.card != b.card or a.prob != b.prob:
        raise DomainError(f"cannot merge stats of different strata: {a.key!r} vs {b.key!r}")
    if a.count == 0:
        out = StratumStats(a.key, a.prob, a.card, a.pruned, b.count, b.mean, b.m2)
        return out
    if b.count == 0:
        return StratumStats(a.key, a.prob, a.card, a.pruned, a.count, a.mean, a.m2)
    n = a.count + b.count
    delta = b.mean - a.mean
    mean = a.mean + delta * b.count / n
    m2 = a.m2 + b.m2 + delta * delta * a.count * b.count / n
    return StratumStats(a.key, a.prob, a.card, a.pruned, n, mean, m2)


# --- strata enumeration and weights -----------------------------------------


def _nprime(partition: EndogenousPartition, t: str) -> tuple[int, ...]:
    t_rel = partition.player_relation[t]
    return tuple(
        len(partition.members[rel]) - (1 if rel == t_rel else 0)
        for rel in partition.relations
    )


def enumerate_strata(partition: EndogenousPartition, t: str) -> list[tuple[int, ...]]:
    """Full relation-vector grid over the other players, lexicographic."""
    if t not in partition.index:
        raise DomainError(f"target {t!r} is not endogenous")
    nprime = _nprime(partition, t)
    return list(product(*(range(k + 1) for k in nprime)))


def stratum_card(v: Sequence[int], nprime: Sequence[int]) -> int:
    """Number of coalitions with the given relation vector: prod C(n_i', s_i)."""
    if len(v) != len(nprime):
        raise DomainError("relation vector and bounds have different lengths")
    card = 1
    for s, k in zip(v, nprime):
        if s < 0 or s > k:
            raise DomainError(f"vector component {s} outside [0, {k}]")
        card *= math.comb(k, s)
    return card


def _prob_fraction(v: Sequence[int], nprime: Sequence[int], n: int) -> Fraction:
    size = sum(v)
    if size > n - 1:
        raise DomainError(f"vector size {size} exceeds n-1 = {n - 1}")
    return Fraction(stratum_card(v, nprime), math.comb(n - 1, size)) / n


def stratum_prob(v: Sequence[int], nprime: Sequence[int], n: int) -> float:
    """Probability that a size-uniform random coalition lands in this stratum.

    pi_v = (1/n) * prod C(n_i', s_i) / C(n-1, |v|); summing pi_v * mean_v over
    the grid reproduces the subset-form Shapley value exactly.
    """
    return float(_prob_fraction(v, nprime, n))


# --- allocation rules --------------------------------------------------------


def _largest_remainder(
    weights: Sequence[Fraction | int],
    budget: int,
    eligible: Sequence[bool],
    floor: int,
    caps: Sequence[int | None] | None = None,
) -> list[int]:
    """Floor-clamped largest-remainder apportionment of budget over strata."""
    k = len(weights)
    alloc = [0] * k
    idx = [i for i in range(k) if eligible[i]]
    if not idx or budget <= 0:
        return alloc
    floor_eff = min(floor, budget // len(idx))
    if floor and floor_eff < floor:
        logger.warning(
            "budget %d cannot give %d strata a floor of %d; floor reduced to %d",
            budget,
            len(idx),
            floor,
            floor_eff,
        )
    for i in idx:
        alloc[i] = floor_eff
    remaining = budget - floor_eff * len(idx)
    while remaining > 0:
        open_idx = [
            i for i in idx if caps is None or caps[i] is None or alloc[i] < caps[i]
        ]
        if not open_idx:
            break
        total_w = sum(Fraction(weights[i]) for i in open_idx)
        if total_w == 0:
            shares = {i: Fraction(remaining, len(open_idx)) for i in open_idx}
        else:
            shares = {
                i: Fraction(remaining) * Fraction(weights[i]) / total_w
                for i in open_idx
            }
        granted = 0
        fracs = []
        for i in open_idx:
            cap_room = (
                remaining
                if caps is None or caps[i] is None
                else max(0, caps[i] - alloc[i])
            )
            give = min(int(shares[i]), cap_room)
            alloc[i] += give
            granted += give
            if give < cap_room:
                fracs.append((shares[i] - int(shares[i]), i))
        remaining -= granted
        if remaining <= 0:
            break
        # distribute the rounding leftover by largest fractional remainder
        fracs.sort(key=lambda fi: (-fi[0], fi[1]))
        progressed = False
        for frac, i in fracs:
            if remaining <= 0:
                break
            cap_room = (
                1
                if caps is None or caps[i] is None
                else min(1, caps[i] - alloc[i])
            )
            if cap_room > 0:
                alloc[i] += 1
                remaining -= 1
                progressed = True
        if not progressed and granted == 0:
            break
    return alloc


def proportional_allocation(
    cards: Sequence[int],
    budget: int,
    floor: int = 0,
    pruned: Sequence[bool] | None = None,
) -> list[int]:
    """Counts proportional to stratum cardinality, largest-remainder rounded.

    Pruned strata receive 0; totals equal the budget exactly.
    """
    if budget < 0:
        raise DomainError(f"budget must be >= 0, got {budget}")
    eligible = [not p for p in pruned] if pruned is not None else [True] * len(cards)
    return _largest_remainder(list(cards), budget, eligible, floor)


def _neyman_weights(
    stats: Sequence[StratumStats], eligible: Sequence[bool]
) -> list[Fraction]:
    sds = [st.sd if st.count >= 2 else None for st in stats]
    observed = [sd for sd, ok in zip(sds, eligible) if ok and sd is not None]
    max_sd = max(observed, default=0.0)
    weights = []
    for st, sd, ok in zip(stats, sds, eligible):
        if not ok:
            weights.append(Fraction(0))
            continue
        eff = sd if sd is not None else max_sd
        weights.append(Fraction(st.card) * Fraction(eff))
    return weights


def neyman_allocation(
    stats: Sequence[StratumStats], budget: int, floor: int
) -> list[int]:
    """Counts proportional to card * sd, floor-clamped, summing to the budget.

    Strata with fewer than two samples take the largest observed sd
    (optimistic exploration); if every sd is zero the rule falls back to
    proportional allocation by cardinality.
    """
    eligible = [not st.pruned for st in stats]
    weights = _neyman_weights(stats, eligible)
    if all(w == 0 for w in weights):
        return proportional_allocation(
            [st.card for st in stats], budget, floor, [st.pruned for st in stats]
        )
    return _largest_remainder(weights, budget, eligible, floor)


# --- coalition sampling ------------------------------------------------------


def _others_by_relation(
    partition: EndogenousPartition, t: str
) -> list[np.ndarray]:
    ti = partition.index[t]
    return [
        np.array(
            [partition.index[tid] for tid in partition.members[rel] if partition.index[tid] != ti],
            dtype=np.int64,
        )
        for rel in partition.relations
    ]


def _draw_vector(
    v: Sequence[int], pools: Sequence[np.ndarray], rng: np.random.Generator
) -> int:
    mask = 0
    for cnt, pool in zip(v, pools):
        if cnt == 0:
            continue
        for j in rng.choice(pool, size=cnt, replace=False):
            mask |= 1 << int(j)
    return mask


def sample_coalition(
    v: Sequence[int],
    partition: EndogenousPartition,
    t: str,
    rng: np.random.Generator,
) -> int:
    """Uniform coalition from the stratum: s_i ids without replacement per relation."""
    pools = _others_by_relation(partition, t)
    if len(v) != len(pools):
        raise DomainError("relation vector length does not match the partition")
    for cnt, pool in zip(v, pools):
        if cnt < 0 or cnt > len(pool):
            raise DomainError(f"vector component {cnt} outside [0, {len(pool)}]")
    return _draw_vector(v, pools, rng)


def _enum_vector(v: Sequence[int], pools: Sequence[np.ndarray]) -> Iterator[int]:
    lists = [combinations([int(x) for x in pool], cnt) for cnt, pool in zip(v, pools)]
    for parts in product(*lists):
        mask = 0
        for part in parts:
            for j in part:
                mask |= 1 << j
        yield mask


# --- estimator configuration and reports -------------------------------------


@dataclass
class EstimatorConfig:
    method: str
    m: int
    k: int = 5
    floor: int = 1
    seed: int = 0
    workers: int = 1
    bins: int | None = None
    cache: bool = True
    evaluator: str = "compiled"
    prune: bool = True
    dedup: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r} (expected one of {METHODS})")
        if self.m < 1:
            raise DomainError(f"budget must be >= 1, got {self.m}")
        if self.k < 1:
            raise DomainError(f"cycles must be >= 1, got {self.k}")
        if self.floor < 0:
            raise DomainError(f"floor must be >= 0, got {self.floor}")
        if self.workers < 1:
            raise DomainError(f"workers must be >= 1, got {self.workers}")
        if self.bins is not None and self.bins < 1:
            raise DomainError(f"bins must be >= 1, got {self.bins}")


@dataclass
class EstimateReport:
    value: float
    method: str
    m: int
    k: int
    seed: int
    target: str
    samples_used: int
    wall_time: float
    evaluator_time: float
    cache_hits: int
    cache_misses: int
    evaluator: str
    backend: str
    strata: list[dict] = field(default_factory=list)
    allocations: list[list[int]] = field(default_factory=list)
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def deterministic_state(self) -> dict:
        """Everything that must be bit-reproducible (timings excluded)."""
        d = self.to_dict()
        d.pop("wall_time")
        d.pop("evaluator_time")
        return d


# --- internal stratum descriptors --------------------------------------------


@dataclass
class _Stratum:
    key: object
    card: int
    weight: Fraction  # combine weight applied to the mean of the tracked variable
    prob: float
    pruned: bool
    draw: Callable[[np.random.Generator], int] | None
    transform: Callable[[float, int], float] | None  # (delta, |S|) -> tracked
    enum_all: Callable[[], Iterator[int]] | None


def _vector_strata(ctx: GameContext, t: str, cfg: EstimatorConfig) -> list[_Stratum]:
    part = ctx.partition
    n = part.n
    nprime = _nprime(part, t)
    pools = _others_by_relation(part, t)
    vectors = enumerate_strata(part, t)
    pruned = (
        prune_strata(vectors, ctx.query, part, t)
        if cfg.prune
        else [False] * len(vectors)
    )
    strata: list[_Stratum] = []
    if cfg.bins is not None:
        unpruned = [v for v, p in zip(vectors, pruned) if not p]
        for g in bin_strata(unpruned, cfg.bins, nprime):
            prob = float(sum(_prob_fraction(v, nprime, n) for v in g.members))
            strata.append(
                _Stratum(
                    key=("bin",) + g.key,
                    card=g.card,
                    weight=Fraction(g.card),
                    prob=prob,
                    pruned=False,
                    draw=_make_group_draw(g, pools),
                    transform=lambda d, s, n=n: float(_w_fraction(s, n)) * d,
                    enum_all=_make_group_enum(g, pools),
                )
            )
        for v, p in zip(vectors, pruned):
            if p:
                strata.append(
                    _Stratum(
                        key=v,
                        card=stratum_card(v, nprime),
                        weight=Fraction(0),
                        prob=stratum_prob(v, nprime, n),
                        pruned=True,
                        draw=None,
                        transform=None,
                        enum_all=None,
                    )
                )
        return strata
    for v, p in zip(vectors, pruned):
        frac = _prob_fraction(v, nprime, n)
        strata.append(
            _Stratum(
                key=v,
                card=stratum_card(v, nprime),
                weight=frac,
                prob=float(frac),
                pruned=p,
                draw=_make_vector_draw(v, pools),
                transform=None,
                enum_all=_make_vector_enum(v, pools),
            )
        )
    return strata


def _make_vector_draw(v, pools):
    return lambda rng: _draw_vector(v, pools, rng)


def _make_vector_enum(v, pools):
    return lambda: _enum_vector(v, pools)


def _make_group_draw(g: StratumGroup, pools):
    cum = list(accumulate(g.cards))
    total = cum[-1]
    if total < 2**63:

        def draw(rng):
            r = int(rng.integers(0, total))
            member = bisect.bisect_right(cum, r)
            return _draw_vector(g.members[member], pools, rng)

        return draw
    probs = np.array([c / total for c in g.cards], dtype=np.float64)
    probs = probs / probs.sum()

    def draw_big(rng):
        member = int(rng.choice(len(g.members), p=probs))
        return _draw_vector(g.members[member], pools, rng)

    return draw_big


def _make_group_enum(g: StratumGroup, pools):
    return lambda: chain.from_iterable(_enum_vector(v, pools) for v in g.members)


def _size_strata(ctx: GameContext, t: str, cfg: EstimatorConfig) -> list[_Stratum]:
    part = ctx.partition
    n = part.n
    ti = part.index[t]
    others = np.array([i for i in range(n) if i != ti], dtype=np.int64)
    strata = []
    for s in range(n):
        frac = _w_fraction(s, n) * math.comb(n - 1, s)  # == 1/n

        def draw(rng, s=s):
            if s == 0:
                return 0
            mask = 0
            for j in rng.choice(others, size=s, replace=False):
                mask |= 1 << int(j)
            return mask

        def enum_all(s=s):
            for c in combinations([int(x) for x in others], s):
                mask = 0
                for j in c:
                    mask |= 1 << j
                yield mask

        strata.append(
            _Stratum(
                key=s,
                card=math.comb(n - 1, s),
                weight=frac,
                prob=float(frac),
                pruned=False,
                draw=draw,
                transform=None,
                enum_all=enum_all,
            )
        )
    return strata


# --- the shared stratified runner ---------------------------------------------


def _cycle_budgets(m: int, k: int) -> list[int]:
    base, extra = divmod(m, k)
    return [base + 1 if c < extra else base for c in range(k)]


def _fresh(st: _Stratum) -> StratumStats:
    return StratumStats(st.key, st.prob, st.card, st.pruned)


def _run_stratified(
    ctx: GameContext, t: str, cfg: EstimatorConfig, mode: str, k: int
) -> EstimateReport:
    t_start = time.perf_counter()
    part = ctx.partition
    if t not in part.index:
        raise DomainError(f"target {t!r} is not endogenous (its value is exactly 0)")
    ti = part.index[t]
    hits0, misses0 = ctx.cache.counters()
    eval_s0 = ctx.evaluator_seconds

    strata = _vector_strata(ctx, t, cfg) if mode == "vector" else _size_strata(ctx, t, cfg)
    stats = [_fresh(st) for st in strata]
    exhausted = [False] * len(strata)
    budgets = _cycle_budgets(cfg.m, k)
    allocations: list[list[int]] = []
    cache = ctx.cache if cfg.cache else None
    bit = 1 << ti

    def delta(S: int) -> float:
        v1 = cached_eval(cache, _raw_value, ctx, S | bit)
        v0 = ctx.value_int(0) if S == 0 else cached_eval(cache, _raw_value, ctx, S)
        return v1 - v0

    def run_one(i: int, count: int, cycle: int):
        st = strata[i]
        rng = _stream(cfg.seed, i, cycle)
        local = _fresh(st)
        exh = False
        if cfg.dedup and st.enum_all is not None and st.card <= count:
            for S in st.enum_all():
                d = delta(S)
                local.update(st.transform(d, S.bit_count()) if st.transform else d)
            exh = True
        else:
            for _ in range(count):
                S = st.draw(rng)
                d = delta(S)
                local.update(st.transform(d, S.bit_count()) if st.transform else d)
        return i, local, exh

    for cycle, budget in enumerate(budgets):
        eligible = [
            not st.pruned and not exhausted[i] for i, st in enumerate(strata)
        ]
        caps = [st.card if cfg.dedup else None for st in strata]
        if cycle == 0:
            alloc = _largest_remainder(
                [st.card for st in strata], budget, eligible, cfg.floor, caps
            )
        else:
            weights = _neyman_weights(stats, eligible)
            if all(w == 0 for w in weights):
                weights = [st.card for st in strata]
            alloc = _largest_remainder(weights, budget, eligible, cfg.floor, caps)
        allocations.append(alloc)
        jobs = [i for i, a in enumerate(alloc) if a > 0]
        if cfg.workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                results = list(
                    pool.map(lambda i: run_one(i, alloc[i], cycle), jobs)
                )
        else:
            results = [run_one(i, alloc[i], cycle) for i in jobs]
        results.sort(key=lambda r: r[0])
        for i, local, exh in results:
            stats[i] = merge_stats(stats[i], local)
            exhausted[i] = exhausted[i] or exh

    total = Fraction(0)
    unsampled = 0
    for st, sstat in zip(strata, stats):
        if st.pruned:
            continue
        if sstat.count == 0:
            unsampled += 1
            continue
        total += st.weight * Fraction(sstat.mean)
    value = float(total)
    samples_used = sum(s.count for s in stats)
    hits1, misses1 = ctx.cache.counters()
    flags = {}
    if unsampled:
        flags["unsampled_strata"] = unsampled
        logger.warning("%d unpruned strata received no samples (budget too small)", unsampled)
    if any(exhausted):
        flags["exhausted_strata"] = sum(exhausted)
    return EstimateReport(
        value=value,
        method=cfg.method,
        m=cfg.m,
        k=k,
        seed=cfg.seed,
        target=t,
        samples_used=samples_used,
        wall_time=time.perf_counter() - t_start,
        evaluator_time=ctx.evaluator_seconds - eval_s0,
        cache_hits=hits1 - hits0,
        cache_misses=misses1 - misses0,
        evaluator=ctx.evaluator,
        backend=kernels.BACKEND,
        strata=[s.snapshot() for s in stats],
        allocations=allocations,
        flags=flags,
    )


# --- public estimators --------------------------------------------------------


def _scaled_weight(s: int, n: int) -> float:
    """2^(n-1) * w(s, n), the importance weight of one uniform coalition."""
    if n <= 64:
        return float(Fraction(1 << (n - 1), n * math.comb(n - 1, s)))
    ln = (
        (n - 1) * math.log(2.0)
        - math.log(n)
        - (math.lgamma(n) - math.lgamma(s + 1) - math.lgamma(n - s))
    )
    try:
        return math.exp(ln)
    except OverflowError:
        return math.inf


def run_mcs(ctx: GameContext, t: str, cfg: EstimatorConfig) -> EstimateReport:
    """Plain Monte Carlo: m uniform coalitions of the other players."""
    t_start = time.perf_counter()
    part = ctx.partition
    if t not in part.index:
        raise DomainError(f"target {t!r} is not endogenous (its value is exactly 0)")
    ti = part.index[t]
    n = part.n
    hits0, misses0 = ctx.cache.counters()
    eval_s0 = ctx.evaluator_seconds
    cache = ctx.cache if cfg.cache else None
    bit = 1 << ti
    rng = _stream(cfg.seed, 0, 0)
    stats = StratumStats("uniform", 1.0, 1 << (n - 1))
    ys = []
    player_bits = np.zeros(n, dtype=np.uint8)
    for _ in range(cfg.m):
        bits = rng.integers(0, 2, size=n - 1, dtype=np.uint8)
        player_bits[:ti] = bits[:ti]
        player_bits[ti + 1 :] = bits[ti:]
        S = int.from_bytes(
            np.packbits(player_bits, bitorder="little").tobytes(), "little"
        )
        size = int(bits.sum())
        v1 = cached_eval(cache, _raw_value, ctx, S | bit)
        v0 = ctx.value_int(0) if S == 0 else cached_eval(cache, _raw_value, ctx, S)
        y = _scaled_weight(size, n) * (v1 - v0)
        ys.append(y)
        stats.update(y)
    value = math.fsum(ys) / cfg.m
    hits1, misses1 = ctx.cache.counters()
    return EstimateReport(
        value=value,
        method="mcs",
        m=cfg.m,
        k=1,
        seed=cfg.seed,
        target=t,
        samples_used=cfg.m,
        wall_time=time.perf_counter() - t_start,
        evaluator_time=ctx.evaluator_seconds - eval_s0,
        cache_hits=hits1 - hits0,
        cache_misses=misses1 - misses0,
        evaluator=ctx.evaluator,
        backend=kernels.BACKEND,
        strata=[stats.snapshot()],
        allocations=[[cfg.m]],
    )


def run_ss(ctx: GameContext, t: str, cfg: EstimatorConfig) -> EstimateReport:
    """Size-stratified sampling, single proportional cycle."""
    return _run_stratified(ctx, t, cfg, "size", 1)


def run_ass(ctx: GameContext, t: str, cfg: EstimatorConfig) -> EstimateReport:
    """Adaptive size-stratified sampling over cfg.k cycles."""
    return _run_stratified(ctx, t, cfg, "size", cfg.k)


def run_rss(ctx: GameContext, t: str, cfg: EstimatorConfig) -> EstimateReport:
    """Relation-stratified sampling, single proportional cycle."""
    return _run_stratified(ctx, t, cfg, "vector", 1)


def run_arss(ctx: GameContext, t: str, cfg: EstimatorConfig) -> EstimateReport:
    """Adaptive relation-stratified sampling over cfg.k cycles."""
    return _run_stratified(ctx, t, cfg, "vector", cfg.k)


_RUNNERS = {
    "mcs": run_mcs,
    "ss": run_ss,
    "ass": run_ass,
    "rss": run_rss,
    "arss": run_arss,
}


def estimate(ctx: GameContext, t: str, cfg: EstimatorConfig) -> EstimateReport:
    """Dispatch to the configured estimator."""
    return _RUNNERS[cfg.method](ctx, t, cfg)
