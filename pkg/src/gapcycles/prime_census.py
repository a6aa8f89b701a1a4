"""Ground truth: segmented sieve, intervals of survival, and constellation
censuses among actual primes.

In the recursion from one cycle of gaps to the next, the first fusion
confirms the new prime p and the following fusion lands at p**2, so every
constellation between p and p**2 survives all later stages. The stretch the
current stage is responsible for is the interval of survival

    dH(p) = [p**2, p_next**2)

taken half-open here so each prime belongs to exactly one interval (the
endpoints are squares, hence composite; the convention only pins down where
a run of consecutive primes is classified — by its start).

The sieve works on odd-only boolean segments sized to cache; census runs
match windows of consecutive prime gaps and are deterministic regardless of
worker count (chunks are disjoint start-ranges, merged by summation).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .constellations import Constellation, is_admissible
from .primes import is_prime, next_prime, prime_range, primes_up_to

__all__ = [
    "SieveConfig",
    "BoundExceededError",
    "SurvivalInterval",
    "CensusRecord",
    "ComparisonRow",
    "ComparisonTable",
    "segmented_sieve",
    "iter_prime_arrays",
    "primes_array",
    "count_primes",
    "survival_intervals",
    "census",
    "census_range",
    "survival_comparison",
    "cpap_divisibility_check",
    "repetition_w_infinity",
    "ap_scan",
]


class BoundExceededError(RuntimeError):
    """Raised when a request exceeds the configured sieve bound."""


@dataclass(frozen=True)
class SieveConfig:
    bound: int = 2_000_000_000
    segment_size: int = 1 << 20  # odd candidates per segment
    jobs: int = 1


DEFAULT_CONFIG = SieveConfig()


@lru_cache(maxsize=4)
def _base_primes(limit: int) -> np.ndarray:
    return primes_up_to(limit)


def _check_bounds(lo: int, hi: int, config: SieveConfig) -> None:
    if lo < 2 or hi < lo:
        raise ValueError(f"need 2 <= lo <= hi, got [{lo}, {hi}]")
    if hi > config.bound:
        raise BoundExceededError(f"range end {hi} exceeds the sieve bound {config.bound}")


def _sieve_segment(lo: int, hi: int, base: np.ndarray) -> np.ndarray:
    """Primes in [lo, hi), odd-only boolean marking."""
    if hi <= lo:
        return np.zeros(0, dtype=np.int64)
    first = max(lo, 3)
    if first % 2 == 0:
        first += 1
    n = max(0, (hi - first + 1) // 2)
    out_two = [np.array([2], dtype=np.int64)] if lo <= 2 < hi else []
    if n == 0:
        return out_two[0] if out_two else np.zeros(0, dtype=np.int64)
    mask = np.ones(n, dtype=bool)
    if first == 1:
        mask[0] = False
    for p in base:
        p = int(p)
        if p == 2:
            continue
        if p * p >= hi:
            break
        start = max(p * p, ((first + p - 1) // p) * p)
        if start % 2 == 0:
            start += p
        if start >= hi:
            continue
        mask[(start - first) // 2 :: p] = False
    primes = first + 2 * np.flatnonzero(mask).astype(np.int64)
    return np.concatenate(out_two + [primes]) if out_two else primes


def iter_prime_arrays(lo: int, hi: int, config: SieveConfig | None = None) -> Iterator[np.ndarray]:
    """Primes in [lo, hi] as per-segment arrays, in order."""
    config = config or DEFAULT_CONFIG
    _check_bounds(lo, hi, config)
    hi_excl = hi + 1
    base = _base_primes(math.isqrt(hi_excl) + 1)
    span = 2 * config.segment_size
    seg_lo = lo
    while seg_lo < hi_excl:
        seg_hi = min(seg_lo + span, hi_excl)
        yield _sieve_segment(seg_lo, seg_hi, base)
        seg_lo = seg_hi


def segmented_sieve(lo: int, hi: int, config: SieveConfig | None = None) -> Iterator[int]:
    """All primes in [lo, hi], in order."""
    for arr in iter_prime_arrays(lo, hi, config):
        yield from (int(p) for p in arr)


def primes_array(lo: int, hi: int, config: SieveConfig | None = None) -> np.ndarray:
    arrays = list(iter_prime_arrays(lo, hi, config))
    return np.concatenate(arrays) if arrays else np.zeros(0, dtype=np.int64)


def _count_chunk(args) -> int:
    lo, hi, bound, segment_size = args
    cfg = SieveConfig(bound=bound, segment_size=segment_size)
    return int(sum(len(a) for a in iter_prime_arrays(lo, hi, cfg)))


def count_primes(lo: int, hi: int, config: SieveConfig | None = None, jobs: int | None = None) -> int:
    """Number of primes in [lo, hi]; parallel runs split the range into
    disjoint chunks and agree exactly with the single-worker count."""
    config = config or DEFAULT_CONFIG
    jobs = config.jobs if jobs is None else jobs
    _check_bounds(lo, hi, config)
    if jobs <= 1:
        return _count_chunk((lo, hi, config.bound, config.segment_size))
    edges = np.linspace(lo, hi + 1, jobs + 1, dtype=np.int64)
    tasks = [
        (int(edges[i]), int(edges[i + 1] - 1), config.bound, config.segment_size)
        for i in range(jobs)
        if edges[i] <= edges[i + 1] - 1
    ]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return sum(pool.map(_count_chunk, tasks))


@dataclass(frozen=True)
class SurvivalInterval:
    """dH(p) = [p**2, p_next**2): where the stage p settles its survivors."""

    p: int
    p_next: int

    @property
    def lo(self) -> int:
        return self.p * self.p

    @property
    def hi(self) -> int:
        return self.p_next * self.p_next


def survival_intervals(stage_lo: int, stage_hi: int) -> list[SurvivalInterval]:
    """Intervals of survival for the stage primes in [stage_lo, stage_hi];
    the last prime in the range closes the final interval."""
    stages = prime_range(stage_lo, stage_hi)
    if len(stages) < 2:
        raise ValueError(f"need at least two primes in [{stage_lo}, {stage_hi}]")
    return [SurvivalInterval(p, q) for p, q in zip(stages, stages[1:])]


@dataclass(frozen=True)
class CensusRecord:
    """Counts of constellation occurrences among consecutive primes, with a
    run classified by the interval containing its start."""

    interval: SurvivalInterval
    counts: dict[tuple[int, ...], int]


def _normalize_battery(constellations) -> list[Constellation]:
    battery = [Constellation.of(s) for s in constellations]
    if not battery:
        raise ValueError("empty constellation battery")
    return battery


def _census_runs(
    battery: Sequence[Constellation],
    start_lo: int,
    start_hi: int,
    interval_edges: np.ndarray,
    config: SieveConfig,
) -> np.ndarray:
    """Counts[interval, constellation] for runs starting in [start_lo, start_hi).

    The sieve is extended past start_hi by the largest span so every run
    starting inside the window is fully visible.
    """
    slack = max(s.span for s in battery) + 64
    primes = primes_array(max(2, start_lo - 1), start_hi + slack, config)
    out = np.zeros((len(interval_edges) - 1, len(battery)), dtype=np.int64)
    if len(primes) < 2:
        return out
    diffs = np.diff(primes)
    n = len(primes)
    for si, s in enumerate(battery):
        seq = s.gaps
        L = len(seq)
        if n <= L:
            continue
        mask = diffs[: n - L] == seq[0]
        for k in range(1, L):
            mask = mask & (diffs[k : n - L + k] == seq[k])
        starts = primes[: n - L][mask]
        starts = starts[(starts >= start_lo) & (starts < start_hi)]
        if len(starts):
            idx = np.searchsorted(interval_edges, starts, side="right") - 1
            valid = (idx >= 0) & (idx < len(interval_edges) - 1)
            out[:, si] += np.bincount(idx[valid], minlength=len(interval_edges) - 1)
    return out


def _census_chunk(args) -> np.ndarray:
    battery_gaps, start_lo, start_hi, edges, bound, segment_size = args
    battery = [Constellation(g) for g in battery_gaps]
    cfg = SieveConfig(bound=bound, segment_size=segment_size)
    return _census_runs(battery, start_lo, start_hi, np.asarray(edges, dtype=np.int64), cfg)


def census_range(
    constellations,
    stage_lo: int,
    stage_hi: int,
    config: SieveConfig | None = None,
    jobs: int | None = None,
) -> list[CensusRecord]:
    """Censuses over all intervals of survival for stages in [stage_lo,
    stage_hi]. Deterministic for any worker count."""
    config = config or DEFAULT_CONFIG
    jobs = config.jobs if jobs is None else jobs
    battery = _normalize_battery(constellations)
    intervals = survival_intervals(stage_lo, stage_hi)
    lo, hi = intervals[0].lo, intervals[-1].hi
    _check_bounds(lo, hi + max(s.span for s in battery) + 64, config)
    edges = np.asarray([iv.lo for iv in intervals] + [intervals[-1].hi], dtype=np.int64)
    if jobs <= 1:
        counts = _census_runs(battery, lo, hi, edges, config)
    else:
        cut = np.linspace(lo, hi, jobs + 1, dtype=np.int64)
        tasks = [
            (
                tuple(s.gaps for s in battery),
                int(cut[i]),
                int(cut[i + 1]),
                tuple(int(e) for e in edges),
                config.bound,
                config.segment_size,
            )
            for i in range(jobs)
            if cut[i] < cut[i + 1]
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            counts = sum(pool.map(_census_chunk, tasks))
    records = []
    for ii, iv in enumerate(intervals):
        records.append(CensusRecord(iv, {s.gaps: int(counts[ii, si]) for si, s in enumerate(battery)}))
    return records


def census(constellations, interval: SurvivalInterval, config: SieveConfig | None = None) -> CensusRecord:
    """Counts of each constellation among consecutive primes with the run
    start inside one interval of survival."""
    config = config or DEFAULT_CONFIG
    battery = _normalize_battery(constellations)
    edges = np.asarray([interval.lo, interval.hi], dtype=np.int64)
    _check_bounds(interval.lo, interval.hi, config)
    counts = _census_runs(battery, interval.lo, interval.hi, edges, config)
    return CensusRecord(interval, {s.gaps: int(counts[0, si]) for si, s in enumerate(battery)})


@dataclass(frozen=True)
class ComparisonRow:
    constellation: tuple[int, ...]
    census_count: int
    w_model: float
    count_ratio: float
    w_ratio: float
    deviation: float


@dataclass(frozen=True)
class ComparisonTable:
    stage_lo: int
    stage_hi: int
    model_stage: int
    model_p0: int
    lam: float
    reference: tuple[int, ...]
    rows: tuple[ComparisonRow, ...]
    mean_abs_deviation: float


def survival_comparison(
    constellations,
    stage_lo: int,
    stage_hi: int,
    model_p0: int = 37,
    config: SieveConfig | None = None,
    jobs: int | None = None,
) -> ComparisonTable:
    """Census counts over a window of intervals of survival against the model
    relative populations at the matching stage, as normalized ratios.

    All constellations must share one length J: relative populations of
    different lengths drift apart without bound, so their comparison is
    meaningless. The first constellation is the normalization reference; the
    agreement metric is the mean absolute relative deviation of the count
    ratios from the model ratios.
    """
    from .population_model import initial_population, evolve

    battery = _normalize_battery(constellations)
    lengths = {s.J for s in battery}
    if len(lengths) != 1:
        raise ValueError(f"survival comparison needs equal lengths, got J in {sorted(lengths)}")
    records = census_range(battery, stage_lo, stage_hi, config=config, jobs=jobs)
    totals = {
        s.gaps: sum(rec.counts[s.gaps] for rec in records) for s in battery
    }
    model_stage = records[-1].interval.p
    w_model: dict[tuple[int, ...], float] = {}
    lam = None
    for s in battery:
        rp = evolve(initial_population(s, model_p0), model_stage)
        w_model[s.gaps] = float(rp.w_J)
        lam = float(rp.lam) if lam is None else lam
    ref = battery[0].gaps
    if totals[ref] == 0 or w_model[ref] == 0:
        raise ValueError(f"reference constellation {ref} has no occurrences in the window")
    rows = []
    devs = []
    for s in battery:
        cr = totals[s.gaps] / totals[ref]
        wr = w_model[s.gaps] / w_model[ref]
        dev = abs(cr - wr) / wr
        rows.append(ComparisonRow(s.gaps, totals[s.gaps], w_model[s.gaps], cr, wr, dev))
        if s.gaps != ref:
            devs.append(dev)
    mad = float(np.mean(devs)) if devs else 0.0
    return ComparisonTable(
        stage_lo, stage_hi, model_stage, model_p0, float(lam), ref, tuple(rows), mad
    )


def cpap_divisibility_check(J: int, g: int) -> bool:
    """Necessary condition for an admissible length-J repetition of the gap
    g: with p the largest prime <= J + 1, p# must divide g."""
    if J < 1 or g < 2:
        raise ValueError(f"need J >= 1 and g >= 2, got J={J}, g={g}")
    from .primes import primorial

    p = max(prime_range(2, J + 1), default=2)
    return g % primorial(p) == 0


def repetition_w_infinity(J: int, g: int) -> Fraction:
    """Asymptotic relative population of the repetition g,g,...,g (length J):
    phi(Q) / prod_{q | Q, q > J+1} (q - J - 1), Q the odd primes dividing g."""
    if not cpap_divisibility_check(J, g):
        raise ValueError(f"repetition of {g} with length {J} is not admissible")
    s = Constellation((g,) * J)
    if not is_admissible(s):
        raise ValueError(f"repetition of {g} with length {J} is not admissible")
    odd_primes = [q for q in prime_range(3, g) if g % q == 0]
    phi_q = 1
    for q in odd_primes:
        phi_q *= q - 1
    den = 1
    for q in odd_primes:
        if q > J + 1:
            den *= q - J - 1
    return Fraction(phi_q, den)


@dataclass(frozen=True)
class APHit:
    start: int
    consecutive: bool


def ap_scan(J: int, g: int, lo: int, hi: int, config: SieveConfig | None = None) -> list[APHit]:
    """Arithmetic progressions start, start+g, ..., start+J*g of primes with
    start in [lo, hi]; flagged consecutive when no other prime interleaves.

    Desk scale only: the sieve bound guards the top of the progression.
    """
    config = config or DEFAULT_CONFIG
    if g < 2 or g % 2:
        raise ValueError(f"gap must be even and >= 2, got {g}")
    top = hi + J * g
    if top > config.bound:
        raise BoundExceededError(
            f"progression top {top} exceeds the sieve bound {config.bound}; "
            f"this scanner is desk-scale by design"
        )
    lo2 = max(lo, 2)
    if hi < lo2:
        return []
    primes = primes_array(lo2, top, config)
    mask = np.zeros(top - lo2 + 1, dtype=bool)
    mask[primes - lo2] = True
    cum = np.cumsum(mask)
    starts = primes[primes <= hi]
    hits = []
    for p0 in starts:
        p0 = int(p0)
        if all(mask[p0 + k * g - lo2] for k in range(1, J + 1)):
            inside = int(cum[p0 + J * g - lo2] - cum[p0 - lo2])
            hits.append(APHit(p0, inside == J))
    return hits
