"""Cycles of gaps at each stage of Eratosthenes sieve.

At the stage where the prime p has been confirmed and its multiples removed,
the surviving candidates are the p-rough numbers (the units of Z mod p#), and
they repeat with period p#. The ordered differences between consecutive
survivors over one period form the cycle of gaps for that stage: length
phi(p#), span p#, first gap (next prime - 1), last gap 2, and the palindrome
symmetry g_i = g_{phi - i} for 1 <= i <= phi - 1.

The next cycle is produced from the current one by a three-step recursion:

  R1. the next prime is the first gap plus one;
  R2. concatenate p_next copies of the current cycle;
  R3. walk the concatenation (generators starting at 1) and fuse the two gaps
      adjacent to every generator p_next * r, where r runs over the current
      stage's rough numbers in [1, p#]. The first fusion adds g1 + g2, and the
      removal positions advance by the running sums of p_next * g_i.

Gaps are plain even ints >= 2, stored as numpy uint16 (the largest gap out to
the 29# cycle is far below 2**16; construction asserts on overflow). Spans and
generators use exact Python integers. Cycles are immutable after construction
and safe to share across workers; indexing is 1-based to keep g1..g_phi
readable.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .primes import is_prime, next_prime as next_prime_after, phi_primorial, primorial, prime_range

GAP_DTYPE = np.uint16
GAP_WIDTH_BYTES = 2
DEFAULT_MEMORY_BUDGET = 2**32
BOOTSTRAP_PRIMES = (3, 5, 7, 11, 13)

_MAGIC = b"GCYC"
_FORMAT_VERSION = 1


class MemoryBudgetError(RuntimeError):
    """Raised when materializing a cycle would exceed the memory budget."""


@dataclass(frozen=True, eq=False)
class GapCycle:
    """One stage of the sieve: the ordered even gaps of G(p#)."""

    stage_prime: int
    gaps: np.ndarray

    def __post_init__(self):
        if self.gaps.dtype != GAP_DTYPE:
            object.__setattr__(self, "gaps", self.gaps.astype(GAP_DTYPE))
        self.gaps.setflags(write=False)

    @property
    def length(self) -> int:
        return len(self.gaps)

    @property
    def span(self) -> int:
        return int(self.gaps.sum(dtype=np.int64))

    def g(self, i: int) -> int:
        """1-based gap accessor: g(1) ... g(length)."""
        if not 1 <= i <= len(self.gaps):
            raise IndexError(f"gap index {i} out of range 1..{len(self.gaps)}")
        return int(self.gaps[i - 1])

    def generators(self) -> np.ndarray:
        """The rough numbers 1, 1+g1, 1+g1+g2, ... over one period (int64)."""
        out = np.empty(len(self.gaps) + 1, dtype=np.int64)
        out[0] = 1
        np.cumsum(self.gaps, dtype=np.int64, out=out[1:])
        out[1:] += 1
        return out

    def __len__(self) -> int:
        return len(self.gaps)

    def __iter__(self) -> Iterator[int]:
        return (int(g) for g in self.gaps)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GapCycle)
            and self.stage_prime == other.stage_prime
            and np.array_equal(self.gaps, other.gaps)
        )

    def __repr__(self) -> str:
        head = ",".join(str(int(g)) for g in self.gaps[:8])
        tail = ",..." if len(self.gaps) > 8 else ""
        return f"GapCycle(p={self.stage_prime}, length={len(self.gaps)}, gaps=[{head}{tail}])"


@dataclass(frozen=True)
class FusionEvent:
    """One R3 fusion: the removed generator and the 1-based position of the
    gap (in the pristine concatenation) that absorbs its right neighbor."""

    removed_generator: int
    left_index: int


@dataclass
class CycleReport:
    """Pass/fail record for the GapCycle invariants."""

    stage_prime: int
    length_ok: bool
    span_ok: bool
    first_gap_ok: bool
    last_gap_ok: bool
    symmetric: bool
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def initial_cycle(p0: int) -> GapCycle:
    """G(p0#) by direct coprimality scan of [1, p0# + 1].

    Only the bootstrap primes 3..13 are supported; the scan is linear in p0#,
    so larger stages must chain through next_cycle or stream_gaps.
    """
    if p0 not in BOOTSTRAP_PRIMES:
        raise ValueError(f"bootstrap prime must be one of {BOOTSTRAP_PRIMES}, got {p0}")
    span = primorial(p0)
    mask = np.ones(span + 2, dtype=bool)
    mask[0] = False
    for q in prime_range(2, p0):
        mask[q::q] = False
    roughs = np.flatnonzero(mask)
    gaps = np.diff(roughs)
    if gaps.max() >= 2**16:
        raise OverflowError("gap exceeds 16-bit storage")
    return GapCycle(p0, gaps.astype(GAP_DTYPE))


def next_prime(c: GapCycle) -> int:
    """Step R1: the next prime is g1 + 1."""
    return int(c.gaps[0]) + 1


def _fusion_plan(c: GapCycle) -> tuple[int, np.ndarray, np.ndarray]:
    """Positions of the R3 fusions for the step G(p#) -> G(p_next#).

    Returns (p_next, removed, right0) where removed[j] is the j-th removed
    generator p_next * r_j (increasing) and right0[j] is the 0-based index, in
    the pristine concatenated gap list, of the gap absorbed into its left
    neighbor by that removal.
    """
    p_next = next_prime(c)
    span = c.span
    phi = len(c.gaps)
    roughs = c.generators()[:-1]  # the phi rough numbers in [1, p#]
    removed = p_next * roughs
    copy_index, residual = np.divmod(removed - 1, span)
    rank = np.searchsorted(roughs, residual + 1)
    right0 = copy_index * phi + rank
    return p_next, removed, right0


def fusion_events(c: GapCycle) -> Iterator[FusionEvent]:
    """The R3 fusions in increasing removed-generator order.

    Yields exactly phi(p#) events; consecutive removed generators differ by
    p_next * g_i >= 2 * p_next.
    """
    _, removed, right0 = _fusion_plan(c)
    for v, m in zip(removed, right0):
        yield FusionEvent(int(v), int(m))


def next_cycle(c: GapCycle, memory_budget: int | None = None) -> GapCycle:
    """Steps R1-R3: produce G(p_next#) from G(p#), materialized.

    Refuses with MemoryBudgetError when the working set would exceed the
    budget (default 2**32 bytes); use stream_gaps beyond that.
    """
    budget = DEFAULT_MEMORY_BUDGET if memory_budget is None else memory_budget
    p_next = next_prime(c)
    phi = len(c.gaps)
    phi_next = (p_next - 1) * phi
    # int32 concatenation + uint16 result + int64 fusion-plan arrays
    estimate = 4 * p_next * phi + 2 * phi_next + 24 * phi
    if estimate > budget:
        raise MemoryBudgetError(
            f"materializing G({p_next}#) needs ~{estimate} bytes "
            f"(budget {budget}); switch to stream_gaps"
        )
    _, _, right0 = _fusion_plan(c)
    tiled = np.tile(c.gaps.astype(np.int32), p_next)
    if len(right0) > 1 and int(np.diff(right0).min()) < 2:
        # cascading fusions (adjacent removals) must absorb right-to-left
        for m in right0[::-1]:
            tiled[m - 1] += tiled[m]
    else:
        tiled[right0 - 1] += tiled[right0]
    merged = np.delete(tiled, right0)
    if merged.max() >= 2**16:
        raise OverflowError("gap exceeds 16-bit storage")
    assert len(merged) == phi_next
    return GapCycle(p_next, merged.astype(GAP_DTYPE))


def _fused_factory(
    lower_factory: Callable[[], Iterator[int]], p_next: int, lower_count: int
) -> Callable[[], Iterator[int]]:
    """Lazy replay of one recursion level.

    Holds two cursors over the level below: one cycling p_next times for the
    concatenation, one (scaled by p_next) pacing the fusion positions.
    """

    def run() -> Iterator[int]:
        scale = lower_factory()
        next_removal = p_next
        remaining = lower_count
        pos = 1
        acc = 0
        for _ in range(p_next):
            for g in lower_factory():
                pos += g
                acc += g
                if pos == next_removal:
                    remaining -= 1
                    if remaining:
                        next_removal += p_next * next(scale)
                    else:
                        next_removal = 0
                else:
                    yield acc
                    acc = 0

    return run


def stream_gaps(p_target: int, p0: int = 13) -> Iterator[int]:
    """The gaps of G(p_target#), in order, without materializing cycles.

    Each recursion level holds two replayable cursors over the level below,
    so memory stays flat in the cycle length; the practical limit is the
    sheer gap count phi(p_target#) and, for very tall stacks (tens of
    levels), the multiplicative fan-out of suspended cursors.
    """
    if p0 not in BOOTSTRAP_PRIMES:
        raise ValueError(f"bootstrap prime must be one of {BOOTSTRAP_PRIMES}, got {p0}")
    if not is_prime(p_target) or p_target < p0:
        raise ValueError(f"target must be a prime >= {p0}, got {p_target}")
    base = initial_cycle(p0)
    base_gaps = [int(g) for g in base.gaps]

    def base_factory() -> Iterator[int]:
        return iter(base_gaps)

    factory: Callable[[], Iterator[int]] = base_factory
    count = len(base_gaps)
    p = p0
    while p < p_target:
        pn = next_prime_after(p)
        factory = _fused_factory(factory, pn, count)
        count *= pn - 1
        p = pn
    return factory()


def front_generators(p_target: int, limit: int, p0: int | None = None) -> np.ndarray:
    """Generators of G(p_target#) up to ``limit``, by iterated front fusion.

    Starts from the bootstrap cycle (tiled periodically up to the limit) and
    deletes, stage by stage, the generators p * r that fall below the limit —
    the prefix of step R3. The survivors in (p_target, p_target**2) are
    exactly the primes in that range.
    """
    if p0 is None:
        p0 = p_target if p_target <= 13 else 13
    base = initial_cycle(p0)
    if not is_prime(p_target) or p_target < p0:
        raise ValueError(f"target must be a prime >= {p0}, got {p_target}")
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    period = base.generators()[:-1]
    copies = limit // base.span + 1
    offsets = base.span * np.arange(copies, dtype=np.int64)
    roughs = (period[None, :] + offsets[:, None]).ravel()
    roughs = roughs[roughs <= limit]
    p = p0
    while p < p_target:
        pn = next_prime_after(p)
        targets = pn * roughs[roughs <= limit // pn]
        if len(targets):
            idx = np.searchsorted(roughs, targets)
            roughs = np.delete(roughs, idx)
        p = pn
    return roughs


def verify_cycle(c: GapCycle) -> CycleReport:
    """Check length, span, first/last gap, and symmetry against the stage."""
    p = c.stage_prime
    failures = []
    length_ok = len(c.gaps) == phi_primorial(p)
    if not length_ok:
        failures.append(f"length {len(c.gaps)} != phi({p}#) = {phi_primorial(p)}")
    span_ok = c.span == primorial(p)
    if not span_ok:
        failures.append(f"span {c.span} != {p}# = {primorial(p)}")
    expected_first = next_prime_after(p) - 1
    first_gap_ok = int(c.gaps[0]) == expected_first
    if not first_gap_ok:
        failures.append(f"first gap {int(c.gaps[0])} != next prime - 1 = {expected_first}")
    last_gap_ok = int(c.gaps[-1]) == 2
    if not last_gap_ok:
        failures.append(f"last gap {int(c.gaps[-1])} != 2")
    body = c.gaps[:-1]
    symmetric = bool(np.array_equal(body, body[::-1]))
    if not symmetric:
        failures.append("symmetry g_i = g_{phi-i} violated")
    return CycleReport(p, length_ok, span_ok, first_gap_ok, last_gap_ok, symmetric, failures)


def write_cycle_binary(c: GapCycle, path) -> None:
    """Binary export: "GCYC", version, stage prime (decimal), gap width,
    count, then the little-endian uint16 gap array."""
    prime_text = str(c.stage_prime).encode("ascii")
    header = struct.pack(
        f"<4sBBH{len(prime_text)}sQ",
        _MAGIC,
        _FORMAT_VERSION,
        GAP_WIDTH_BYTES,
        len(prime_text),
        prime_text,
        len(c.gaps),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(c.gaps.astype("<u2").tobytes())


def read_cycle_binary(path) -> GapCycle:
    with open(path, "rb") as fh:
        blob = fh.read()
    magic, version, width, prime_len = struct.unpack_from("<4sBBH", blob, 0)
    if magic != _MAGIC:
        raise ValueError(f"not a cycle file (magic {magic!r})")
    if version != _FORMAT_VERSION or width != GAP_WIDTH_BYTES:
        raise ValueError(f"unsupported cycle format (version {version}, width {width})")
    off = struct.calcsize("<4sBBH")
    prime = int(blob[off : off + prime_len].decode("ascii"))
    off += prime_len
    (count,) = struct.unpack_from("<Q", blob, off)
    off += 8
    gaps = np.frombuffer(blob, dtype="<u2", count=count, offset=off).astype(GAP_DTYPE)
    return GapCycle(prime, gaps)


def write_cycle_csv(c: GapCycle, path) -> None:
    """CSV export: a stage comment line, then one gap per line."""
    with open(path, "w") as fh:
        fh.write(f"# GCYC stage_prime={c.stage_prime}\n")
        for g in c.gaps:
            fh.write(f"{int(g)}\n")


def read_cycle_csv(path, stage_prime: int | None = None) -> GapCycle:
    gaps = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                if "stage_prime=" in line:
                    stage_prime = int(line.split("stage_prime=")[1])
                continue
            if line:
                gaps.append(int(line))
    if stage_prime is None:
        raise ValueError("stage prime missing: pass stage_prime= or keep the header line")
    return GapCycle(stage_prime, np.asarray(gaps, dtype=GAP_DTYPE))
