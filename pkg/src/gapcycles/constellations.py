"""Constellation algebra over even prime gaps.

A constellation is a sequence of J consecutive gaps; fixing its first
generator gamma_0 determines the (J+1)-tuple gamma_j = gamma_{j-1} + g_j.
This module computes, per prime p:

  * nu_p(s)      — residue classes mod p covered by any instance of s;
  * Upsilon_s(p) — initial residues for which every generator avoids 0 mod p
                   (cardinality p - nu_p(s));
  * admissibility (nu_p < p for all p, automatic beyond p = J + 1);
  * Q(s)         — the product of odd primes dividing some span between
                   generators of s;

and enumerates the driving terms of s: the longer constellations of equal
span whose cumulative sums contain those of s, so that interior fusions
collapse them back onto s. Occurrences of s and of each driving-term length
are counted in one pass over a gap cycle, with windows evaluated cyclically
across the wrap.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

import numpy as np

from .cycle_core import GapCycle
from .primes import prime_range

__all__ = [
    "Constellation",
    "DrivingTerm",
    "PopulationCount",
    "nu",
    "upsilon",
    "is_admissible",
    "q_of",
    "driving_terms",
    "is_driving_term",
    "count_populations",
]


@dataclass(frozen=True)
class Constellation:
    """An ordered sequence of J positive even gaps."""

    gaps: tuple[int, ...]

    def __post_init__(self):
        gaps = tuple(int(g) for g in self.gaps)
        if not gaps:
            raise ValueError("constellation needs at least one gap")
        for g in gaps:
            if g < 2 or g % 2:
                raise ValueError(f"gaps must be even and >= 2, got {g}")
        object.__setattr__(self, "gaps", gaps)

    @classmethod
    def of(cls, obj) -> "Constellation":
        if isinstance(obj, Constellation):
            return obj
        if isinstance(obj, str):
            return cls.parse(obj)
        return cls(tuple(obj))

    @classmethod
    def parse(cls, text: str) -> "Constellation":
        """Parse the comma-separated text form, e.g. "2,10,2,10,2"."""
        try:
            gaps = tuple(int(part) for part in text.split(","))
        except ValueError as exc:
            raise ValueError(f"bad constellation text {text!r}") from exc
        return cls(gaps)

    @property
    def J(self) -> int:
        return len(self.gaps)

    @property
    def span(self) -> int:
        return sum(self.gaps)

    def generators(self) -> tuple[int, ...]:
        """Cumulative sums 0 = gamma_0, gamma_1, ..., gamma_J = span."""
        out = [0]
        for g in self.gaps:
            out.append(out[-1] + g)
        return tuple(out)

    def __len__(self) -> int:
        return len(self.gaps)

    def __str__(self) -> str:
        return ",".join(str(g) for g in self.gaps)


def nu(s, p: int) -> int:
    """Number of residue classes mod p covered by an instance of s."""
    s = Constellation.of(s)
    return len({c % p for c in s.generators()})


def upsilon(s, p: int) -> frozenset[int]:
    """Admissible initial residues mod p: those keeping every generator
    nonzero mod p. Cardinality is p - nu_p(s)."""
    s = Constellation.of(s)
    forbidden = {(-c) % p for c in s.generators()}
    return frozenset(r for r in range(p) if r not in forbidden)


def is_admissible(s) -> bool:
    """True iff nu_p(s) < p for every prime p <= J + 1 (larger p automatic)."""
    s = Constellation.of(s)
    return all(nu(s, q) < q for q in prime_range(2, s.J + 1))


def q_of(s) -> int:
    """Q(s): product of the distinct odd primes dividing some span between
    generators of s (pairwise differences of the cumulative sums)."""
    s = Constellation.of(s)
    if not is_admissible(s):
        raise ValueError(f"constellation {s} is not admissible")
    gens = s.generators()
    diffs = {gens[j] - gens[i] for i in range(len(gens)) for j in range(i + 1, len(gens))}
    out = 1
    for q in prime_range(3, max(diffs)):
        if any(d % q == 0 for d in diffs):
            out *= q
    return out


@dataclass(frozen=True)
class DrivingTerm:
    """A constellation of span |s| whose cumulative sums contain those of s.

    boundary_positions are the J+1 cumulative positions matching s (fusing
    there destroys the term as a driving term); interior_positions are the
    j - J others (fusing there yields another driving term of s).
    """

    gaps: Constellation
    boundary_positions: tuple[int, ...]
    interior_positions: tuple[int, ...]

    @property
    def length(self) -> int:
        return self.gaps.J


@lru_cache(maxsize=None)
def _even_compositions(g: int) -> tuple[tuple[int, ...], ...]:
    """All ordered compositions of g into even parts >= 2."""
    if g == 0:
        return ((),)
    out = []
    for first in range(2, g + 1, 2):
        for rest in _even_compositions(g - first):
            out.append((first,) + rest)
    return tuple(out)


def is_driving_term(t, s) -> bool:
    """True iff t has the span of s and the cumulative sums of s are a
    subsequence of the cumulative sums of t."""
    t = Constellation.of(t)
    s = Constellation.of(s)
    return t.span == s.span and set(s.generators()) <= set(t.generators())


def driving_terms(s, include_self: bool = True) -> list[DrivingTerm]:
    """All admissible driving terms of s, enumerated by replacing each gap
    with an even composition and pruning by residue coverage at each prefix.

    The all-2 composition caps the length at |s| / 2, so enumeration always
    terminates; results are sorted by (length, gaps).
    """
    s = Constellation.of(s)
    if not is_admissible(s):
        raise ValueError(f"constellation {s} is not admissible")
    max_len = s.span // 2
    check_primes = prime_range(2, max_len + 1)
    s_gens = set(s.generators())

    results: list[Constellation] = []

    def extend(i: int, prefix: list[int], pos: int, coverage: dict[int, set[int]]):
        if i == s.J:
            results.append(Constellation(tuple(prefix)))
            return
        for parts in _even_compositions(s.gaps[i]):
            cums = []
            c = pos
            for part in parts:
                c += part
                cums.append(c)
            new_cov = {}
            dead = False
            for q, seen in coverage.items():
                upd = seen | {c % q for c in cums}
                if len(upd) == q:
                    dead = True
                    break
                new_cov[q] = upd
            if dead:
                continue
            extend(i + 1, prefix + list(parts), cums[-1], new_cov)

    extend(0, [], 0, {q: {0} for q in check_primes})

    out = []
    for t in sorted(results, key=lambda t: (t.J, t.gaps)):
        if not include_self and t.gaps == s.gaps:
            continue
        if not is_admissible(t):  # coverage pruning only sees primes <= max_len + 1
            continue
        gens = t.generators()
        boundary = tuple(k for k, c in enumerate(gens) if c in s_gens)
        interior = tuple(k for k, c in enumerate(gens) if c not in s_gens)
        out.append(DrivingTerm(t, boundary, interior))
    return out


@dataclass(frozen=True)
class PopulationCount:
    """Exact counts n_{s,j} of s and its driving terms, by length j, in one
    cycle of gaps."""

    constellation: Constellation
    stage_prime: int
    counts: dict[int, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(sorted(self.counts))


def _count_vectorized(gaps: np.ndarray, terms: list[DrivingTerm]) -> dict[int, int]:
    n = len(gaps)
    max_len = max(t.length for t in terms)
    if max_len > 1:
        need = n + max_len - 1
        ext = np.tile(gaps, (need + n - 1) // n)[:need]
    else:
        ext = gaps
    counts: dict[int, int] = {}
    for term in terms:
        seq = term.gaps.gaps
        mask = ext[:n] == seq[0]
        for k in range(1, len(seq)):
            mask = mask & (ext[k : k + n] == seq[k])
        counts[term.length] = counts.get(term.length, 0) + int(np.count_nonzero(mask))
    return counts


def _count_stream(gaps: Iterable[int], terms: list[DrivingTerm]) -> dict[int, int]:
    """Single-pass rolling-window count against a trie of the driving terms."""
    trie: dict = {}
    for term in terms:
        node = trie
        for g in term.gaps.gaps:
            node = node.setdefault(g, {})
        node[None] = term.length
    max_len = max(t.length for t in terms)
    counts: dict[int, int] = {t.length: 0 for t in terms}

    window: deque[int] = deque()
    head: list[int] = []  # first max_len - 1 gaps, replayed across the wrap
    for g in gaps:
        g = int(g)
        if len(head) < max_len - 1:
            head.append(g)
        window.append(g)
        if len(window) == max_len:
            _walk(trie, window, counts)
            window.popleft()
    k = 0
    for _ in range(len(window)):
        while len(window) < max_len and head:
            window.append(head[k % len(head)])
            k += 1
        _walk(trie, window, counts)
        window.popleft()
    return counts


def _walk(trie: dict, window, counts: dict[int, int]) -> None:
    node = trie
    for g in window:
        node = node.get(g)
        if node is None:
            return
        j = node.get(None)
        if j is not None:
            counts[j] += 1


def count_populations(s, cycle, stage_prime: int | None = None) -> PopulationCount:
    """Count occurrences of s and of each driving-term length j in one full
    cycle of gaps, windows wrapping across the cycle end.

    Accepts a GapCycle, a gap array, or a gap stream (stream needs an
    explicit stage_prime). Requires the stage to be large enough that every
    window of span |s| is one of the admissible driving terms: p at least the
    largest prime <= |s|/2 + 1, and |s| < p#.
    """
    s = Constellation.of(s)
    terms = driving_terms(s)
    if isinstance(cycle, GapCycle):
        gaps: Iterable[int] | np.ndarray = cycle.gaps
        p = cycle.stage_prime
    else:
        gaps = cycle
        p = stage_prime
    if p is None:
        raise ValueError("stage_prime is required when counting a bare gap stream")
    # A window of span |s| occurring at stage p is always one of the fully
    # admissible driving terms unless some prime q in (p, |s|/2] could cover
    # all residues inside a window (q = |s|/2 + 1 would force the all-2
    # window, which dies mod 3). Odd primes only: even gaps never cover mod 2.
    guard = prime_range(3, s.span // 2)
    if guard and p < guard[-1]:
        raise ValueError(
            f"stage prime {p} too small to classify span-{s.span} windows "
            f"(needs p >= {guard[-1]})"
        )
    if isinstance(gaps, np.ndarray):
        counts = _count_vectorized(gaps, terms)
    else:
        counts = _count_stream(gaps, terms)
    full = {t.length: 0 for t in terms}
    full.update(counts)
    return PopulationCount(s, p, full)
