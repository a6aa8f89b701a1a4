"""Constructive enumeration of admissible constellation instances.

Every instance of a constellation s in the cycle G(p_k#) is reached from a
seed instance gamma_0 in G(p_0#) by choosing, for each prime p_i on the
ladder p_0 < p_1 < ... < p_k, an admissible residue r_i in Upsilon_s(p_i):
exactly one digit 0 <= m_i < p_i then makes

    gamma_{0,i} = gamma_{0,i-1} + m_i * p_{i-1}#

hit r_i mod p_i while preserving all earlier residues. The map from residue
tuples to instances is a bijection, and the mixed-radix expansion

    gamma = base + m_1 * p_0# + m_2 * p_1# + ... + m_k * p_{k-1}#

(with base < p_0# and 0 <= m_i < p_i) is the instance's primorial-coordinate
form. Generator arithmetic is exact unbounded integers throughout.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .constellations import Constellation, upsilon
from .cycle_core import GapCycle
from .primes import is_prime, next_prime, prime_range, primorial

__all__ = [
    "PrimorialCoordinates",
    "to_primorial_coordinates",
    "instance_from_residues",
    "enumerate_instances",
    "images_under_replication",
    "verify_instance",
    "scan_instances",
    "prime_ladder",
]


def prime_ladder(p0: int, pk: int) -> list[int]:
    """Consecutive primes p0 < p1 < ... < pk, both endpoints included."""
    if not is_prime(p0) or not is_prime(pk):
        raise ValueError(f"ladder endpoints must be prime, got {p0}..{pk}")
    if pk < p0:
        raise ValueError(f"ladder endpoints out of order: {p0}..{pk}")
    return prime_range(p0, pk)


@dataclass(frozen=True)
class PrimorialCoordinates:
    """Mixed-radix form gamma = base + sum m_i * p_{i-1}# over a prime ladder.

    ladder[0] = p_0 bounds the base (base < p_0#); digits[i] = m_{i+1} < p_{i+1}
    multiplies p_i#. The representation is unique for 0 <= gamma < p_k#.
    """

    base: int
    ladder: tuple[int, ...]
    digits: tuple[int, ...]

    def __post_init__(self):
        if len(self.digits) != len(self.ladder) - 1:
            raise ValueError("one digit per ladder step expected")

    @property
    def value(self) -> int:
        out = self.base
        for m, q in zip(self.digits, self.ladder[:-1]):
            out += m * primorial(q)
        return out

    def __str__(self) -> str:
        parts = [str(self.base)]
        parts += [f"{m}*{q}#" for m, q in zip(self.digits, self.ladder[:-1])]
        return " + ".join(parts)


def to_primorial_coordinates(gamma: int, p0: int, pk: int) -> PrimorialCoordinates:
    """Greedy mixed-radix decomposition of gamma over the ladder p0..pk.

    Digits are extracted from p_{k-1}# downward; the digit bounds m_i < p_i
    hold automatically for 0 < gamma < p_k#.
    """
    ladder = prime_ladder(p0, pk)
    if not 0 < gamma < primorial(pk):
        raise ValueError(f"gamma {gamma} outside (0, {pk}#) for ladder {p0}..{pk}")
    rem = gamma
    digits: list[int] = []
    for q in reversed(ladder[:-1]):
        m, rem = divmod(rem, primorial(q))
        digits.append(int(m))
    digits.reverse()
    return PrimorialCoordinates(int(rem), tuple(ladder), tuple(digits))


def verify_instance(s, gamma: int, p: int) -> bool:
    """True iff every generator gamma + c of the instance is p-rough, by
    trial division over the primes of the ladder only."""
    s = Constellation.of(s)
    gens = s.generators()
    for q in prime_range(2, p):
        if any((gamma + c) % q == 0 for c in gens):
            return False
    return True


def instance_from_residues(s, gamma0: int, p0: int, residues: dict[int, int]) -> int:
    """The unique instance below p_k# extending gamma0 with the chosen
    admissible residues r_i mod p_i.

    ``residues`` maps each ladder prime p_i (consecutive primes after p0) to
    the desired residue of the initial generator; every r_i must lie in
    Upsilon_s(p_i), otherwise the offending prime is named.
    """
    s = Constellation.of(s)
    if not verify_instance(s, gamma0, p0):
        raise ValueError(f"gamma0 = {gamma0} is not an instance of {s} at stage {p0}")
    ladder = sorted(residues)
    expect = p0
    for p in ladder:
        expect = next_prime(expect)
        if p != expect:
            raise ValueError(f"ladder must be consecutive primes after {p0}; missing {expect}")
    gamma = gamma0
    P = primorial(p0)
    for p in ladder:
        r = residues[p] % p
        if r not in upsilon(s, p):
            raise ValueError(f"residue {residues[p]} is not admissible for prime {p}")
        m = ((r - gamma) * pow(P % p, -1, p)) % p
        gamma += m * P
        P *= p
    return gamma


def enumerate_instances(s, p0: int, pk: int, seeds=None) -> Iterator[int]:
    """All instances of s (and its driving terms) in G(pk#), streamed in
    lexicographic residue order over the ladder.

    Seeds default to the scan of G(p0#); the yield count is the product of
    (q - nu_q(s)) over q <= pk.
    """
    s = Constellation.of(s)
    if seeds is None:
        from .cycle_core import initial_cycle

        seeds = [int(g) for g in scan_instances(s, initial_cycle(p0))]
    ladder = prime_range(next_prime(p0), pk)
    upsilons = [sorted(upsilon(s, p)) for p in ladder]
    for gamma0 in seeds:
        for combo in itertools.product(*upsilons):
            yield instance_from_residues(s, gamma0, p0, dict(zip(ladder, combo)))


@dataclass(frozen=True)
class ReplicationImage:
    value: int
    residue: int
    survives: bool


def images_under_replication(s, gamma: int, p_k: int, p_next: int) -> list[ReplicationImage]:
    """The p_next images gamma + m * p_k# of an instance, labeled by survival:
    an image survives iff its residue mod p_next is admissible. Exactly
    nu_{p_next}(s) images are eliminated."""
    s = Constellation.of(s)
    P = primorial(p_k)
    ups = upsilon(s, p_next)
    out = []
    for m in range(p_next):
        v = gamma + m * P
        r = v % p_next
        out.append(ReplicationImage(v, r, r in ups))
    return out


def scan_instances(s, cycle: GapCycle) -> np.ndarray:
    """All initial generators gamma0 in [1, p#] whose instance of s survives
    in the cycle (roughness is periodic, so spans may wrap)."""
    s = Constellation.of(s)
    span = cycle.span
    roughs = cycle.generators()[:-1]
    mask = np.zeros(span, dtype=bool)
    mask[roughs % span] = True
    ok = np.ones(len(roughs), dtype=bool)
    for c in s.generators():
        ok &= mask[(roughs + c) % span]
    return roughs[ok]
