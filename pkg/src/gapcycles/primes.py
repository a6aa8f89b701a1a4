"""Small prime utilities shared across the package.

Everything here is desk scale: a one-shot sieve and trial division for the
stage primes that parametrize cycles and models (a few tens of thousands at
most). The heavy segmented sieve for censusing billions of integers lives in
``prime_census``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


def primes_up_to(n: int) -> np.ndarray:
    """All primes <= n, as an int64 array."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    mask = np.ones(n + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if mask[p]:
            mask[p * p :: p] = False
    return np.flatnonzero(mask).astype(np.int64)


def is_prime(n: int) -> bool:
    """Trial-division primality test; fine for stage primes."""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def next_prime(n: int) -> int:
    """Smallest prime strictly greater than n."""
    if n < 2:
        return 2
    m = n + 1
    if m == 2:
        return 2
    if m % 2 == 0:
        m += 1
    while not is_prime(m):
        m += 2
    return m


def prime_range(lo: int, hi: int) -> list[int]:
    """Primes p with lo <= p <= hi, as plain ints."""
    if hi < lo or hi < 2:
        return []
    ps = primes_up_to(hi)
    return [int(p) for p in ps[ps >= lo]]


@lru_cache(maxsize=None)
def primorial(p: int) -> int:
    """p# = product of all primes <= p (exact integer)."""
    out = 1
    for q in prime_range(2, p):
        out *= q
    return out


@lru_cache(maxsize=None)
def phi_primorial(p: int) -> int:
    """phi(p#) = product of (q - 1) over primes q <= p."""
    out = 1
    for q in prime_range(2, p):
        out *= q - 1
    return out
