"""Exact Markov-chain evolution of constellation populations.

Once the span of a constellation s is below twice the next stage prime, every
fusion of the recursion hits the images of s separately, and the populations
n_{s,j} of s and its driving terms (by length j = J..J1) evolve linearly from
one cycle to the next. In integer form the update at stage p is

    n_j  <-  (p - j - 1) * n_j + (j + 1 - J) * n_{j+1}

which conserves the aggregate identity  sum_j n_{s,j}(p#) = prod(q - nu_q(s)).
Dividing out the dominant growth prod_{J+1 < q <= p} (q - J - 1) gives the
relative populations w_{s,j}, driven by the banded transfer matrix with
diagonal (p - J - i)/(p - J - 1) and super-diagonal i/(p - J - 1). The matrix
family shares one eigenbasis: upper-triangular Pascal matrices (alternating
sign on the right-eigenvector side), with eigenvalue products

    a_i^k = prod_{p_1..p_k} (p - J - i)/(p - J - 1),      a_1^k = 1.

The decay parameter lambda = a_2^k tends to 0 like 1/ln p. The asymptotic
relative population is the first spectral coefficient, a finite product over
the odd primes dividing Q(s); the Hardy-Littlewood weight H(s) differs from
it only by a J-dependent constant.

All of this is exact rational arithmetic; floats appear only at the CSV/plot
boundary (12 significant digits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .constellations import Constellation, count_populations, driving_terms, is_admissible, nu, q_of
from .cycle_core import GapCycle, initial_cycle, next_cycle
from .primes import is_prime, next_prime, prime_range, primes_up_to

__all__ = [
    "TransferMatrix",
    "EigenSystem",
    "RelativePopulation",
    "CurvePoint",
    "HLWeight",
    "transfer_matrix",
    "pascal_eigensystem",
    "eigenvalue_products",
    "matrix_product",
    "transfer_product",
    "evolve",
    "evolve_counts",
    "lambda_param",
    "default_bootstrap",
    "initial_population",
    "population_from_counts",
    "w_asymptotic_spectral",
    "w_asymptotic_closed",
    "w_curve",
    "hl_weight",
]

# stages we are willing to materialize for initial-condition scans
_SCAN_STAGES = (3, 5, 7, 11, 13, 17, 19, 23)
_cycle_cache: dict[int, GapCycle] = {}


def _scan_cycle(p: int) -> GapCycle:
    """G(p#) for p <= 23, chained from the bootstrap and cached when small."""
    if p in _cycle_cache:
        return _cycle_cache[p]
    if p not in _SCAN_STAGES:
        raise ValueError(f"scan stage must be one of {_SCAN_STAGES}, got {p}")
    if p <= 13:
        cyc = initial_cycle(p)
    else:
        cyc = _scan_cycle(13)
        while cyc.stage_prime < p:
            cyc = next_cycle(cyc)
    if p <= 19:
        _cycle_cache[p] = cyc
    return cyc


@dataclass(frozen=True)
class TransferMatrix:
    """Banded stage-p update for the relative populations w_{s,j}."""

    J: int
    p: int
    rows: tuple[tuple[Fraction, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.rows)


def transfer_matrix(J: int, dim: int, p: int) -> TransferMatrix:
    """M_J(p): diagonal (p-J-i)/(p-J-1), super-diagonal i/(p-J-1), rows
    indexed i = 1..dim (row i carries driving-term length j = J + i - 1)."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if p <= J + 1:
        raise ValueError(f"transfer matrix needs p > J + 1, got p={p}, J={J}")
    den = p - J - 1
    rows = []
    for i in range(1, dim + 1):
        row = [Fraction(0)] * dim
        row[i - 1] = Fraction(p - J - i, den)
        if i < dim:
            row[i] = Fraction(i, den)
        rows.append(tuple(row))
    return TransferMatrix(J, p, tuple(rows))


@dataclass(frozen=True)
class EigenSystem:
    """Shared eigenbasis of the transfer family: R (alternating-sign Pascal)
    and LT (Pascal), both upper triangular, with R . LT = I exactly."""

    dim: int
    R: tuple[tuple[Fraction, ...], ...]
    LT: tuple[tuple[Fraction, ...], ...]


def pascal_eigensystem(dim: int) -> EigenSystem:
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    LT = tuple(
        tuple(Fraction(math.comb(m - 1, i - 1)) for m in range(1, dim + 1))
        for i in range(1, dim + 1)
    )
    R = tuple(
        tuple(Fraction((-1) ** (i + m) * math.comb(m - 1, i - 1)) for m in range(1, dim + 1))
        for i in range(1, dim + 1)
    )
    return EigenSystem(dim, R, LT)


def eigenvalue_products(J: int, dim: int, p0: int, pk: int) -> tuple[Fraction, ...]:
    """a_i^k = prod over primes p0 < p <= pk of (p - J - i)/(p - J - 1),
    for i = 1..dim. a_1^k is exactly 1."""
    out = [Fraction(1)] * dim
    for p in prime_range(next_prime(p0), pk):
        den = p - J - 1
        if den <= 0:
            raise ValueError(f"stage p={p} too small for J={J}")
        for i in range(2, dim + 1):
            out[i - 1] *= Fraction(p - J - i, den)
    return tuple(out)


def matrix_product(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]):
    n = len(a)
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)) for i in range(n)
    )


def transfer_product(J: int, dim: int, p0: int, pk: int) -> tuple[tuple[Fraction, ...], ...]:
    """prod M_J(p) over primes p0 < p <= pk, latest stage applied last
    (leftmost), exactly as the evolution composes."""
    out = tuple(
        tuple(Fraction(1 if i == j else 0) for j in range(dim)) for i in range(dim)
    )
    for p in prime_range(next_prime(p0), pk):
        out = matrix_product(transfer_matrix(J, dim, p).rows, out)
    return out


@dataclass(frozen=True)
class RelativePopulation:
    """Exact weights w_{s,j} = n_{s,j} / prod_{J+1<q<=p}(q-J-1) at one stage,
    with the decay parameter lambda accumulated since the initial stage."""

    constellation: Constellation
    stage_prime: int
    lengths: tuple[int, ...]
    weights: tuple[Fraction, ...]
    lam: Fraction = Fraction(1)

    @property
    def J(self) -> int:
        return self.constellation.J

    @property
    def w_J(self) -> Fraction:
        return self.weights[0]


def _require_markov_valid(s: Constellation, p0: int) -> None:
    p1 = next_prime(p0)
    if s.span >= 2 * p1:
        raise ValueError(
            f"span |s| = {s.span} violates |s| < 2*p1 = {2 * p1} for start stage {p0}; "
            f"start from a later stage"
        )


def _growth_norm(J: int, p0: int) -> int:
    out = 1
    for q in prime_range(next_prime(J + 1), p0):
        out *= q - J - 1
    return out


def population_from_counts(pc) -> RelativePopulation:
    """Relative weights from exact scan counts at the counted stage."""
    s = pc.constellation
    norm = _growth_norm(s.J, pc.stage_prime)
    lengths = tuple(sorted(pc.counts))
    weights = tuple(Fraction(pc.counts[j], norm) for j in lengths)
    return RelativePopulation(s, pc.stage_prime, lengths, weights)


def default_bootstrap(s) -> int:
    """Smallest materializable stage from which the population model of s is
    valid (span below twice the next prime); 13 is the floor since bigger
    bootstraps cost nothing there."""
    s = Constellation.of(s)
    for p in (13, 17, 19, 23):
        if s.span < 2 * next_prime(p):
            return p
    raise ValueError(f"span {s.span} too large for scan-based initial conditions (max 23#)")


def initial_population(s, p0: int | None = None) -> RelativePopulation:
    """Exact relative populations of s at stage p0.

    Counts come from a cycle scan at the smallest valid materializable stage;
    when p0 lies beyond it, the integer-form recursion (exact, validated
    against scans) carries the counts forward.
    """
    s = Constellation.of(s)
    if not is_admissible(s):
        raise ValueError(f"constellation {s} is not admissible")
    base = default_bootstrap(s)
    if p0 is None:
        p0 = base
    if not is_prime(p0):
        raise ValueError(f"stage prime expected, got {p0}")
    _require_markov_valid(s, p0)
    if p0 in _SCAN_STAGES:
        base = p0
    counts = dict(count_populations(s, _scan_cycle(base)).counts)
    counts = evolve_counts(s, counts, base, p0)
    lengths = tuple(sorted(counts))
    norm = _growth_norm(s.J, p0)
    weights = tuple(Fraction(counts[j], norm) for j in lengths)
    return RelativePopulation(s, p0, lengths, weights)


def evolve_counts(s, counts: dict[int, int], p_from: int, p_to: int) -> dict[int, int]:
    """Integer-form transfer recursion on exact counts, stage p_from -> p_to:
    n_j <- (p - j - 1) n_j + (j + 1 - J) n_{j+1} at each prime in between."""
    s = Constellation.of(s)
    _require_markov_valid(s, p_from)
    if p_to < p_from:
        raise ValueError(f"cannot evolve backwards from {p_from} to {p_to}")
    lengths = sorted(counts)
    n = [counts[j] for j in lengths]
    for p in prime_range(next_prime(p_from), p_to):
        nxt = []
        for idx, j in enumerate(lengths):
            v = (p - j - 1) * n[idx]
            if idx + 1 < len(n):
                v += (j + 1 - s.J) * n[idx + 1]
            nxt.append(v)
        n = nxt
    return dict(zip(lengths, n))


def evolve(rp: RelativePopulation, p_target: int) -> RelativePopulation:
    """Exact rational evolution of the relative populations to p_target."""
    s = rp.constellation
    _require_markov_valid(s, rp.stage_prime)
    if p_target < rp.stage_prime:
        raise ValueError(f"cannot evolve backwards from {rp.stage_prime} to {p_target}")
    J = s.J
    w = list(rp.weights)
    lam = rp.lam
    for p in prime_range(next_prime(rp.stage_prime), p_target):
        den = p - J - 1
        nxt = []
        for idx, j in enumerate(rp.lengths):
            v = Fraction(p - j - 1, den) * w[idx]
            if idx + 1 < len(w):
                v += Fraction(j + 1 - J, den) * w[idx + 1]
            nxt.append(v)
        w = nxt
        lam *= Fraction(p - J - 2, den)
    return RelativePopulation(s, p_target, rp.lengths, tuple(w), lam)


def lambda_param(J: int, p0: int, pk: int) -> Fraction:
    """The decay parameter prod_{p1 <= q <= pk} (q - J - 2)/(q - J - 1)."""
    if pk < p0:
        raise ValueError(f"need p0 < pk, got {p0} >= {pk}")
    p1 = next_prime(p0)
    if J + 2 >= p1:
        raise ValueError(f"lambda undefined: J + 2 = {J + 2} >= p1 = {p1}")
    out = Fraction(1)
    for q in prime_range(p1, pk):
        out *= Fraction(q - J - 2, q - J - 1)
    return out


def w_asymptotic_spectral(s, p0: int) -> Fraction:
    """w_{s,J}(infinity) as the first spectral coefficient: the first left
    eigenvector is all ones, so it is the sum of the weights at any valid
    start stage (the transfer matrices are column-stochastic)."""
    rp = initial_population(s, p0)
    return sum(rp.weights, Fraction(0))


def w_asymptotic_closed(s) -> Fraction:
    """Closed form over the odd primes dividing Q(s):
    prod_{q<=J+1}(q - nu_q) * prod_{q>J+1, q|Q}(q - nu_q)/(q - J - 1)."""
    s = Constellation.of(s)
    if not is_admissible(s):
        raise ValueError(f"constellation {s} is not admissible")
    J = s.J
    out = Fraction(1)
    for q in prime_range(2, J + 1):
        out *= q - nu(s, q)
    Q = q_of(s)
    for q in prime_range(J + 2, Q):
        if Q % q == 0:
            out *= Fraction(q - nu(s, q), q - J - 1)
    return out


@dataclass(frozen=True)
class CurvePoint:
    stage_prime: int
    lam: float
    w: tuple[float, ...]


def w_curve(s, p0: int | None = None, pk_max: int = 1000) -> list[CurvePoint]:
    """The evolution of the relative populations, one point per prime stage
    from p0 (lambda = 1) to pk_max.

    The march itself is the exact integer recursion; the floats rendered per
    point track it incrementally and are resynced from the exact state every
    few stages and at the final point, keeping the rendering error far below
    1e-12.
    """
    s = Constellation.of(s)
    rp = initial_population(s, p0)
    p0 = rp.stage_prime
    J = s.J
    norm = _growth_norm(J, p0)
    lengths = rp.lengths
    n = [int(w * norm) for w in rp.weights]
    norm_running = norm
    lam_num, lam_den = 1, 1
    wf = [float(w) for w in rp.weights]
    lam_f = 1.0
    points = [CurvePoint(p0, 1.0, tuple(wf))]
    stages = prime_range(next_prime(p0), pk_max)
    for step, p in enumerate(stages, start=1):
        den = p - J - 1
        nxt = []
        nxt_f = []
        for idx, j in enumerate(lengths):
            v = (p - j - 1) * n[idx]
            vf = (p - j - 1) * wf[idx]
            if idx + 1 < len(n):
                v += (j + 1 - J) * n[idx + 1]
                vf += (j + 1 - J) * wf[idx + 1]
            nxt.append(v)
            nxt_f.append(vf / den)
        n = nxt
        wf = nxt_f
        norm_running *= den
        lam_num *= p - J - 2
        lam_den *= den
        lam_f *= (p - J - 2) / den
        if step % 64 == 0 or step == len(stages):
            wf = [float(Fraction(v, norm_running)) for v in n]
            lam_f = float(Fraction(lam_num, lam_den))
        points.append(CurvePoint(p, lam_f, tuple(wf)))
    return points


@dataclass(frozen=True)
class HLWeight:
    """Hardy-Littlewood weight of s: the exact finite part H and the
    truncated singular-series constant C_{J+1} with a first-order tail."""

    constellation: Constellation
    H: Fraction
    C_truncated: float
    G_truncated: float
    tail_bound: float
    truncation: int


def hl_constant(J: int, truncation: int = 10**6) -> tuple[float, float]:
    """C_{J+1} = prod_{p>J+1} (p/(p-1))^J (p-J-1)/(p-1), truncated, with a
    first-order bound on the neglected log-tail."""
    total = 0.0
    for p in primes_up_to(truncation):
        p = int(p)
        if p <= J + 1:
            continue
        total += J * math.log(p / (p - 1)) + math.log((p - J - 1) / (p - 1))
    tail = (J * J + 2 * J) / truncation
    return math.exp(total), tail


def hl_weight(s, truncation: int = 10**6) -> HLWeight:
    """H(s) exact and G(s) = C_{J+1} H(s) truncated at the given prime bound.

    H(s) = prod_{p<=J+1} (p/(p-1))^J (p-nu_p)/(p-1)
         * prod_{p|Q, p>J+1} (p-nu_p)/(p-J-1).
    """
    s = Constellation.of(s)
    if not is_admissible(s):
        raise ValueError(f"constellation {s} is not admissible")
    J = s.J
    H = Fraction(1)
    for p in prime_range(2, J + 1):
        H *= Fraction(p, p - 1) ** J * Fraction(p - nu(s, p), p - 1)
    Q = q_of(s)
    for p in prime_range(J + 2, Q):
        if Q % p == 0:
            H *= Fraction(p - nu(s, p), p - J - 1)
    C, tail = hl_constant(J, truncation)
    return HLWeight(s, H, C, C * float(H), tail, truncation)


def lambda_power_diagnostic(J: int, dim: int, p0: int, pk: int) -> list[tuple[int, float, float]]:
    """Diagnostic only: compare the exact eigenvalue products a_i^k with the
    lambda**(i-1) approximation. Never used in computation."""
    a = eigenvalue_products(J, dim, p0, pk)
    lam = float(a[1]) if dim > 1 else 0.0
    return [(i + 1, float(a[i]), lam**i) for i in range(dim)]
