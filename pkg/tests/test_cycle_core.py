import math

import numpy as np
import pytest

from gapcycles.cycle_core import (
    BOOTSTRAP_PRIMES,
    GapCycle,
    MemoryBudgetError,
    front_generators,
    fusion_events,
    initial_cycle,
    next_cycle,
    next_prime,
    read_cycle_binary,
    read_cycle_csv,
    stream_gaps,
    verify_cycle,
    write_cycle_binary,
    write_cycle_csv,
)
from gapcycles.primes import next_prime as next_prime_after, phi_primorial, primes_up_to, primorial


@pytest.fixture(scope="module")
def chain():
    """G(3#) .. G(19#) by the recursion."""
    cycles = {3: initial_cycle(3)}
    p = 3
    while p < 19:
        cycles[next_prime(cycles[p])] = next_cycle(cycles[p])
        p = next_prime(cycles[p])
    return cycles


def test_initial_cycles_match_known_values():
    assert list(initial_cycle(3)) == [4, 2]
    assert list(initial_cycle(5)) == [6, 4, 2, 4, 2, 4, 6, 2]
    c7 = initial_cycle(7)
    assert c7.length == 48
    assert c7.span == 210


def test_initial_cycle_rejects_bad_bootstrap():
    for bad in (2, 4, 9, 17, 1):
        with pytest.raises(ValueError):
            initial_cycle(bad)


@pytest.mark.parametrize("p0", BOOTSTRAP_PRIMES)
def test_bootstrap_invariants(p0):
    c = initial_cycle(p0)
    assert c.length == phi_primorial(p0)
    assert c.span == primorial(p0)
    assert c.g(1) == next_prime_after(p0) - 1
    assert c.g(c.length) == 2
    body = c.gaps[:-1]
    assert np.array_equal(body, body[::-1])


def test_next_prime_op(chain):
    assert next_prime(chain[3]) == 5
    assert next_prime(chain[5]) == 7
    assert next_prime(initial_cycle(13)) == 17


def test_next_cycle_equals_scan_oracle(chain):
    for p in (5, 7, 11, 13):
        assert chain[p] == initial_cycle(p)


def test_chain_invariants_to_19(chain):
    for p, c in chain.items():
        report = verify_cycle(c)
        assert report.passed, report.failures


def test_fusion_events_from_g3():
    events = list(fusion_events(initial_cycle(3)))
    assert [(e.removed_generator, e.left_index) for e in events] == [(5, 1), (25, 8)]


def test_fusion_events_from_g5_brute_force():
    span = 30
    expected = {7 * r for r in range(1, span + 1) if math.gcd(r, span) == 1}
    events = list(fusion_events(initial_cycle(5)))
    assert {e.removed_generator for e in events} == expected
    assert {e.removed_generator for e in events} == {7, 49, 77, 91, 119, 133, 161, 203}
    assert len(events) == phi_primorial(5)


def test_fusion_count_and_spacing(chain):
    for p in (5, 7, 11, 13):
        removed = [e.removed_generator for e in fusion_events(chain[p])]
        assert len(removed) == phi_primorial(p)
        p_next = next_prime(chain[p])
        diffs = np.diff(removed)
        assert diffs.min() >= 2 * p_next


def test_stream_matches_paper_example():
    assert list(stream_gaps(5, 3)) == [6, 4, 2, 4, 2, 4, 6, 2]


def test_stream_counts_and_span():
    gaps = list(stream_gaps(13, 3))
    assert len(gaps) == 5760
    assert sum(gaps) == 30030


@pytest.mark.parametrize("p0", (3, 13))
def test_stream_equals_materialized_chain(chain, p0):
    for p in (13, 17, 19):
        if p < p0:
            continue
        streamed = np.fromiter(stream_gaps(p, p0), dtype=np.uint16, count=phi_primorial(p))
        assert np.array_equal(streamed, chain[p].gaps)


def test_stream_rejects_bad_args():
    with pytest.raises(ValueError):
        stream_gaps(4, 3)
    with pytest.raises(ValueError):
        stream_gaps(19, 4)


def test_verify_cycle_flags_perturbation():
    c = initial_cycle(5)
    bad = c.gaps.copy()
    bad[2] = 4
    report = verify_cycle(GapCycle(5, bad))
    assert not report.span_ok
    assert not report.passed


def test_front_generators_match_sieve_primes():
    primes = primes_up_to(101 * 101)
    for p in (3, 5, 7, 11, 13, 17, 19, 37, 61, 101):
        roughs = front_generators(p, p * p)
        inside = roughs[(roughs > p) & (roughs < p * p)]
        expected = primes[(primes > p) & (primes < p * p)]
        assert np.array_equal(inside, expected), f"front of G({p}#) disagrees with the sieve"


def test_front_generators_beyond_one_period():
    # the bootstrap period tiles, so fronts past p0# still match the sieve
    primes = primes_up_to(250)
    roughs = front_generators(13, 250, p0=3)
    inside = roughs[(roughs > 13) & (roughs < 169)]
    expected = primes[(primes > 13) & (primes < 169)]
    assert np.array_equal(inside, expected)


def test_memory_budget_refusal():
    with pytest.raises(MemoryBudgetError):
        next_cycle(initial_cycle(13), memory_budget=1000)


def test_binary_roundtrip(tmp_path):
    c = initial_cycle(11)
    path = tmp_path / "c11.gcyc"
    write_cycle_binary(c, path)
    back = read_cycle_binary(path)
    assert back == c


def test_binary_rejects_garbage(tmp_path):
    path = tmp_path / "junk.gcyc"
    path.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(ValueError):
        read_cycle_binary(path)


def test_csv_roundtrip(tmp_path):
    c = initial_cycle(7)
    path = tmp_path / "c7.csv"
    write_cycle_csv(c, path)
    back = read_cycle_csv(path)
    assert back == c


def test_generators_front_are_primes_small():
    # generators of G(p#) in (p, p^2) are primes: spot-check via the cycle itself
    c = initial_cycle(7)
    gens = c.generators()
    inside = gens[(gens > 7) & (gens < 49)]
    assert list(inside) == [11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]
