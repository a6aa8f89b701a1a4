import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gapcycles.constellations import Constellation, nu, upsilon
from gapcycles.crt_instances import (
    enumerate_instances,
    images_under_replication,
    instance_from_residues,
    prime_ladder,
    scan_instances,
    to_primorial_coordinates,
    verify_instance,
)
from gapcycles.cycle_core import initial_cycle
from gapcycles.primes import primorial

S_PAPER = Constellation.parse("2,10,2,10,2")

AP22_GAMMA = 11410337850553
AP23_GAMMA = 56211383760397


def test_decompose_first_ap_example():
    coords = to_primorial_coordinates(AP22_GAMMA, 19, 41)
    assert str(coords) == "822463 + 3*19# + 19*23# + 27*29# + 19*31# + 1*37#"
    assert coords.value == AP22_GAMMA


def test_decompose_second_ap_example():
    coords = to_primorial_coordinates(AP23_GAMMA, 19, 41)
    assert str(coords) == "2164027 + 1*19# + 12*23# + 8*29# + 21*31# + 7*37#"
    assert coords.value == AP23_GAMMA


def test_decompose_small_value_has_zero_digits():
    coords = to_primorial_coordinates(822463, 19, 41)
    assert coords.base == 822463
    assert coords.digits == (0, 0, 0, 0, 0)


def test_decompose_range_guard():
    with pytest.raises(ValueError):
        to_primorial_coordinates(primorial(41), 19, 41)
    with pytest.raises(ValueError):
        to_primorial_coordinates(0, 19, 41)


def test_decompose_digit_bounds():
    rng = random.Random(42)
    ladder = prime_ladder(19, 41)
    for _ in range(10_000):
        gamma = rng.randrange(1, primorial(41))
        coords = to_primorial_coordinates(gamma, 19, 41)
        assert coords.value == gamma
        assert 0 <= coords.base < primorial(19)
        for m, bound in zip(coords.digits, ladder[1:]):
            assert 0 <= m < bound


@given(gamma=st.integers(1, primorial(23) - 1))
@settings(max_examples=300, deadline=None)
def test_decompose_roundtrip_property(gamma):
    coords = to_primorial_coordinates(gamma, 5, 23)
    assert coords.value == gamma


def test_ladder_validation():
    with pytest.raises(ValueError):
        prime_ladder(4, 11)
    with pytest.raises(ValueError):
        prime_ladder(11, 5)


def test_instance_from_residues_worked_example():
    # gamma0 = 11 is the twin 11,13 in G(5#); residue 1 mod 7 lifts it to 71
    assert instance_from_residues((2,), 11, 5, {7: 1}) == 71
    assert verify_instance((2,), 71, 7)


def test_instance_from_residues_rejects_bad_residue():
    with pytest.raises(ValueError, match="prime 7"):
        instance_from_residues((2,), 11, 5, {7: 0})


def test_instance_from_residues_rejects_bad_seed():
    with pytest.raises(ValueError, match="not an instance"):
        instance_from_residues((2,), 23, 5, {7: 1})


def test_instance_from_residues_needs_consecutive_ladder():
    with pytest.raises(ValueError, match="consecutive"):
        instance_from_residues((2,), 11, 5, {11: 1})


def test_verify_instance():
    assert verify_instance((2,), 11, 5)
    assert not verify_instance((2,), 23, 5)  # 25 = 5*5


def test_enumeration_counts_match_product():
    values = list(enumerate_instances((2,), 5, 7))
    assert len(values) == 15  # prod (q - nu_q) over q <= 7
    assert len(set(values)) == 15
    assert all(verify_instance((2,), v, 7) for v in values)


def test_bijection_twins_5_to_7():
    enumerated = sorted(enumerate_instances((2,), 5, 7))
    scanned = sorted(int(g) for g in scan_instances((2,), initial_cycle(7)))
    assert enumerated == scanned


def test_bijection_paper_constellation():
    enumerated = sorted(enumerate_instances(S_PAPER, 3, 11))
    scanned = sorted(int(g) for g in scan_instances(S_PAPER, initial_cycle(11)))
    assert enumerated == scanned
    assert len(enumerated) == 18  # 1*1*1*3*6


def test_replication_residues_cycle_all_classes():
    imgs = images_under_replication((2,), 11, 5, 7)
    assert sorted(i.residue for i in imgs) == list(range(7))
    assert sum(i.survives for i in imgs) == 7 - nu((2,), 7)
    assert sum(not i.survives for i in imgs) == nu((2,), 7)


def test_replication_survivors_are_instances():
    c13 = initial_cycle(13)
    gamma = int(scan_instances(S_PAPER, c13)[0])
    survivors = 0
    for img in images_under_replication(S_PAPER, gamma, 13, 17):
        assert img.survives == ((img.value % 17) in upsilon(S_PAPER, 17))
        assert img.survives == verify_instance(S_PAPER, img.value, 17)
        survivors += img.survives
    assert survivors == 17 - nu(S_PAPER, 17)


def test_enumerated_instances_verify():
    for gamma in enumerate_instances(S_PAPER, 3, 11):
        assert verify_instance(S_PAPER, gamma, 11)
