import math
from fractions import Fraction

import pytest

from gapcycles.constellations import Constellation, count_populations, driving_terms
from gapcycles.population_model import (
    _scan_cycle,
    default_bootstrap,
    eigenvalue_products,
    evolve,
    evolve_counts,
    hl_weight,
    initial_population,
    lambda_param,
    lambda_power_diagnostic,
    matrix_product,
    pascal_eigensystem,
    transfer_matrix,
    transfer_product,
    w_asymptotic_closed,
    w_asymptotic_spectral,
    w_curve,
)
from gapcycles.primes import prime_range

S_PAPER = Constellation.parse("2,10,2,10,2")

BATTERY = [
    (2,), (4,), (6,), (2, 4), (4, 2), (2, 4, 2), (4, 2, 4), (6, 6, 6),
    (2, 10, 2), (2, 4, 6, 2), (6, 4, 2), (2, 10, 2, 10, 2),
]


def _identity(dim):
    return tuple(tuple(Fraction(int(i == j)) for j in range(dim)) for i in range(dim))


def test_transfer_matrix_values():
    assert transfer_matrix(1, 1, 5).rows == ((Fraction(1),),)
    m = transfer_matrix(5, 3, 17)
    assert m.rows[0][0] == 1
    assert m.rows[0][1] == Fraction(1, 11)
    m = transfer_matrix(3, 3, 7)
    assert m.rows == (
        (Fraction(1), Fraction(1, 3), Fraction(0)),
        (Fraction(0), Fraction(2, 3), Fraction(2, 3)),
        (Fraction(0), Fraction(0), Fraction(1, 3)),
    )


def test_transfer_matrix_rejects_small_p():
    with pytest.raises(ValueError):
        transfer_matrix(5, 3, 5)


def test_transfer_matrix_columns_sum_to_one():
    for J, p in ((1, 5), (3, 11), (5, 17)):
        m = transfer_matrix(J, 4, p)
        for col in range(4):
            assert sum(m.rows[row][col] for row in range(4)) == 1


def test_pascal_eigensystem_small():
    es = pascal_eigensystem(1)
    assert es.R == es.LT == ((Fraction(1),),)
    es = pascal_eigensystem(3)
    assert [[int(x) for x in row] for row in es.LT] == [[1, 1, 1], [0, 1, 2], [0, 0, 1]]
    assert [[int(x) for x in row] for row in es.R] == [[1, -1, 1], [0, 1, -2], [0, 0, 1]]


@pytest.mark.parametrize("dim", range(1, 13))
def test_pascal_inverse(dim):
    es = pascal_eigensystem(dim)
    assert matrix_product(es.R, es.LT) == _identity(dim)


def test_single_stage_diagonalization():
    # M_J(p) = R diag((p-J-i)/(p-J-1)) LT, one stage at a time
    for J, dim, p in ((3, 3, 11), (1, 4, 7), (5, 6, 29)):
        es = pascal_eigensystem(dim)
        d = [Fraction(p - J - i, p - J - 1) for i in range(1, dim + 1)]
        lam = tuple(tuple(d[i] if i == j else Fraction(0) for j in range(dim)) for i in range(dim))
        assert matrix_product(matrix_product(es.R, lam), es.LT) == transfer_matrix(J, dim, p).rows


@pytest.mark.parametrize("J,dim", [(1, 3), (3, 5), (5, 8), (3, 12)])
def test_spectral_identity_over_prime_ranges(J, dim):
    p0 = prime_range(J + dim + 1, 3 * (J + dim))[0]
    pks = prime_range(p0 + 1, 200)
    pk = pks[min(20, len(pks) - 1)]  # about 20 stages
    es = pascal_eigensystem(dim)
    a = eigenvalue_products(J, dim, p0, pk)
    lam = tuple(tuple(a[i] if i == j else Fraction(0) for j in range(dim)) for i in range(dim))
    assert transfer_product(J, dim, p0, pk) == matrix_product(matrix_product(es.R, lam), es.LT)


def test_eigenvalue_products_ordering():
    a = eigenvalue_products(3, 6, 13, 199)
    assert a[0] == 1
    assert all(x > 0 for x in a)
    assert all(a[i] > a[i + 1] for i in range(len(a) - 1))


def test_lambda_single_factor():
    assert lambda_param(3, 37, 41) == Fraction(36, 37)


def test_lambda_rejects_small_start():
    with pytest.raises(ValueError):
        lambda_param(3, 3, 41)


def test_lambda_at_paper_section():
    lam = float(lambda_param(3, 37, 35963))
    assert abs(lam - 0.35) <= 5e-3


def test_lambda_decreasing_like_inverse_log():
    values = [float(lambda_param(3, 37, pk)) for pk in (101, 1009, 10007)]
    assert values[0] > values[1] > values[2]
    # decay comparable to 1/ln pk: the product lambda * ln pk stays bounded
    products = [v * math.log(pk) for v, pk in zip(values, (101, 1009, 10007))]
    assert max(products) / min(products) < 2.0


def test_evolve_to_same_stage_is_identity():
    rp = initial_population(S_PAPER, 13)
    assert evolve(rp, 13) == rp


def test_twin_counts_from_model():
    out = evolve_counts((2,), {1: 3}, 5, 7)
    assert out == {1: 15}
    scan = count_populations((2,), _scan_cycle(7))
    assert scan.counts == out


def test_markov_exactness_from_13(python_battery=((2,), (6,), (2, 4, 2), S_PAPER)):
    for s in python_battery:
        s = Constellation.of(s)
        base = dict(count_populations(s, _scan_cycle(13)).counts)
        for stage in (17, 19):
            model = evolve_counts(s, base, 13, stage)
            scan = dict(count_populations(s, _scan_cycle(stage)).counts)
            assert model == scan, f"model diverges from scan for {s} at {stage}"


def test_evolve_matches_integer_form():
    rp = initial_population(S_PAPER, 13)
    out = evolve(rp, 19)
    counts = dict(count_populations(S_PAPER, _scan_cycle(19)).counts)
    norm = math.prod(q - S_PAPER.J - 1 for q in prime_range(S_PAPER.J + 2, 19))
    assert out.weights == tuple(Fraction(counts[j], norm) for j in sorted(counts))


def test_evolve_span_precondition():
    rp = initial_population((12, 12, 12))
    assert rp.stage_prime == 17  # 13 is too early for span 36
    with pytest.raises(ValueError, match="2\\*p1"):
        initial_population((12, 12, 12), 13)


def test_default_bootstrap():
    assert default_bootstrap((2,)) == 13
    assert default_bootstrap(S_PAPER) == 13
    assert default_bootstrap((12, 12, 12)) == 17


def test_w_asymptotic_spectral_examples():
    assert w_asymptotic_spectral((2,), 5) == 1
    assert w_asymptotic_spectral((6, 6, 6), 37) == 2
    assert w_asymptotic_spectral((12, 12, 12), 37) == 2


def test_w_asymptotic_spectral_independent_of_start():
    values = {w_asymptotic_spectral((6,), p0) for p0 in (5, 7, 11, 13, 17)}
    assert len(values) == 1
    values = {w_asymptotic_spectral(S_PAPER, p0) for p0 in (13, 17, 19, 37)}
    assert len(values) == 1


def test_w_asymptotic_closed_examples():
    assert w_asymptotic_closed((2,)) == 1
    assert w_asymptotic_closed((6, 6, 6)) == 2
    assert w_asymptotic_closed((12, 12, 12)) == 2
    assert w_asymptotic_closed((30, 30, 30)) == 8


def test_w_asymptotic_closed_rejects_inadmissible():
    with pytest.raises(ValueError):
        w_asymptotic_closed((2, 2))


@pytest.mark.parametrize("s", BATTERY)
def test_closed_equals_spectral(s):
    assert w_asymptotic_closed(s) == w_asymptotic_spectral(s, default_bootstrap(s))


def test_w_curve_endpoints_and_constant_twin():
    pts = w_curve((2,), 5, 31)
    assert pts[0].stage_prime == 5 and pts[0].lam == 1.0
    assert all(p.w[0] == 1.0 for p in pts)


def test_w_curve_monotone_lambda():
    pts = w_curve((6, 6, 6), 37, 1000)
    lams = [p.lam for p in pts]
    assert all(a > b for a, b in zip(lams, lams[1:]))
    assert pts[0].lam == 1.0


def test_population_ratio_of_different_lengths_decays():
    # a longer constellation loses ground to a shorter one, stage after stage
    short = initial_population((2,), 13)
    long = initial_population((2, 4, 2), 13)
    ratios = []
    for pk in prime_range(17, 199):
        short = evolve(short, pk)
        long = evolve(long, pk)
        n_short = short.w_J * math.prod(q - 2 for q in prime_range(3, pk))
        n_long = long.w_J * math.prod(q - 4 for q in prime_range(5, pk))
        ratios.append(Fraction(n_long, n_short))
    assert all(a > b for a, b in zip(ratios, ratios[1:]))


def test_hl_weight_twin():
    hw = hl_weight((2,))
    assert hw.H == 2
    # C_2 is the twin-prime constant; G = 2 * C_2
    assert abs(hw.C_truncated - 0.6601618) < 1e-4
    assert abs(hw.G_truncated - 1.3203236) < 2e-4
    assert hw.tail_bound < 1e-5


def test_hl_weight_mod3_doubling():
    assert hl_weight((6,)).H == 4
    assert hl_weight((6,)).H / hl_weight((2,)).H == 2


def test_hl_weight_proportional_to_w_inf():
    # H(s) / w_inf(s) depends only on J
    by_j = {}
    for s in BATTERY:
        s = Constellation.of(s)
        ratio = hl_weight(s).H / w_asymptotic_closed(s)
        by_j.setdefault(s.J, ratio)
        assert by_j[s.J] == ratio


def test_hl_weight_rejects_inadmissible():
    with pytest.raises(ValueError):
        hl_weight((2, 2))


def test_lambda_power_diagnostic_shape():
    diag = lambda_power_diagnostic(3, 4, 37, 199)
    assert diag[0][1] == 1.0
    assert diag[1][1] == pytest.approx(diag[1][2])
    for i, exact, approx in diag:
        assert exact > 0


def test_scan_cycle_rejects_unknown_stage():
    with pytest.raises(ValueError):
        _scan_cycle(29)
