"""One-dimensional fluctuation identities and bivariate half-plane bounds."""

import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intwalk import (
    IntwalkConfigError,
    PositivitySeq,
    TooLarge,
    corollary_independence_check,
    coupled_coin,
    correlated_coin,
    five_atom_bspec,
    halfplane_measures,
    independent_coins,
    named_bspec,
    positivity_probs,
    series_diagnostic,
    sparre_andersen,
    symmetric_continuous_qn,
)

# frozen: simple walk P(S_n > 0) and P(S_n >= 0), n = 1..6
SIMPLE_STRICT = (F(1, 2), F(1, 4), F(1, 2), F(5, 16), F(1, 2), F(11, 32))
SIMPLE_WEAK = (F(1, 2), F(3, 4), F(1, 2), F(11, 16), F(1, 2), F(21, 32))

# frozen: q_n = P(S_1 > 0, ..., S_n > 0) for the simple walk
SIMPLE_QN = [F(1), F(1, 2), F(1, 4), F(1, 4), F(3, 16), F(3, 16), F(5, 32)]


def brute_force_qn(spec, n, strict=True):
    head, tail = spec.lattice_table()
    assert tail is None
    atoms = [(v, q) for v, q in head.items() if q > 0]
    total = F(0)
    for path in itertools.product(atoms, repeat=n):
        s = 0
        mass = F(1)
        ok = True
        for x, q in path:
            mass *= q
            s += x
            if (s <= 0) if strict else (s < 0):
                ok = False
                break
        if ok:
            total += mass
    return total


def test_positivity_frozen(simple):
    assert positivity_probs(simple, 6).probs == SIMPLE_STRICT
    assert positivity_probs(simple, 6, mode="weak").probs == SIMPLE_WEAK


def test_positivity_at_is_one_based(simple):
    seq = positivity_probs(simple, 6)
    assert seq.at(1) == F(1, 2)
    assert seq.at(6) == F(11, 32)
    assert len(seq) == 6


def test_positivity_rejects_bad_mode(simple):
    with pytest.raises(IntwalkConfigError):
        positivity_probs(simple, 4, mode="loose")
    with pytest.raises(IntwalkConfigError):
        PositivitySeq(probs=(0.5,), mode="loose")
    with pytest.raises(ValueError):
        PositivitySeq(probs=(1.5,))


def test_sparre_andersen_frozen(simple):
    assert sparre_andersen(positivity_probs(simple, 6)) == SIMPLE_QN


@pytest.mark.parametrize("name,strict", [
    ("simple", True), ("simple", False),
    ("lazy(1/2)", True), ("lazy(1/2)", False),
])
def test_sparre_andersen_brute_force(name, strict):
    from intwalk import named_spec

    spec = named_spec(name)
    mode = "strict" if strict else "weak"
    q = sparre_andersen(positivity_probs(spec, 5, mode=mode))
    for n in range(1, 6):
        assert q[n] == brute_force_qn(spec, n, strict=strict)


def test_sparre_andersen_monotone_for_walks(lazy):
    q = sparre_andersen(positivity_probs(lazy, 12))
    assert all(b <= a for a, b in zip(q, q[1:]))


@given(
    probs=st.lists(
        st.fractions(min_value=0, max_value=1, max_denominator=20),
        min_size=1, max_size=10,
    )
)
@settings(max_examples=60, deadline=None)
def test_sparre_andersen_stays_in_unit_interval(probs):
    q = sparre_andersen(probs)
    assert q[0] == 1
    assert all(0 <= v <= 1 for v in q)


def test_sparre_andersen_all_positive_is_constant():
    assert sparre_andersen([F(1)] * 8) == [F(1)] * 9


def test_universal_qn_values():
    assert symmetric_continuous_qn(0) == 1
    assert symmetric_continuous_qn(1) == F(1, 2)
    assert symmetric_continuous_qn(5) == F(63, 256)
    for n in range(12):
        assert symmetric_continuous_qn(n) == F(math.comb(2 * n, n), 4**n)
    with pytest.raises(ValueError):
        symmetric_continuous_qn(-1)


def test_universal_qn_matches_recursion():
    """Feeding the constant sequence P(S_n > 0) = 1/2 into the recursion
    must reproduce the distribution-free values."""
    q = sparre_andersen([F(1, 2)] * 10)
    for n in range(11):
        assert q[n] == symmetric_continuous_qn(n)


def test_series_diagnostic(simple):
    seq = positivity_probs(simple, 8)
    partial = series_diagnostic(seq, alpha=2.0)
    assert partial.shape == (8,)
    assert partial[0] == 0.0  # P(S_1 > 0) = 1/2 exactly
    # every term is <= 0 for the simple walk at alpha = 2, and the series
    # converges to -(log 2)/2
    assert np.all(np.diff(partial) <= 0)
    assert partial[-1] > -math.log(2) / 2
    with pytest.raises(IntwalkConfigError):
        series_diagnostic(positivity_probs(simple, 4, mode="weak"), alpha=2.0)


# ---------------------------------------------------------------------------
# Bivariate half-plane inequalities
# ---------------------------------------------------------------------------


def test_y_symmetry_flags():
    assert not correlated_coin().y_symmetric
    assert coupled_coin().y_symmetric
    assert independent_coins().y_symmetric
    assert five_atom_bspec().y_symmetric


def test_named_bspec_round_trip():
    for name in ("correlated-coin", "coupled-coin", "independent-coins",
                 "five-atom"):
        assert named_bspec(name).bspec_id == name
    with pytest.raises(IntwalkConfigError):
        named_bspec("three-atom")


def test_correlated_coin_violates_upper_bound():
    rows = halfplane_measures(correlated_coin(), 1)
    by_x = {r.x: r for r in rows}
    r = by_x[1]
    assert (r.lhs1, r.rhs1, r.lhs2, r.rhs2) == (F(1, 2), F(1, 4), F(1, 2), F(1, 4))
    assert r.holds1 and not r.holds2
    # the deficit moves to the lower bound on the other atom
    assert not by_x[-1].holds1 and by_x[-1].holds2


@pytest.mark.parametrize("make", [coupled_coin, independent_coins,
                                  five_atom_bspec])
def test_symmetric_bspecs_satisfy_both_bounds(make):
    bspec = make()
    for n in range(1, 6):
        for row in halfplane_measures(bspec, n):
            assert row.holds1, (bspec.bspec_id, n, row)
            assert row.holds2, (bspec.bspec_id, n, row)


@pytest.mark.parametrize("make", [correlated_coin, coupled_coin,
                                  independent_coins, five_atom_bspec])
def test_halfplane_marginalisation(make):
    """Summing each side over x recovers P(min >= 0) and P(min > 0)."""
    for n in (1, 3, 4):
        rows = halfplane_measures(make(), n)
        lhs1 = sum(r.lhs1 for r in rows)
        rhs2 = sum(r.rhs2 for r in rows)
        lhs2 = sum(r.lhs2 for r in rows)
        rhs1 = sum(r.rhs1 for r in rows)
        assert lhs1 == rhs2  # both equal P(min >= 0)
        assert lhs2 == rhs1  # both equal P(min > 0)
        assert lhs2 <= lhs1


def test_halfplane_budget():
    with pytest.raises(TooLarge):
        halfplane_measures(five_atom_bspec(), 10, budget=100)


def test_bspec_mass_validation():
    from intwalk.fluct import BivariateIncrementSpec

    with pytest.raises(IntwalkConfigError):
        BivariateIncrementSpec(pmf={(1, 1): F(1, 2)}, bspec_id="short")
    with pytest.raises(IntwalkConfigError):
        BivariateIncrementSpec(
            pmf={(1, 1): F(3, 2), (0, 0): F(-1, 2)}, bspec_id="neg",
        )


def test_corollary_check_smoke(lap):
    res = corollary_independence_check(lap, n=4, samples=800, seed=7)
    assert 0.0 <= res.statistic <= 1.0
    assert 0.0 <= res.p_value <= 1.0
    assert 0 < res.n_conditioned <= 800
    assert res.n_unconditioned <= 800
    # conditioning rejects, so the conditioned sample is the smaller one
    assert res.n_conditioned <= res.n_unconditioned
