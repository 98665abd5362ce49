"""Increment-law construction, parsing, moments, and sampling sanity."""

from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intwalk import (
    GeometricTail,
    IntwalkConfigError,
    NonCentered,
    VarianceUndefined,
    geometric_right_continuous,
    moments,
    named_spec,
    spec_from_config,
    validate,
)

NAMED = ["simple", "lazy(1/2)", "geom-rc(1/2)", "laplace(1)",
         "rexp(2/3,1)", "heavy(3/2)"]


@pytest.mark.parametrize("name", NAMED)
def test_named_specs_validate(name):
    spec = named_spec(name)
    report = validate(spec)  # raises on any structural violation
    assert report.family == spec.family
    assert report.mean == 0
    assert report.mass == 1


@pytest.mark.parametrize("name", ["simple", "lazy(1/2)", "laplace(1)"])
def test_spec_id_is_a_valid_name(name):
    spec = named_spec(name)
    assert named_spec(spec.spec_id).spec_id == spec.spec_id


@pytest.mark.parametrize("name", NAMED)
def test_config_round_trip(name):
    spec = named_spec(name)
    again = spec_from_config(spec.to_config())
    assert again.spec_id == spec.spec_id


def test_simple_walk_moments(simple):
    assert simple.pos_prob == F(1, 2)
    assert simple.e_abs == F(1)
    assert simple.sigma2 == F(1)
    assert simple.is_lattice and simple.exact_lattice
    assert simple.alpha == 2.0


def test_lazy_walk_moments(lazy):
    assert lazy.pmf(0) == F(1, 2)
    assert lazy.pmf(1) == lazy.pmf(-1) == F(1, 4)
    assert lazy.sigma2 == F(1, 2)
    assert lazy.pos_prob == F(1, 4)


def test_geometric_tail_law(geom):
    # right-continuous: the only positive step is +1
    head, tail = geom.lattice_table()
    assert tail is not None
    assert geom.right_class == "right_continuous"
    assert head[1] == F(2, 3)
    assert sum(head.values(), F(0)) + tail.mass == 1
    mean = sum(v * q for v, q in head.items()) + tail.mean
    assert mean == 0


def test_laplace_moments(lap):
    assert lap.right_class == "right_exponential"
    assert lap.pos_prob == F(1, 2)
    assert lap.e_abs == 1
    assert lap.sigma2 == 2
    assert lap.alpha == 2.0


def test_heavy_tail_spec(heavy):
    assert heavy.alpha == 1.5
    assert heavy.is_lattice  # integer support ...
    assert not heavy.exact_lattice  # ... with irrational masses
    with pytest.raises(VarianceUndefined):
        heavy.sigma2
    report = validate(heavy)
    assert report.variance is None
    assert report.lattice.d == 1


def test_moments_dict(simple, heavy):
    m = moments(simple)
    assert m["mean"] == 0
    assert m["variance"] == F(1)
    assert m["e_abs"] == F(1)
    assert moments(heavy)["variance"] is None


def test_unknown_family_rejected():
    with pytest.raises(IntwalkConfigError):
        named_spec("cauchy(1)")
    with pytest.raises(IntwalkConfigError):
        spec_from_config("family = nonsense\n")
    with pytest.raises(IntwalkConfigError):
        spec_from_config("family = simple\nup = 1/2\n")  # key not allowed


def test_non_centered_config_rejected():
    # mass sums to 1 but the mean is 1/2
    with pytest.raises(NonCentered):
        spec_from_config("family = rclat\nup = 1/2\nhead = 0:1/2\n")


@given(num=st.integers(1, 9), den=st.integers(2, 12))
@settings(max_examples=40, deadline=None)
def test_geometric_construction_centered(num, den):
    ratio = F(min(num, den - 1), den)
    spec = geometric_right_continuous(ratio)
    head, tail = spec.lattice_table()
    assert sum(head.values(), F(0)) + tail.mass == 1
    assert sum(v * q for v, q in head.items()) + tail.mean == 0


@given(start=st.integers(1, 6), ratio_den=st.integers(2, 6))
@settings(max_examples=30, deadline=None)
def test_geometric_tail_mass_identities(start, ratio_den):
    tail = GeometricTail(start=start, coeff=F(1, 8), ratio=F(1, ratio_den))
    # the whole tail sits at or below -start
    assert tail.mass_at_or_below(-start) == tail.mass
    partial = sum(tail.pmf(-(start + k)) for k in range(40))
    assert partial < tail.mass
    assert tail.mass - partial < F(1, 10**6)


def test_sampling_matches_support(simple, lazy, geom):
    rng = np.random.default_rng(0)
    for spec in (simple, lazy, geom):
        draws = spec.sample_block(rng, 4000)
        assert draws.dtype.kind == "i"
        for v in np.unique(draws):
            assert spec.pmf(int(v)) > 0
        pos = spec.sample_positive_block(rng, 500)
        assert (pos > 0).all()


def test_sampling_frequencies_simple(simple):
    rng = np.random.default_rng(1)
    draws = simple.sample_block(rng, 20_000)
    assert abs(float((draws == 1).mean()) - 0.5) < 0.02


def test_continuous_sampling(lap, heavy):
    rng = np.random.default_rng(2)
    x = lap.sample_block(rng, 20_000)
    assert abs(float(np.mean(x))) < 0.05
    assert abs(float(np.mean(np.abs(x))) - 1.0) < 0.05
    h = heavy.sample_block(rng, 20_000)
    assert h.max() <= 1  # the only up-step is +1
    assert float((h > 0).mean()) == pytest.approx(float(heavy.pos_prob), abs=0.02)


def test_cdf_consistency(geom):
    for v in range(-8, 2):
        tail_below = geom.cdf_at_or_below(-61)
        head_sum = sum((geom.pmf(u) for u in range(-60, v + 1)), F(0))
        assert geom.cdf_at_or_below(v) == head_sum + tail_below
