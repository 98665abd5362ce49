"""Monte Carlo estimators: determinism, calibration against exact values,
and the fitting helpers."""

import math
from fractions import Fraction as F

import numpy as np
import pytest

from intwalk import (
    DegenerateGrid,
    Estimate,
    ExponentMismatch,
    c1_constant,
    c2_constant,
    check_key_identity,
    exact_cycle_min_positive,
    exact_persistence,
    fit_exponent,
    estimate_constant,
    mc_cycle_scan,
    mc_cycle_tail,
    mc_eta_scaling,
    mc_persistence,
    persistence_constant_interval,
    positivity_limit_check,
    psi_symmetry_check,
    sample_cycle_chains,
    sample_cycles,
)

SEED = 11


def test_reference_constants(lap):
    assert c1_constant() == pytest.approx(0.5641896, abs=5e-8)
    # sqrt(8/pi) * sigma / E|S_1| with sigma^2 = 2, E|S_1| = 1
    assert c2_constant(lap) == pytest.approx(2.2567583, abs=5e-8)
    lo, hi = persistence_constant_interval(lap)
    assert lo == pytest.approx(0.40802, abs=5e-6)
    assert hi == pytest.approx(0.81605, abs=5e-6)
    assert hi == 2 * lo


def test_estimate_ci95():
    est = Estimate.from_hits(250, 1000)
    assert est.value == 0.25
    assert est.stderr == pytest.approx(math.sqrt(0.25 * 0.75 / 1000))
    lo, hi = est.ci95
    assert lo == pytest.approx(est.value - 1.96 * est.stderr)
    assert hi == pytest.approx(est.value + 1.96 * est.stderr)


# ---------------------------------------------------------------------------
# Determinism
# ---------------------------------------------------------------------------


def test_mc_persistence_deterministic(simple):
    a = mc_persistence(simple, 6, 20_000, seed=SEED)
    b = mc_persistence(simple, 6, 20_000, seed=SEED)
    assert a == b


def test_sharding_is_inert(simple):
    a = mc_persistence(simple, 6, 50_000, seed=SEED, shards=1)
    b = mc_persistence(simple, 6, 50_000, seed=SEED, shards=4)
    assert a == b


def test_seed_and_job_separation(simple):
    base = mc_persistence(simple, 6, 20_000, seed=SEED)
    other_seed = mc_persistence(simple, 6, 20_000, seed=SEED + 1)
    other_job = mc_persistence(simple, 6, 20_000, seed=SEED, job="mc-p-alt")
    assert base.value != other_seed.value
    assert base.value != other_job.value


def test_calibration_over_seeds(simple):
    """Across 100 seeds the estimator must sit within 3 sigma of the exact
    value essentially always (binomial 3-sigma coverage is ~99.7%)."""
    exact = float(exact_persistence(simple, 6))  # 23/64
    inside = 0
    for seed in range(100):
        est = mc_persistence(simple, 6, 20_000, seed=seed)
        if abs(est.value - exact) <= 3 * est.stderr:
            inside += 1
    assert inside >= 99


# ---------------------------------------------------------------------------
# Cycle samplers
# ---------------------------------------------------------------------------


def test_sample_cycles_matches_exact_law(simple):
    theta, psi, hat_t, hat_a, cens = sample_cycles(simple, 50_000, seed=9)
    n = theta.size
    assert n == 50_000
    assert np.all(theta[~cens] >= 2)
    assert np.all(hat_t <= theta)
    # frozen atoms of the exact first-cycle law: P(2,1) = 1/4, P(4,0) = 1/16
    for want, mask in [
        (0.25, (theta == 2) & (psi == 1) & ~cens),
        (1.0 / 16.0, (theta == 4) & (psi == 0) & ~cens),
    ]:
        freq = mask.mean()
        sig = math.sqrt(want * (1 - want) / n)
        assert abs(freq - want) < 4 * sig
    assert cens.mean() < 0.02


def test_cycle_tail_interval_semantics(simple):
    pts = mc_cycle_tail(simple, (8, 32), samples=30_000, cap=16, seed=SEED)
    below, above = pts
    assert below.n == 8 and above.n == 32
    lo, hi = below.interval
    assert lo == hi == below.scaled  # fully resolved under the step cap
    lo2, hi2 = above.interval
    assert lo2 < hi2  # censored rows widen the bracket past the cap
    assert lo2 <= above.scaled <= hi2
    assert above.prob.value <= below.prob.value  # tails nonincreasing in n
    assert below.scaled == pytest.approx(math.sqrt(8) * below.prob.value)
    assert above.scaled_stderr == pytest.approx(
        math.sqrt(32) * above.prob.stderr)
    assert 0 < above.censored_fraction < 1
    # theta is even here, so P(theta >= 8) is the complement of the
    # horizon-6 law mass: 1 - 29/64
    exact_ge8 = 35.0 / 64.0
    assert abs(below.prob.value - exact_ge8) < 4 * below.prob.stderr


def test_cycle_scan_matches_exact(simple):
    scan = mc_cycle_scan(simple, 12, samples=40_000, seed=5)
    exact = float(exact_cycle_min_positive(simple, 12))
    assert abs(scan.eta_form.value - exact) < 4 * scan.eta_form.stderr
    # one extra cycle can only shrink the minimum
    assert scan.eta_plus_high.value <= scan.eta_form.value
    assert scan.eta_plus_low.value <= scan.eta_plus_high.value
    width = scan.eta_plus_high.value - scan.eta_plus_low.value
    assert width == pytest.approx(scan.unresolved_fraction)
    assert scan.ext_budget == 8 * 12


def test_cycle_scan_budget_narrows_bracket(simple):
    tight = mc_cycle_scan(simple, 12, samples=20_000, seed=5, ext_budget=4)
    loose = mc_cycle_scan(simple, 12, samples=20_000, seed=5, ext_budget=400)
    assert loose.unresolved_fraction < tight.unresolved_fraction


def test_chain_sampler(lap):
    free = sample_cycle_chains(lap, 3, 2_000, seed=6)
    cond = sample_cycle_chains(lap, 3, 2_000, seed=6, require_min_positive=True)
    assert 0 < free.size <= 2_000
    assert free.min() >= 3  # Theta_3 needs at least one step per cycle
    assert free.max() <= 1 << 16
    assert 0 < cond.size < free.size


# ---------------------------------------------------------------------------
# eta scaling, key identity, terminal positivity, psi symmetry
# ---------------------------------------------------------------------------


def test_eta_scaling_gaussian_case(lap):
    res = mc_eta_scaling(lap, 256, 3_000, seed=4)
    assert res.reference.startswith("halfnorm")
    assert res.flag is None
    assert res.p_value > 0.01
    assert res.sample.shape == (3_000,)
    assert np.all(res.sample >= 0)
    # scaled by sqrt(n), so the mean should be near E|N(0,1)|/c2-ish, O(1)
    assert 0.05 < res.sample.mean() < 2.0


def test_eta_scaling_heavy_flag(heavy):
    res = mc_eta_scaling(heavy, 64, 500, seed=4)
    assert res.flag == "NoReferenceLaw"
    assert res.p_value is None and res.ks_statistic is None
    assert res.reference is None
    assert res.sample.shape == (500,)


def test_key_identity_degenerate_horizon(lap):
    """With one step past the positive start no cycle can close, so both
    sides equal 1 exactly and the bracket is empty."""
    res = check_key_identity(lap, 1, 2_000, seed=SEED)
    assert res.lhs.value == 1.0
    assert res.rhs.value == 1.0
    assert res.rhs_interval == (1.0, 1.0)
    assert res.z_score == 0.0
    assert res.eta_mean == 0.0
    assert res.q5_estimate is None  # eta never reaches 5


def test_key_identity_small_horizon(lap):
    res = check_key_identity(lap, 8, 30_000, seed=SEED)
    assert abs(res.z_score) < 4.0
    assert 0 < res.rhs_interval[0] <= res.rhs.value <= res.rhs_interval[1] <= 1
    assert 0 < res.eta_mean < 4  # each cycle takes >= 2 steps


def test_positivity_limit_check(simple):
    est = positivity_limit_check(simple, 6, 40_000, seed=SEED)
    exact = 11.0 / 32.0
    assert abs(est.value - exact) < 4 * est.stderr


def test_psi_symmetry_check_fields(lap):
    res = psi_symmetry_check(lap, 20_000, seed=3)
    assert set(res) == {"ks_statistic", "p_value", "n_uncensored",
                        "censored_fraction"}
    assert res["p_value"] > 0.001
    assert res["n_uncensored"] <= 20_000
    assert 0 <= res["censored_fraction"] < 0.05


# ---------------------------------------------------------------------------
# Fits
# ---------------------------------------------------------------------------


def test_fit_exponent_recovers_power_law():
    pts = [(n, 2.0 * n**-0.25) for n in (16, 32, 64, 128, 256)]
    fit = fit_exponent(pts)
    assert fit.slope == pytest.approx(-0.25, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(2.0), abs=1e-12)
    assert fit.r2 == pytest.approx(1.0)
    lo, hi = fit.slope_ci95
    assert lo <= -0.25 <= hi
    assert len(fit.points) == 5


def test_fit_exponent_weights_by_stderr():
    rng = np.random.default_rng(0)
    pts = []
    for n in (16, 32, 64, 128, 256):
        v = n**-0.25 * math.exp(rng.normal(0, 0.005))
        pts.append((n, Estimate(value=v, stderr=0.005 * v, n_samples=10**6)))
    fit = fit_exponent(pts)
    lo, hi = fit.slope_ci95
    assert lo <= -0.25 <= hi
    assert hi - lo < 0.1


def test_fit_exponent_rejects_bad_grids():
    with pytest.raises(DegenerateGrid):
        fit_exponent([(8, 1.0), (16, 0.5), (32, 0.25)])  # too few
    with pytest.raises(DegenerateGrid):
        fit_exponent([(8, 1.0), (8, 1.0), (16, 0.5), (32, 0.25)])  # ties
    with pytest.raises(DegenerateGrid):
        fit_exponent([(8, 1.0), (16, 0.5), (32, -0.2), (64, 0.1)])  # sign


def test_estimate_constant_synthetic():
    pts = [(n, 0.5 * n**-0.25) for n in (16, 32, 64, 128)]
    est = estimate_constant(pts, alpha=2.0)
    assert est.value == pytest.approx(0.5, abs=1e-12)


def test_estimate_constant_rejects_wrong_exponent():
    pts = [(n, n**-0.5) for n in (16, 32, 64, 128)]
    with pytest.raises(ExponentMismatch):
        estimate_constant(pts, alpha=2.0)
