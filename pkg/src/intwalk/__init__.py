"""Persistence laboratory for integrated random walks.

The integrated walk A_n = S_1 + ... + S_n of a centered random walk S stays
positive up to time N with probability p_N decaying like a power of N.  This
package computes p_N exactly for lattice increment laws (dynamic programming
over the (S, A) state space, big-rational arithmetic), estimates it by
reproducible Monte Carlo for continuous and heavy-tailed laws, and checks
the cycle-decomposition machinery behind the N^(1/(2 alpha) - 1/2) rate:
first-cycle laws, sign-symmetry audits, one-dimensional stay-positive
recursions, half-plane inequalities, and renewal-scaling diagnostics.
"""

__version__ = "0.1.0"

from .errors import (
    AssertionFailed,
    BudgetError,
    DegenerateGrid,
    ExponentMismatch,
    IntwalkConfigError,
    IntwalkError,
    MassDeficit,
    NegativeProbability,
    NoReferenceLaw,
    NonCentered,
    NotInBridgeSet,
    NotLattice,
    SpecError,
    StateBudgetExceeded,
    TooLarge,
    VarianceUndefined,
)
from .increments import (
    GeometricTail,
    HeavyTailRightContinuous,
    IncrementSpec,
    LatticeParams,
    LazySimpleWalk,
    RightContinuousLattice,
    RightExponential,
    SimpleWalk,
    geometric_right_continuous,
    laplace,
    moments,
    named_spec,
    spec_from_config,
    validate,
)
from .walk import (
    CrossingConvention,
    CycleRecord,
    CycleSample,
    Trajectory,
    decompose,
    reduction_holds,
    sample_cycle,
    simulate,
)
from .exact import (
    AuditResult,
    CycleLawResult,
    ExactDist,
    FloatValue,
    enumerate_persistence,
    exact_bridge_persistence,
    exact_bridge_profile,
    exact_cycle_law,
    exact_cycle_min_positive,
    exact_persistence,
    exact_persistence_profile,
    symmetry_audit,
    walk_marginals,
    zero_return_length_law,
)
from .fluct import (
    BivariateIncrementSpec,
    HalfplaneRow,
    KSResult,
    PositivitySeq,
    corollary_independence_check,
    correlated_coin,
    coupled_coin,
    five_atom_bspec,
    halfplane_measures,
    independent_coins,
    named_bspec,
    positivity_probs,
    series_diagnostic,
    sparre_andersen,
    symmetric_continuous_qn,
)
from .mc import (
    Estimate,
    EtaScalingResult,
    ExponentFit,
    KeyIdentityResult,
    ScanResult,
    TailPoint,
    c1_constant,
    c2_constant,
    check_key_identity,
    estimate_constant,
    fit_exponent,
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

__all__ = [name for name in dir() if not name.startswith("_")]
