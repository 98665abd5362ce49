"""One-dimensional fluctuation identities and bivariate half-plane checks.

Covers exact positivity probabilities P(S_n > 0) / P(S_n >= 0), the
Sparre-Andersen recursion for the law of the positivity time, the universal
symmetric-continuous value C(2n, n) 4^{-n}, a convergence diagnostic for the
series sum (1/n)(P(S_n > 0) - 1/alpha), and exact enumeration of the
half-plane inequalities

    P(S_n^(1) = x, min_i S_i^(2) >= 0) >= P(S_n^(1) = x) P(min_i S_i^(2) > 0)
    P(S_n^(1) = x, min_i S_i^(2) > 0) <= P(S_n^(1) = x) P(min_i S_i^(2) >= 0)

for bivariate walks whose second component is sign-symmetric, plus a
sampling-based independence check for the continuous case.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import IntwalkConfigError, TooLarge
from .exact import walk_marginals
from .increments import IncrementSpec

_F = Fraction


@dataclass(frozen=True)
class PositivitySeq:
    """probs[n-1] = P(S_n > 0) (strict mode) or P(S_n >= 0) (weak mode)."""

    probs: tuple
    mode: str = "strict"

    def __post_init__(self):
        if self.mode not in ("strict", "weak"):
            raise IntwalkConfigError(f"unknown positivity mode {self.mode!r}")
        for p in self.probs:
            if not 0 <= p <= 1:
                raise ValueError(f"positivity probability {p} outside [0, 1]")

    def __len__(self) -> int:
        return len(self.probs)

    def at(self, n: int):
        """1-based access: at(n) = P(S_n > 0) (or >=)."""
        return self.probs[n - 1]


def positivity_probs(spec: IncrementSpec, n_max: int,
                     mode: str = "strict") -> PositivitySeq:
    """Exact P(S_n > 0) (or >= 0) for n = 1..n_max by iterated convolution."""
    if mode not in ("strict", "weak"):
        raise IntwalkConfigError(f"unknown positivity mode {mode!r}")
    marg = walk_marginals(spec, n_max)
    lo = 1 if mode == "strict" else 0
    probs = tuple(
        sum((q for v, q in dist.items() if v >= lo), _F(0)) for dist in marg
    )
    return PositivitySeq(probs=probs, mode=mode)


def sparre_andersen(seq: Union[PositivitySeq, Sequence]) -> list:
    """q_n = P(S_1 > 0, ..., S_n > 0) from the recursion
    n q_n = sum_{k=1}^n P(S_k > 0) q_{n-k}, q_0 = 1 (weak analog in weak
    mode).  Exact when the input probabilities are rational."""
    probs = seq.probs if isinstance(seq, PositivitySeq) else tuple(seq)
    q = [_F(1) if probs and isinstance(probs[0], Fraction) else 1.0]
    for n in range(1, len(probs) + 1):
        total = sum(probs[k - 1] * q[n - k] for k in range(1, n + 1))
        q.append(total / n)
    return q


def symmetric_continuous_qn(n: int) -> Fraction:
    """Universal P(S_1 > 0, ..., S_n > 0) = C(2n, n) 4^{-n} for walks with
    symmetric continuous increments (distribution-free)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return _F(math.comb(2 * n, n), 4**n)


def series_diagnostic(seq: PositivitySeq, alpha: float) -> np.ndarray:
    """Partial sums of sum_n (1/n)(P(S_n > 0) - 1/alpha), for convergence
    diagnostics; no limit is asserted."""
    if seq.mode != "strict":
        raise IntwalkConfigError("series diagnostic needs strict-mode probabilities")
    terms = np.array(
        [(float(p) - 1.0 / alpha) / n for n, p in enumerate(seq.probs, start=1)]
    )
    return np.cumsum(terms)


# ---------------------------------------------------------------------------
# Bivariate half-plane inequalities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BivariateIncrementSpec:
    """Finite rational pmf on integer pairs (x, y)."""

    pmf: dict = field(compare=False)
    bspec_id: str = "bspec"

    def __post_init__(self):
        total = sum(self.pmf.values(), _F(0))
        if total != 1:
            raise IntwalkConfigError(f"{self.bspec_id}: pmf sums to {total}, not 1")
        for (x, y), q in self.pmf.items():
            if q < 0:
                raise IntwalkConfigError(f"{self.bspec_id}: negative mass at {(x, y)}")

    @property
    def y_symmetric(self) -> bool:
        return all(
            q == self.pmf.get((x, -y), _F(0)) for (x, y), q in self.pmf.items()
        )

    def atoms(self) -> list:
        return sorted((xy, q) for xy, q in self.pmf.items() if q > 0)


def _bspec(pairs, name) -> BivariateIncrementSpec:
    return BivariateIncrementSpec(
        pmf={xy: _F(*q) if isinstance(q, tuple) else _F(q) for xy, q in pairs},
        bspec_id=name,
    )


def correlated_coin() -> BivariateIncrementSpec:
    """y = x coin: not y-symmetric, so the half-plane inequalities may fail."""
    return _bspec([((1, 1), (1, 2)), ((-1, -1), (1, 2))], "correlated-coin")


def coupled_coin() -> BivariateIncrementSpec:
    """|y| = |x| with an independent sign for y: y-symmetric, x and |y|
    perfectly coupled."""
    return _bspec(
        [((1, 1), (1, 4)), ((1, -1), (1, 4)), ((2, 2), (1, 4)), ((2, -2), (1, 4))],
        "coupled-coin",
    )


def independent_coins() -> BivariateIncrementSpec:
    return _bspec(
        [((1, 1), (1, 4)), ((1, -1), (1, 4)), ((-1, 1), (1, 4)), ((-1, -1), (1, 4))],
        "independent-coins",
    )


def five_atom_bspec() -> BivariateIncrementSpec:
    """y-symmetric with an asymmetric x-marginal on {-1, 2, 3}."""
    return _bspec(
        [
            ((2, 1), (1, 6)),
            ((2, -1), (1, 6)),
            ((-1, 2), (1, 4)),
            ((-1, -2), (1, 4)),
            ((3, 0), (1, 6)),
        ],
        "five-atom",
    )


_NAMED_BSPECS = {
    "correlated-coin": correlated_coin,
    "coupled-coin": coupled_coin,
    "independent-coins": independent_coins,
    "five-atom": five_atom_bspec,
}


def named_bspec(name: str) -> BivariateIncrementSpec:
    try:
        return _NAMED_BSPECS[name]()
    except KeyError:
        raise IntwalkConfigError(
            f"unknown bivariate spec {name!r}; known: {sorted(_NAMED_BSPECS)}"
        ) from None


@dataclass(frozen=True)
class HalfplaneRow:
    x: int
    lhs1: Fraction  # P(S_n^(1) = x, min >= 0)
    rhs1: Fraction  # P(S_n^(1) = x) P(min > 0)
    lhs2: Fraction  # P(S_n^(1) = x, min > 0)
    rhs2: Fraction  # P(S_n^(1) = x) P(min >= 0)

    @property
    def holds1(self) -> bool:
        return self.lhs1 >= self.rhs1

    @property
    def holds2(self) -> bool:
        return self.lhs2 <= self.rhs2


def halfplane_measures(bspec: BivariateIncrementSpec, n: int,
                       budget: int = 100_000_000) -> list[HalfplaneRow]:
    """Exact half-plane quantities per reachable x, by literal enumeration
    of all support^n paths."""
    atoms = bspec.atoms()
    if len(atoms) ** n > budget:
        raise TooLarge(f"{len(atoms)}^{n} paths exceed the budget")
    px: dict[int, Fraction] = {}
    joint_weak: dict[int, Fraction] = {}
    joint_strict: dict[int, Fraction] = {}
    min_weak = _F(0)
    min_strict = _F(0)
    for path in itertools.product(atoms, repeat=n):
        mass = _F(1)
        x = y = 0
        min_y = None
        for (dx, dy), q in path:
            mass *= q
            x += dx
            y += dy
            min_y = y if min_y is None else min(min_y, y)
        px[x] = px.get(x, _F(0)) + mass
        if min_y >= 0:
            joint_weak[x] = joint_weak.get(x, _F(0)) + mass
            min_weak += mass
            if min_y > 0:
                joint_strict[x] = joint_strict.get(x, _F(0)) + mass
                min_strict += mass
    return [
        HalfplaneRow(
            x=x,
            lhs1=joint_weak.get(x, _F(0)),
            rhs1=px[x] * min_strict,
            lhs2=joint_strict.get(x, _F(0)),
            rhs2=px[x] * min_weak,
        )
        for x in sorted(px)
    ]


@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float
    n_conditioned: int
    n_unconditioned: int


def corollary_independence_check(
    spec: IncrementSpec,
    n: int,
    samples: int,
    seed: int,
    cap: int = 1 << 14,
) -> KSResult:
    """Two-sample KS check that Theta_n is independent of the event
    {min_{k<=n} Psi_k > 0} for the cycle walk of a continuous-increment spec.

    One sample of Theta_n is drawn conditioned on the event (rejection),
    the other unconditioned, from independent sample blocks.  Draws whose
    cycles hit the censoring cap are discarded from both samples; under the
    independence hypothesis this conditions both on the same event and
    keeps the comparison valid.  Asymptotic KS p-value.
    """
    from scipy import stats

    from .mc import sample_cycle_chains

    cond = sample_cycle_chains(
        spec, n, samples, seed=seed, cap=cap, job="corollary-cond",
        require_min_positive=True,
    )
    free = sample_cycle_chains(
        spec, n, samples, seed=seed, cap=cap, job="corollary-free",
        require_min_positive=False,
    )
    res = stats.ks_2samp(cond, free, method="asymp")
    return KSResult(
        statistic=float(res.statistic),
        p_value=float(res.pvalue),
        n_conditioned=len(cond),
        n_unconditioned=len(free),
    )
