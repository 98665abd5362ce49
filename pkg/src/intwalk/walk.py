"""Trajectories of the walk and their cycle decomposition.

A trajectory holds the walk values S_1..S_N and the integrated values
A_n = S_1 + ... + S_n.  The persistence event of interest is
{min_{1<=k<=N} A_k > 0}.

Cycles cut the walk at up-crossing times.  Under the default convention a
boundary sits at n when S_n <= 0 and S_{n+1} > 0; the k-th boundary time is
T_k, the cycle lengths are theta_k = T_k - T_{k-1} and the cycle areas are
psi_k = A(T_k) - A(T_{k-1}).  Within one cycle the walk is first positive and
then nonpositive, so A rises and then falls; this is what makes the cycle
areas a sufficient record of the persistence event (see
``reduction_holds``).  The stretch before the first boundary candidate
(T_0 = min{n >= 0 : S_{n+1} > 0}) is discarded.

Conditioning the first step to be positive ("first_positive") realizes the
tilted measure used throughout: T_0 = 0 and every later boundary closes a
complete cycle.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .increments import IncrementSpec


class CrossingConvention(enum.Enum):
    """How cycle boundaries are read off the walk.

    WEAK_UP        boundary at n when S_n <= 0 and S_{n+1} > 0 (default)
    STRICT_UP      boundary at n when S_n <  0 and S_{n+1} >= 0
    LEAVE_ZERO     boundary at n when S_n  = 0 and S_{n+1} != 0
    LAST_NEGATIVE  weak-up cycles, but each cycle reports its prefix up to the
                   last strictly negative value (length 0 when the cycle has
                   no negative value; such cycles are degenerate and flagged
                   by the symmetry audit)
    """

    WEAK_UP = "weak-up"
    STRICT_UP = "strict-up"
    LEAVE_ZERO = "leave-zero"
    LAST_NEGATIVE = "last-negative"

    @classmethod
    def from_name(cls, name: str) -> "CrossingConvention":
        for member in cls:
            if member.value == name or member.name == name.upper().replace("-", "_"):
                return member
        raise ValueError(f"unknown convention {name!r}")


def _boundary_mask(s: np.ndarray, convention: CrossingConvention) -> np.ndarray:
    """mask[n] (0-based n -> time n+1) marking boundary times in 1..N-1."""
    cur, nxt = s[:-1], s[1:]
    if convention is CrossingConvention.LEAVE_ZERO:
        return (cur == 0) & (nxt != 0)
    if convention is CrossingConvention.STRICT_UP:
        return (cur < 0) & (nxt >= 0)
    return (cur <= 0) & (nxt > 0)  # weak-up and last-negative


@dataclass(frozen=True)
class Trajectory:
    """Walk values s = (S_1..S_N) and integrated values a = (A_1..A_N)."""

    s: np.ndarray
    a: np.ndarray

    @classmethod
    def from_steps(cls, steps: Sequence) -> "Trajectory":
        steps = np.asarray(steps)
        s = np.cumsum(steps)
        return cls(s=s, a=np.cumsum(s))

    @property
    def n(self) -> int:
        return int(self.s.shape[0])

    def persistence_indicator(self, n: Optional[int] = None) -> bool:
        """Whether min(A_1..A_n) > 0."""
        n = self.n if n is None else n
        if not (1 <= n <= self.n):
            raise ValueError(f"n = {n} outside trajectory of length {self.n}")
        return bool(np.min(self.a[:n]) > 0)


def simulate(
    spec: IncrementSpec,
    n: int,
    rng: np.random.Generator,
    conditioning: str = "none",
) -> Trajectory:
    """Draw a trajectory of length n.

    conditioning "first_positive" realizes the law given S_1 > 0 by
    rejection on the first step; "none" is the plain walk.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if conditioning not in ("none", "first_positive"):
        raise ValueError(f"unknown conditioning {conditioning!r}")
    steps = spec.sample_block(rng, n)
    if conditioning == "first_positive":
        while steps[0] <= 0:
            steps[0] = spec.sample(rng)
    return Trajectory.from_steps(steps)


@dataclass(frozen=True)
class CycleRecord:
    """Complete cycles of one trajectory.

    boundaries[k] is T_k (absolute time, boundaries[0] = T_0); theta, psi are
    per-cycle lengths and areas; psi_total[k] = A(T_{k+1}) - A(T_0) is the
    running area sum.  theta_hat is the within-cycle index of the last
    strictly negative walk value (0 when the cycle has none); theta_plus is
    the length of the leading positive stretch, theta_minus = theta -
    theta_plus.  eta = number of complete cycles.  A boundary at time N
    itself is unobservable (it needs S_{N+1}) and is not counted.
    """

    convention: CrossingConvention
    boundaries: np.ndarray  # T_0 .. T_eta
    theta: np.ndarray
    psi: np.ndarray
    psi_total: np.ndarray
    theta_hat: np.ndarray
    theta_plus: np.ndarray
    theta_minus: np.ndarray

    @property
    def eta(self) -> int:
        return int(self.theta.shape[0])


def decompose(
    t: Trajectory,
    convention: CrossingConvention = CrossingConvention.WEAK_UP,
) -> CycleRecord:
    """Cut a trajectory into complete cycles under the given convention."""
    s, a = t.s, t.a
    mask = _boundary_mask(s, convention)
    times = np.flatnonzero(mask) + 1  # boundary times in 1..N-1
    if convention is CrossingConvention.LEAVE_ZERO:
        start_ok = s[0] != 0
    elif convention is CrossingConvention.STRICT_UP:
        start_ok = s[0] >= 0
    else:
        start_ok = s[0] > 0
    if start_ok:
        boundaries = np.concatenate(([0], times))
    else:
        boundaries = times  # times[0] is T_0, the end of the discarded stretch
    if boundaries.shape[0] == 0:
        boundaries = np.array([], dtype=np.int64)
        empty = np.array([])
        zero = np.array([], dtype=np.int64)
        return CycleRecord(convention, boundaries, zero, empty, empty, zero, zero, zero)

    starts = boundaries[:-1]
    ends = boundaries[1:]
    theta = ends - starts
    a_at = lambda idx: np.where(idx > 0, a[np.maximum(idx, 1) - 1], 0)
    psi = a_at(ends) - a_at(starts)
    theta_hat = np.zeros_like(theta)
    theta_plus = np.zeros_like(theta)
    for k in range(theta.shape[0]):
        lo, hi = int(starts[k]), int(ends[k])
        seg = s[lo:hi]  # S_{lo+1} .. S_{hi}
        neg = np.flatnonzero(seg < 0)
        theta_hat[k] = (neg[-1] + 1) if neg.size else 0
        down = np.flatnonzero((seg[:-1] >= 0) & (seg[1:] < 0))
        theta_plus[k] = (down[0] + 1) if down.size else theta[k]
    if convention is CrossingConvention.LAST_NEGATIVE:
        # report the prefix of each weak-up cycle up to its last negative value
        cut = starts + theta_hat
        psi = a_at(cut) - a_at(starts)
        theta = theta_hat.copy()
        theta_plus = np.minimum(theta_plus, theta)
    return CycleRecord(
        convention=convention,
        boundaries=boundaries,
        theta=theta,
        psi=psi,
        psi_total=np.cumsum(psi),
        theta_hat=theta_hat,
        theta_plus=theta_plus,
        theta_minus=theta - theta_plus,
    )


def reduction_holds(t: Trajectory) -> bool:
    """Check the cycle reduction of the persistence event on one trajectory.

    {min_k A_k > 0} must coincide with {A at every complete-cycle boundary
    positive, A_1 > 0, A_N > 0}.  Returns True when the two sides agree.
    """
    rec = decompose(t, CrossingConvention.WEAK_UP)
    lhs = t.persistence_indicator()
    ends = rec.boundaries[1:]
    areas_pos = bool(np.all(t.a[ends - 1] > 0)) if ends.size else True
    rhs = areas_pos and bool(t.a[0] > 0) and bool(t.a[-1] > 0)
    return lhs == rhs


@dataclass(frozen=True)
class CycleSample:
    theta: int
    psi: float
    theta_hat: int
    censored: bool


def sample_cycle(
    spec: IncrementSpec,
    rng: np.random.Generator,
    cap: int = 1 << 16,
    convention: CrossingConvention = CrossingConvention.WEAK_UP,
) -> CycleSample:
    """Draw one first cycle under first-step conditioning, censored at cap.

    Runs the walk given S_1 > 0 (S_1 != 0 for LEAVE_ZERO) until the first
    boundary; a walk still open after cap steps is returned censored with
    the running values.  Under LAST_NEGATIVE the reported (theta, psi) are
    the prefix length and area up to the last strictly negative value of the
    weak-up cycle.
    """
    x = spec.sample(rng)
    if convention is CrossingConvention.LEAVE_ZERO:
        while x == 0:
            x = spec.sample(rng)
    else:
        while x <= 0:
            x = spec.sample(rng)
    s = x
    area = s
    last_neg = 0
    area_at_last_neg = area * 0  # zero of the right type
    steps = 1
    cut_prefix = convention is CrossingConvention.LAST_NEGATIVE
    while steps < cap:
        nxt = s + spec.sample(rng)
        if convention is CrossingConvention.LEAVE_ZERO:
            closed = s == 0 and nxt != 0
        elif convention is CrossingConvention.STRICT_UP:
            closed = s < 0 and nxt >= 0
        else:
            closed = s <= 0 and nxt > 0
        if closed:
            if cut_prefix:
                return CycleSample(theta=last_neg, psi=area_at_last_neg,
                                   theta_hat=last_neg, censored=False)
            return CycleSample(theta=steps, psi=area, theta_hat=last_neg,
                               censored=False)
        s = nxt
        steps += 1
        area += s
        if s < 0:
            last_neg = steps
            area_at_last_neg = area
    if cut_prefix:
        return CycleSample(theta=last_neg, psi=area_at_last_neg,
                           theta_hat=last_neg, censored=True)
    return CycleSample(theta=cap, psi=area, theta_hat=last_neg, censored=True)
