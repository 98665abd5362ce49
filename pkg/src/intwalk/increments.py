"""Increment distributions for centered random walks.

Five families, all with mean exactly zero:

- ``SimpleWalk``: steps +-1 with probability 1/2 each.
- ``LazySimpleWalk``: stays put with probability ``stay``, otherwise +-1.
- ``RightContinuousLattice``: the only positive step is +1; the nonpositive
  part is a finite rational table, optionally extended by a geometric tail.
- ``RightExponential``: P(S1 > 0) = ``pos``, exponential on each side.  With
  ``pos = 1/2`` and equal rates this is the Laplace law.
- ``HeavyTailRightContinuous``: only positive step +1, negative tail
  ``P(S1 = -k) = c * k**(-alpha-1)`` with ``1 < alpha < 2``; the pair
  ``(P(S1=1), c)`` is solved so that total mass is 1 and the mean is 0.

The first four families have finite variance (tail exponent 2); the heavy
family has infinite variance and tail exponent ``alpha``.  Lattice families
carry exact rational masses and expose an exact CDF, which the exact engines
rely on.  The heavy family is lattice-valued but its masses are irrational;
its rational accessors return 2**-128 approximants and the normalization is
certified numerically instead (see ``validate``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import mpmath
import numpy as np

from .errors import (
    IntwalkConfigError,
    MassDeficit,
    NegativeProbability,
    NonCentered,
    NotLattice,
    VarianceUndefined,
)

_F = Fraction
_TWO128 = 1 << 128


def _mpf_to_frac(x: mpmath.mpf) -> Fraction:
    """Deterministic rational approximant of an mpmath float (2**-128 grid)."""
    return Fraction(int(mpmath.floor(x * _TWO128)), _TWO128)


def _parse_rat(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise IntwalkConfigError(f"bad rational {text!r}") from exc


@dataclass(frozen=True)
class GeometricTail:
    """Masses ``coeff * ratio**(k - start)`` on the values -k, k >= start."""

    start: int
    coeff: Fraction
    ratio: Fraction

    def __post_init__(self):
        if self.start < 1:
            raise IntwalkConfigError("tail start must be >= 1")
        if not (0 < self.ratio < 1):
            raise IntwalkConfigError("tail ratio must lie in (0, 1)")
        if self.coeff < 0:
            raise NegativeProbability("tail coefficient is negative")

    @property
    def mass(self) -> Fraction:
        return self.coeff / (1 - self.ratio)

    @property
    def mean(self) -> Fraction:
        # sum over k >= s of (-k) coeff r^(k-s)
        r, s = self.ratio, self.start
        return -self.coeff * (s / (1 - r) + r / (1 - r) ** 2)

    @property
    def second_moment(self) -> Fraction:
        r, s = self.ratio, self.start
        return self.coeff * (
            s * s / (1 - r) + 2 * s * r / (1 - r) ** 2 + (r + r * r) / (1 - r) ** 3
        )

    def pmf(self, value: int) -> Fraction:
        k = -value
        if k < self.start:
            return _F(0)
        return self.coeff * self.ratio ** (k - self.start)

    def mass_at_or_below(self, value: int) -> Fraction:
        """Total mass on {..., value-1, value} (value <= 0)."""
        k = max(-value, self.start)  # smallest magnitude included
        return self.coeff * self.ratio ** (k - self.start) / (1 - self.ratio)


@dataclass(frozen=True)
class LatticeParams:
    """Arithmetic structure of a lattice law: span d, sub-span h, shift a.

    d is the largest integer with P(S1 in dZ) = 1; h is the largest integer
    such that S1/d lives on a + hZ for some shift 0 <= a < h.  The set of n
    with P(S_n = 0) > 0 is contained in h*N.
    """

    d: int
    h: int
    shift: int


class IncrementSpec:
    """Common interface of the increment families."""

    family: str = ""

    # -- law structure -------------------------------------------------
    @property
    def is_lattice(self) -> bool:
        raise NotImplementedError

    @property
    def exact_lattice(self) -> bool:
        """Lattice with exactly representable rational masses."""
        return False

    @property
    def alpha(self) -> float:
        """Tail exponent: 2 for finite variance, the stable index otherwise."""
        return 2.0

    @property
    def right_class(self) -> str:
        return "right_continuous" if self.is_lattice else "right_exponential"

    # -- moments --------------------------------------------------------
    @property
    def pos_prob(self) -> Fraction:
        raise NotImplementedError

    @property
    def e_abs(self) -> Fraction:
        """E|S1|.  Equals 2 E[S1^+] because the mean is zero."""
        raise NotImplementedError

    @property
    def sigma2(self):
        raise NotImplementedError

    # -- exact lattice accessors -----------------------------------------
    def lattice_table(self) -> tuple[dict[int, Fraction], Optional[GeometricTail]]:
        raise NotLattice(f"{self.family} has no lattice table")

    def pmf(self, value: int) -> Fraction:
        head, tail = self.lattice_table()
        if value in head:
            return head[value]
        if tail is not None and value < 0:
            return tail.pmf(value)
        return _F(0)

    def cdf_at_or_below(self, value: int) -> Fraction:
        """P(S1 <= value), exact."""
        head, tail = self.lattice_table()
        total = sum((q for v, q in head.items() if v <= value), _F(0))
        if tail is not None:
            if -value >= tail.start:
                total += tail.mass_at_or_below(value)
            elif value >= -tail.start:
                total += tail.mass
        return total

    def support_max_down(self) -> Optional[int]:
        """Largest magnitude of a negative step, or None if unbounded."""
        head, tail = self.lattice_table()
        if tail is not None:
            return None
        negs = [-v for v, q in head.items() if v < 0 and q > 0]
        return max(negs) if negs else 0

    def atoms_above(self, threshold: int):
        """Yield (value, mass) for lattice atoms with value > threshold."""
        head, tail = self.lattice_table()
        for v, q in sorted(head.items(), reverse=True):
            if v > threshold and q > 0:
                yield v, q
        if tail is not None:
            for k in range(tail.start, -threshold):
                yield -k, tail.pmf(-k)

    # -- sampling ---------------------------------------------------------
    def sample_block(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def sample_positive_block(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draws from the law of S1 conditioned on S1 > 0."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator):
        """One draw of S1."""
        return self.sample_block(rng, 1)[0]

    # -- identification ----------------------------------------------------
    @property
    def spec_id(self) -> str:
        raise NotImplementedError

    def to_config(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.spec_id


class _ExactLattice(IncrementSpec):
    """Shared exact machinery for lattice families with rational masses."""

    @property
    def is_lattice(self) -> bool:
        return True

    @property
    def exact_lattice(self) -> bool:
        return True

    @property
    def pos_prob(self) -> Fraction:
        return self.lattice_table()[0][1]

    @property
    def e_abs(self) -> Fraction:
        return 2 * self.pos_prob  # E S1^+ = P(S1 = 1)

    @property
    def sigma2(self) -> Fraction:
        head, tail = self.lattice_table()
        out = sum((q * v * v for v, q in head.items()), _F(0))
        if tail is not None:
            out += tail.second_moment
        return out

    def _mass_mean(self) -> tuple[Fraction, Fraction]:
        head, tail = self.lattice_table()
        mass = sum(head.values(), _F(0))
        mean = sum((q * v for v, q in head.items()), _F(0))
        if tail is not None:
            mass += tail.mass
            mean += tail.mean
        return mass, mean

    def lattice_params(self) -> LatticeParams:
        head, tail = self.lattice_table()
        values = [v for v, q in head.items() if q > 0]
        if tail is not None:
            values += [-tail.start, -tail.start - 1]
        d = 0
        for v in values:
            d = math.gcd(d, abs(v))
        d = d or 1
        scaled = sorted(v // d for v in values)
        h = 0
        for v in scaled[1:]:
            h = math.gcd(h, v - scaled[0])
        h = h or 1
        return LatticeParams(d=d, h=h, shift=scaled[0] % h)


@dataclass(frozen=True)
class SimpleWalk(_ExactLattice):
    family = "simple"

    def lattice_table(self):
        return {1: _F(1, 2), -1: _F(1, 2)}, None

    def sample_block(self, rng, size):
        return rng.integers(0, 2, size=size, dtype=np.int64) * 2 - 1

    def sample_positive_block(self, rng, size):
        return np.ones(size, dtype=np.int64)

    @property
    def spec_id(self):
        return "simple"

    def to_config(self):
        return "family = simple\n"


@dataclass(frozen=True)
class LazySimpleWalk(_ExactLattice):
    stay: Fraction

    family = "lazy"

    def __post_init__(self):
        object.__setattr__(self, "stay", _F(self.stay))
        if not (0 <= self.stay < 1):
            raise IntwalkConfigError("stay probability must lie in [0, 1)")

    def lattice_table(self):
        move = (1 - self.stay) / 2
        return {1: move, 0: self.stay, -1: move}, None

    def sample_block(self, rng, size):
        u = rng.random(size)
        s = float(self.stay)
        cut = s + (1.0 - s) / 2.0
        return np.where(u < s, 0, np.where(u < cut, 1, -1)).astype(np.int64)

    def sample_positive_block(self, rng, size):
        return np.ones(size, dtype=np.int64)

    @property
    def spec_id(self):
        return f"lazy({self.stay})"

    def to_config(self):
        return f"family = lazy\nstay = {self.stay}\n"


@dataclass(frozen=True)
class RightContinuousLattice(_ExactLattice):
    """Only positive step +1; rational table (plus optional geometric tail)
    on the nonpositive integers.  Rejects specs whose mean is not exactly 0."""

    up: Fraction
    head: tuple[tuple[int, Fraction], ...] = ()
    tail: Optional[GeometricTail] = None

    family = "rclat"

    def __post_init__(self):
        object.__setattr__(self, "up", _F(self.up))
        object.__setattr__(
            self, "head", tuple(sorted((int(v), _F(q)) for v, q in self.head))
        )
        seen = set()
        for v, q in self.head:
            if v > 0:
                raise IntwalkConfigError("head values must be <= 0")
            if v in seen:
                raise IntwalkConfigError(f"duplicate head value {v}")
            seen.add(v)
            if q < 0:
                raise NegativeProbability(f"mass at {v} is negative")
            if self.tail is not None and -v >= self.tail.start:
                raise IntwalkConfigError("head overlaps geometric tail")
        if not (0 < self.up <= 1):
            raise NegativeProbability("up mass must lie in (0, 1]")
        mass, mean = self._mass_mean()
        if mass != 1:
            raise MassDeficit(f"total mass {mass} != 1")
        if mean != 0:
            raise NonCentered(f"mean {mean} != 0")

    def lattice_table(self):
        table = {1: self.up}
        table.update({v: q for v, q in self.head})
        return table, self.tail

    def _mass_mean(self):
        mass = self.up + sum((q for _, q in self.head), _F(0))
        mean = self.up + sum((q * v for v, q in self.head), _F(0))
        if self.tail is not None:
            mass += self.tail.mass
            mean += self.tail.mean
        return mass, mean

    def sample_block(self, rng, size):
        u = rng.random(size)
        cuts = np.cumsum(
            [float(self.up)] + [float(q) for _, q in self.head]
        )
        idx = np.searchsorted(cuts, u, side="right")
        out = np.empty(size, dtype=np.int64)
        out[idx == 0] = 1
        for j, (v, _) in enumerate(self.head):
            out[idx == j + 1] = v
        in_tail = idx == len(cuts)
        n_tail = int(in_tail.sum())
        if n_tail:
            if self.tail is None:  # float roundoff at the last cut
                out[in_tail] = self.head[-1][0] if self.head else 1
            else:
                g = rng.geometric(1.0 - float(self.tail.ratio), size=n_tail)
                out[in_tail] = -(self.tail.start - 1 + g)
        return out

    def sample_positive_block(self, rng, size):
        return np.ones(size, dtype=np.int64)

    @property
    def spec_id(self):
        bits = [f"up={self.up}"]
        if self.head:
            bits.append("head=" + ",".join(f"{v}:{q}" for v, q in self.head))
        if self.tail is not None:
            bits.append(
                f"tail={self.tail.start}:{self.tail.coeff}:{self.tail.ratio}"
            )
        return "rclat(" + ";".join(bits) + ")"

    def to_config(self):
        lines = ["family = rclat", f"up = {self.up}"]
        if self.head:
            lines.append("head = " + ",".join(f"{v}:{q}" for v, q in self.head))
        if self.tail is not None:
            lines.append(f"tail_start = {self.tail.start}")
            lines.append(f"tail_coeff = {self.tail.coeff}")
            lines.append(f"tail_ratio = {self.tail.ratio}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RightExponential(IncrementSpec):
    """Exponential right part with mass ``pos``; mirrored exponential left
    part whose rate balances the mean to exactly zero."""

    pos: Fraction
    rate: Fraction = _F(1)
    neg_rate: Optional[Fraction] = None

    family = "rexp"

    def __post_init__(self):
        object.__setattr__(self, "pos", _F(self.pos))
        object.__setattr__(self, "rate", _F(self.rate))
        if not (0 < self.pos < 1):
            raise NegativeProbability("pos must lie in (0, 1)")
        if self.rate <= 0:
            raise IntwalkConfigError("rate must be positive")
        if self.neg_rate is None:
            balanced = self.rate * (1 - self.pos) / self.pos
            object.__setattr__(self, "neg_rate", balanced)
        else:
            object.__setattr__(self, "neg_rate", _F(self.neg_rate))
        if self.neg_rate <= 0:
            raise IntwalkConfigError("neg_rate must be positive")
        mean = self.pos / self.rate - (1 - self.pos) / self.neg_rate
        if mean != 0:
            raise NonCentered(f"mean {mean} != 0")

    @property
    def is_lattice(self):
        return False

    @property
    def pos_prob(self):
        return self.pos

    @property
    def e_abs(self):
        return 2 * self.pos / self.rate

    @property
    def sigma2(self):
        return 2 * self.pos / self.rate**2 + 2 * (1 - self.pos) / self.neg_rate**2

    def sample_block(self, rng, size):
        u = rng.random(size)
        e = rng.standard_exponential(size)
        return np.where(u < float(self.pos), e / float(self.rate), -e / float(self.neg_rate))

    def sample_positive_block(self, rng, size):
        return rng.standard_exponential(size) / float(self.rate)

    @property
    def spec_id(self):
        if self.pos == _F(1, 2) and self.neg_rate == self.rate:
            return f"laplace({self.rate})"
        return f"rexp(pos={self.pos};rate={self.rate};neg_rate={self.neg_rate})"

    def to_config(self):
        return (
            f"family = rexp\npos = {self.pos}\nrate = {self.rate}\n"
            f"neg_rate = {self.neg_rate}\n"
        )


def laplace(rate=_F(1)) -> RightExponential:
    """Laplace law with density (rate/2) exp(-rate |x|)."""
    return RightExponential(pos=_F(1, 2), rate=_F(rate), neg_rate=_F(rate))


def geometric_right_continuous(ratio, start: int = 1) -> RightContinuousLattice:
    """Centered right-continuous walk with a pure geometric negative tail.

    Solves P(S1=1) = up and the tail coefficient exactly so that mass is 1
    and the mean is 0.  With ratio 1/2, start 1: up = 2/3, P(-k) = (1/3) 2^-k.
    """
    r = _F(ratio)
    s = int(start)
    # tail mass m_t = coeff/(1-r); tail |mean| = coeff (s/(1-r) + r/(1-r)^2)
    # solve up + m_t = 1, up = |tail mean|
    unit_mass = 1 / (1 - r)
    unit_mean = _F(s) / (1 - r) + r / (1 - r) ** 2
    coeff = 1 / (unit_mass + unit_mean)
    up = coeff * unit_mean
    return RightContinuousLattice(
        up=up, head=(), tail=GeometricTail(start=s, coeff=coeff, ratio=r)
    )


# ---------------------------------------------------------------------------
# Heavy tail family
# ---------------------------------------------------------------------------

_HEAVY_TABLE_SIZE = 1 << 20


@lru_cache(maxsize=None)
def _heavy_solution(alpha: float, tail_min: int):
    """Solve (up, c) for the heavy family at 50 digits; return mpf pair."""
    with mpmath.workdps(50):
        partial_a = mpmath.fsum(mpmath.power(k, -alpha) for k in range(1, tail_min))
        partial_a1 = mpmath.fsum(
            mpmath.power(k, -alpha - 1) for k in range(1, tail_min)
        )
        z_mean = mpmath.zeta(alpha) - partial_a  # sum k >= tail_min of k^-alpha
        z_mass = mpmath.zeta(alpha + 1) - partial_a1
        c = 1 / (z_mean + z_mass)
        up = c * z_mean
        return +up, +c


@lru_cache(maxsize=None)
def _heavy_cdf_table(alpha: float, tail_min: int) -> np.ndarray:
    """Cumulative masses of the negative magnitudes k = tail_min .. table end."""
    _, c = _heavy_solution(alpha, tail_min)
    ks = np.arange(tail_min, tail_min + _HEAVY_TABLE_SIZE, dtype=np.float64)
    return np.cumsum(float(c) * ks ** (-alpha - 1.0))


@dataclass(frozen=True)
class HeavyTailRightContinuous(IncrementSpec):
    """Right-continuous walk in the domain of normal attraction of an
    alpha-stable law, 1 < alpha < 2.

    P(S1 = 1) and the tail constant c are solved from zeta values so that the
    law has total mass 1 and mean 0 to 50 digits.  Sampling inverts the exact
    power tail (table up to 2**20, closed-form power inversion beyond), so
    the tail exponent is not truncated.
    """

    alpha_index: float
    tail_min: int = 1

    family = "heavy"

    def __post_init__(self):
        object.__setattr__(self, "alpha_index", float(self.alpha_index))
        if not (1.0 < self.alpha_index < 2.0):
            raise IntwalkConfigError("alpha must lie strictly between 1 and 2")
        if self.tail_min < 1:
            raise IntwalkConfigError("tail_min must be >= 1")

    @property
    def is_lattice(self):
        return True

    @property
    def alpha(self):
        return self.alpha_index

    @property
    def pos_prob(self) -> Fraction:
        up, _ = _heavy_solution(self.alpha_index, self.tail_min)
        return _mpf_to_frac(up)

    @property
    def tail_constant(self) -> float:
        _, c = _heavy_solution(self.alpha_index, self.tail_min)
        return float(c)

    @property
    def e_abs(self) -> Fraction:
        return 2 * self.pos_prob

    @property
    def sigma2(self):
        raise VarianceUndefined(f"alpha = {self.alpha_index} < 2")

    def pmf(self, value: int) -> Fraction:
        """2**-128 rational approximant of the (irrational) exact mass."""
        if value == 1:
            return self.pos_prob
        if value > 1 or value == 0 or -value < self.tail_min:
            return _F(0)
        _, c = _heavy_solution(self.alpha_index, self.tail_min)
        with mpmath.workdps(50):
            return _mpf_to_frac(c * mpmath.power(-value, -self.alpha_index - 1))

    def lattice_params(self) -> LatticeParams:
        return LatticeParams(d=1, h=1, shift=0)

    def sample_block(self, rng, size):
        up = float(_heavy_solution(self.alpha_index, self.tail_min)[0])
        cdf = _heavy_cdf_table(self.alpha_index, self.tail_min)
        u = rng.random(size)
        out = np.ones(size, dtype=np.int64)
        neg = u >= up
        resid = u[neg] - up
        idx = np.searchsorted(cdf, resid, side="left")
        mag = idx + self.tail_min
        over = idx >= cdf.shape[0]
        if over.any():
            # closed-form inversion of the power tail beyond the table
            a = self.alpha_index
            c = self.tail_constant
            left = (1.0 - up) - resid[over]  # mass strictly beyond drawn point
            left = np.maximum(left, 1e-300)
            mag[over] = np.ceil((a * left / c) ** (-1.0 / a)).astype(np.int64)
        out[neg] = -mag
        return out

    def sample_positive_block(self, rng, size):
        return np.ones(size, dtype=np.int64)

    @property
    def spec_id(self):
        return f"heavy(alpha={self.alpha_index};k0={self.tail_min})"

    def to_config(self):
        return f"family = heavy\nalpha = {self.alpha_index!r}\ntail_min = {self.tail_min}\n"


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    family: str
    mass: object
    mean: object
    pos_prob: object
    e_abs: object
    variance: object  # None when undefined
    alpha: float
    right_class: str
    lattice: Optional[LatticeParams]
    notes: tuple[str, ...] = ()


def validate(spec: IncrementSpec) -> ValidationReport:
    """Check structural requirements and report the law's invariant facts.

    Exact-lattice and right-exponential families are checked in rational
    arithmetic (raises NonCentered / MassDeficit / NegativeProbability on
    violation).  The heavy family is certified numerically: mass and mean
    residuals, including an integral bound on the unsummed tail, must be
    below 1e-12.
    """
    notes = []
    if isinstance(spec, HeavyTailRightContinuous):
        a, k0 = spec.alpha_index, spec.tail_min
        up, c = (float(x) for x in _heavy_solution(a, k0))
        ks = np.arange(k0, k0 + 200_000, dtype=np.float64)
        w = c * ks ** (-a - 1.0)
        kmax = float(ks[-1])
        mass_rem = c / a * kmax ** (-a)  # integral bound on sum beyond table
        mean_rem = c / (a - 1.0) * kmax ** (1.0 - a)
        mass = up + float(w.sum())
        mean = up - float((w * ks).sum())
        if abs(mass - 1.0) > 1e-12 + mass_rem:
            raise MassDeficit(f"heavy mass residual {mass - 1.0}")
        if abs(mean) > 1e-12 + mean_rem:
            raise NonCentered(f"heavy mean residual {mean}")
        notes.append(f"mass and mean certified to 1e-12 (tail bound {mass_rem:.2e})")
        return ValidationReport(
            family=spec.family,
            mass=1,
            mean=0,
            pos_prob=spec.pos_prob,
            e_abs=spec.e_abs,
            variance=None,
            alpha=a,
            right_class="right_continuous",
            lattice=spec.lattice_params(),
            notes=tuple(notes),
        )
    if isinstance(spec, RightExponential):
        mean = spec.pos / spec.rate - (1 - spec.pos) / spec.neg_rate
        if mean != 0:
            raise NonCentered(f"mean {mean} != 0")
        return ValidationReport(
            family=spec.family,
            mass=_F(1),
            mean=_F(0),
            pos_prob=spec.pos_prob,
            e_abs=spec.e_abs,
            variance=spec.sigma2,
            alpha=2.0,
            right_class="right_exponential",
            lattice=None,
            notes=("series convergence toward P(S_n > 0) -> 1/2 is probed "
                   "numerically, not asserted",),
        )
    if isinstance(spec, _ExactLattice):
        mass, mean = spec._mass_mean()
        head, tail = spec.lattice_table()
        if any(q < 0 for q in head.values()):
            raise NegativeProbability("negative mass in table")
        if mass != 1:
            raise MassDeficit(f"total mass {mass} != 1")
        if mean != 0:
            raise NonCentered(f"mean {mean} != 0")
        return ValidationReport(
            family=spec.family,
            mass=mass,
            mean=mean,
            pos_prob=spec.pos_prob,
            e_abs=spec.e_abs,
            variance=spec.sigma2,
            alpha=2.0,
            right_class="right_continuous",
            lattice=spec.lattice_params(),
            notes=(),
        )
    raise IntwalkConfigError(f"unknown spec type {type(spec)!r}")


def moments(spec: IncrementSpec) -> dict:
    """Moment bundle {mean, variance, e_abs, pos_prob}; variance None if undefined."""
    try:
        var = spec.sigma2
    except VarianceUndefined:
        var = None
    return {"mean": 0, "variance": var, "e_abs": spec.e_abs, "pos_prob": spec.pos_prob}


# ---------------------------------------------------------------------------
# Text round trip
# ---------------------------------------------------------------------------


def _parse_kv(text: str) -> dict[str, str]:
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise IntwalkConfigError(f"expected 'key = value', got {raw!r}")
        key, val = line.split("=", 1)
        key = key.strip()
        if key in out:
            raise IntwalkConfigError(f"duplicate key {key!r}")
        out[key] = val.strip()
    return out


_SPEC_KEYS = {
    "simple": set(),
    "lazy": {"stay"},
    "rclat": {"up", "head", "tail_start", "tail_coeff", "tail_ratio"},
    "rexp": {"pos", "rate", "neg_rate"},
    "heavy": {"alpha", "tail_min"},
}


def spec_from_config(text: str) -> IncrementSpec:
    """Parse the key-value spec schema (see README); inverse of to_config()."""
    kv = _parse_kv(text)
    family = kv.pop("family", None)
    if family not in _SPEC_KEYS:
        raise IntwalkConfigError(f"unknown family {family!r}")
    unknown = set(kv) - _SPEC_KEYS[family]
    if unknown:
        raise IntwalkConfigError(f"unknown keys for {family}: {sorted(unknown)}")
    if family == "simple":
        return SimpleWalk()
    if family == "lazy":
        return LazySimpleWalk(stay=_parse_rat(kv.get("stay", "1/2")))
    if family == "rexp":
        pos = _parse_rat(kv.get("pos", "1/2"))
        rate = _parse_rat(kv.get("rate", "1"))
        neg = _parse_rat(kv["neg_rate"]) if "neg_rate" in kv else None
        return RightExponential(pos=pos, rate=rate, neg_rate=neg)
    if family == "heavy":
        return HeavyTailRightContinuous(
            alpha_index=float(_parse_rat(kv.get("alpha", "3/2"))),
            tail_min=int(kv.get("tail_min", "1")),
        )
    # rclat
    head = ()
    if kv.get("head"):
        pairs = []
        for item in kv["head"].split(","):
            v, q = item.split(":")
            pairs.append((int(v), _parse_rat(q)))
        head = tuple(pairs)
    tail = None
    if "tail_start" in kv or "tail_coeff" in kv or "tail_ratio" in kv:
        try:
            tail = GeometricTail(
                start=int(kv["tail_start"]),
                coeff=_parse_rat(kv["tail_coeff"]),
                ratio=_parse_rat(kv["tail_ratio"]),
            )
        except KeyError as exc:
            raise IntwalkConfigError("incomplete geometric tail") from exc
    if "up" not in kv:
        raise IntwalkConfigError("rclat requires 'up'")
    return RightContinuousLattice(up=_parse_rat(kv["up"]), head=head, tail=tail)


def named_spec(name: str) -> IncrementSpec:
    """Short names used on the command line and in tests.

    simple | lazy(1/2) | geom-rc(1/2) | geom-rc(1/2,2) | laplace(1) |
    rexp(2/3,1) | heavy(3/2) | heavy(3/2,2)
    """
    name = name.strip()
    if "(" in name:
        base, rest = name.split("(", 1)
        if not rest.endswith(")"):
            raise IntwalkConfigError(f"unbalanced spec name {name!r}")
        args = [a for a in rest[:-1].split(",") if a.strip()]
    else:
        base, args = name, []
    base = base.strip()
    if base == "simple":
        return SimpleWalk()
    if base == "lazy":
        return LazySimpleWalk(stay=_parse_rat(args[0]) if args else _F(1, 2))
    if base == "geom-rc":
        ratio = _parse_rat(args[0]) if args else _F(1, 2)
        start = int(args[1]) if len(args) > 1 else 1
        return geometric_right_continuous(ratio, start)
    if base == "laplace":
        return laplace(_parse_rat(args[0]) if args else _F(1))
    if base == "rexp":
        if len(args) < 2:
            raise IntwalkConfigError("rexp needs pos and rate")
        neg = _parse_rat(args[2]) if len(args) > 2 else None
        return RightExponential(pos=_parse_rat(args[0]), rate=_parse_rat(args[1]),
                                neg_rate=neg)
    if base == "heavy":
        alpha = float(_parse_rat(args[0])) if args else 1.5
        k0 = int(args[1]) if len(args) > 1 else 1
        return HeavyTailRightContinuous(alpha_index=alpha, tail_min=k0)
    raise IntwalkConfigError(f"unknown spec name {name!r}")
