"""Exact computation of persistence probabilities and cycle laws.

The workhorse is a layered dynamic program over states (S, A) = (walk value,
integrated value) restricted to the alive region A > 0.  For finite-support
specs whose masses share a common denominator D the layer masses are big
integers over D^t (fast path); otherwise exact rationals are used.

Two structural facts keep everything exact without truncation, even for
geometric negative tails:

- at an alive state, every step X <= -(A + S) makes the next integrated
  value nonpositive, so the whole lower tail aggregates into a single
  failure branch whose mass is the closed-form CDF value;
- since the only positive step of the lattice families is +1, a walk value
  below -(remaining steps) can never contribute to any event that requires
  the walk (or its integral) to come back up, which bounds the state space
  of the one-dimensional marginal convolutions as well.

Single-horizon queries additionally absorb states that can no longer fail:
with m steps remaining and worst step -L, the state is certainly persistent
when A + j S - L j(j+1)/2 > 0 for j = 1 and j = m (the expression is concave
in j, so checking the endpoints suffices).

Mass conservation (alive + absorbed + failed = 1) is asserted at every layer
unless explicitly disabled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import NotInBridgeSet, StateBudgetExceeded, TooLarge
from .increments import IncrementSpec
from .walk import CrossingConvention

_F = Fraction


@dataclass(frozen=True)
class FloatValue:
    """Float-mode result with a first-order rounding bound (not certified)."""

    value: float
    bound: float

    @property
    def interval(self) -> tuple[float, float]:
        return (self.value - self.bound, self.value + self.bound)


def _int_table(spec: IncrementSpec):
    """(atoms, D, L) for finite-support specs with common denominator D, else None."""
    head, tail = spec.lattice_table()
    if tail is not None:
        return None
    d = 1
    for q in head.values():
        d = d * q.denominator // math.gcd(d, q.denominator)
    atoms = [(v, int(q * d)) for v, q in sorted(head.items(), reverse=True) if q > 0]
    max_down = max((-v for v, _ in atoms), default=0)
    return atoms, d, max_down


def _check_exact_lattice(spec: IncrementSpec):
    if not spec.exact_lattice:
        raise TooLarge(
            f"{spec.spec_id} is not an exact lattice spec; use the Monte Carlo "
            "estimators instead"
        )


def _persistence_int(spec, n, atoms, den, max_down, absorb, check):
    shift = (n * (n + 1) // 2 + 1).bit_length()
    amask = (1 << shift) - 1
    off = n * max_down + 1
    layer = {(off << shift) | 0: 1}
    success_scaled = 0  # numerator over den**n, filled by absorption
    fail_scaled = 0
    pow_den = [den**k for k in range(n + 1)]
    for t in range(n):
        m = n - t
        new = {}
        absorbed = 0
        failed = 0
        for key, mass in layer.items():
            s = (key >> shift) - off
            a = key & amask
            if absorb and a + s - max_down > 0 and a + m * s - max_down * m * (m + 1) // 2 > 0:
                absorbed += mass
                continue
            base = a + s
            for x, c in atoms:
                a2 = base + x
                if a2 > 0:
                    k2 = ((s + x + off) << shift) | a2
                    v = new.get(k2)
                    new[k2] = mass * c if v is None else v + mass * c
                else:
                    failed += mass * c
        layer = new
        success_scaled += absorbed * pow_den[m]
        fail_scaled = fail_scaled * den + failed
        if check:
            # alive and failed carry denominator den^(t+1); success den^n
            total = (sum(layer.values()) + fail_scaled) * pow_den[n - t - 1]
            total += success_scaled
            if total != pow_den[n]:
                raise AssertionError(
                    f"mass leak at layer {t + 1}: {total} != {pow_den[n]}"
                )
    success_scaled += sum(layer.values())
    return _F(success_scaled, pow_den[n])


def _persistence_frac(spec, n, absorb, check):
    max_down = spec.support_max_down()
    layer = {(0, 0): _F(1)}
    success = _F(0)
    failed = _F(0)
    for t in range(n):
        m = n - t
        new = {}
        for (s, a), mass in layer.items():
            if (
                absorb
                and max_down is not None
                and a + s - max_down > 0
                and a + m * s - max_down * m * (m + 1) // 2 > 0
            ):
                success += mass
                continue
            thr = -(a + s)  # steps <= thr fail
            failed += mass * spec.cdf_at_or_below(thr)
            for x, q in spec.atoms_above(thr):
                k2 = (s + x, a + s + x)
                v = new.get(k2)
                new[k2] = mass * q if v is None else v + mass * q
        layer = new
        if check:
            total = sum(layer.values(), _F(0)) + success + failed
            if total != 1:
                raise AssertionError(f"mass leak at layer {t + 1}: {total} != 1")
    return success + sum(layer.values(), _F(0))


def _persistence_float(spec, n):
    layer = {(0, 0): 1.0}
    for _ in range(n):
        new = {}
        for (s, a), mass in layer.items():
            thr = -(a + s)
            for x, q in spec.atoms_above(thr):
                k2 = (s + x, a + s + x)
                new[k2] = new.get(k2, 0.0) + mass * float(q)
        layer = new
    value = sum(layer.values())
    bound = 8.0 * n * np.finfo(float).eps * max(value, 1e-300)
    return FloatValue(value=value, bound=bound)


def exact_persistence(spec: IncrementSpec, n: int, mode: str = "rational",
                      check: bool = True):
    """P(min_{1<=k<=n} A_k > 0), exact (Fraction) or float with bound.

    Exact-lattice specs only (finite support or geometric tail).
    """
    _check_exact_lattice(spec)
    if n < 1:
        raise ValueError("n must be >= 1")
    if mode == "float":
        return _persistence_float(spec, n)
    if mode != "rational":
        raise ValueError(f"unknown mode {mode!r}")
    table = _int_table(spec)
    if table is not None:
        atoms, den, max_down = table
        return _persistence_int(spec, n, atoms, den, max_down, True, check)
    return _persistence_frac(spec, n, True, check)


def _profile_int(spec, n_max, atoms, den, max_down, check, want_bridge):
    shift = (n_max * (n_max + 1) // 2 + 1).bit_length()
    amask = (1 << shift) - 1
    off = n_max * max_down + 1
    layer = {(off << shift) | 0: 1}
    probs = []
    bridge_nums = []
    fail_scaled = 0
    for t in range(n_max):
        new = {}
        failed = 0
        for key, mass in layer.items():
            s = (key >> shift) - off
            a = key & amask
            base = a + s
            for x, c in atoms:
                a2 = base + x
                if a2 > 0:
                    k2 = ((s + x + off) << shift) | a2
                    v = new.get(k2)
                    new[k2] = mass * c if v is None else v + mass * c
                else:
                    failed += mass * c
        layer = new
        fail_scaled = fail_scaled * den + failed
        alive = sum(layer.values())
        if check and alive + fail_scaled != den ** (t + 1):
            raise AssertionError(f"mass leak at layer {t + 1}")
        probs.append(_F(alive, den ** (t + 1)))
        if want_bridge:
            at_zero = sum(m for key, m in layer.items() if (key >> shift) == off)
            bridge_nums.append(_F(at_zero, den ** (t + 1)))
    return probs, bridge_nums


def _profile_frac(spec, n_max, check, want_bridge):
    layer = {(0, 0): _F(1)}
    probs = []
    bridge_nums = []
    failed = _F(0)
    for t in range(n_max):
        new = {}
        for (s, a), mass in layer.items():
            thr = -(a + s)
            failed += mass * spec.cdf_at_or_below(thr)
            for x, q in spec.atoms_above(thr):
                k2 = (s + x, a + s + x)
                v = new.get(k2)
                new[k2] = mass * q if v is None else v + mass * q
        layer = new
        alive = sum(layer.values(), _F(0))
        if check and alive + failed != 1:
            raise AssertionError(f"mass leak at layer {t + 1}")
        probs.append(alive)
        if want_bridge:
            bridge_nums.append(
                sum((m for (s, _), m in layer.items() if s == 0), _F(0))
            )
    return probs, bridge_nums


def exact_persistence_profile(spec: IncrementSpec, n_max: int,
                              check: bool = True) -> list[Fraction]:
    """[p_1, ..., p_n_max] from one forward pass (no absorption)."""
    _check_exact_lattice(spec)
    table = _int_table(spec)
    if table is not None:
        atoms, den, max_down = table
        return _profile_int(spec, n_max, atoms, den, max_down, check, False)[0]
    return _profile_frac(spec, n_max, check, False)[0]


def walk_marginals(spec: IncrementSpec, n_max: int) -> list[dict[int, Fraction]]:
    """Exact marginals of S_1..S_n_max, floored for nonnegative queries.

    States with S < -(n_max - t) (times the maximal up-step, which is 1 for
    all exact lattice families) are dropped: they can never return to 0, so
    every returned P(S_t = v) with v >= 0 is exact, as is P(S_t > 0) and
    P(S_t >= 0).  Values below the floor are partially or wholly absent.
    """
    _check_exact_lattice(spec)
    dist = {0: _F(1)}
    out = []
    for t in range(1, n_max + 1):
        floor = -(n_max - t)
        new = {}
        for s, mass in dist.items():
            thr = floor - s - 1  # steps <= thr land strictly below the floor
            for x, q in spec.atoms_above(thr):
                k2 = s + x
                v = new.get(k2)
                new[k2] = mass * q if v is None else v + mass * q
        dist = new
        out.append(dist)
    return out


def exact_bridge_profile(spec: IncrementSpec, n_max: int,
                         check: bool = True) -> dict[int, Fraction]:
    """{n: P(min A > 0 | S_n = 0)} for n <= n_max with P(S_n = 0) > 0."""
    _check_exact_lattice(spec)
    table = _int_table(spec)
    if table is not None:
        atoms, den, max_down = table
        _, nums = _profile_int(spec, n_max, atoms, den, max_down, check, True)
    else:
        _, nums = _profile_frac(spec, n_max, check, True)
    marg = walk_marginals(spec, n_max)
    out = {}
    for n in range(1, n_max + 1):
        den_n = marg[n - 1].get(0, _F(0))
        if den_n > 0:
            out[n] = nums[n - 1] / den_n
    return out


def exact_bridge_persistence(spec: IncrementSpec, n: int) -> Fraction:
    """P(min_{1<=k<=n} A_k > 0 | S_n = 0); NotInBridgeSet when P(S_n=0)=0."""
    prof = exact_bridge_profile(spec, n)
    if n not in prof:
        raise NotInBridgeSet(f"P(S_{n} = 0) = 0 for {spec.spec_id}")
    return prof[n]


def enumerate_persistence(spec: IncrementSpec, n: int,
                          budget: int = 100_000_000) -> Fraction:
    """Independent oracle for exact_persistence.

    Finite-support specs: literal depth-first enumeration of alive paths
    (each alive prefix visited once, failing branches aggregated at the
    node).  Geometric-tail specs: a backward memoized recursion over
    (steps left, S, A) -- literal enumeration is combinatorially infeasible
    there because the branching factor grows with A + S.
    """
    _check_exact_lattice(spec)
    head, tail = spec.lattice_table()
    state = {"nodes": 0}

    def bump():
        state["nodes"] += 1
        if state["nodes"] > budget:
            raise TooLarge(f"enumeration exceeded {budget} nodes")

    if tail is None:
        atoms = [(v, q) for v, q in sorted(head.items(), reverse=True) if q > 0]
        if len(atoms) ** n > budget:
            raise TooLarge(f"{len(atoms)}^{n} paths exceed the budget")

        def rec(t: int, s: int, a: int) -> Fraction:
            bump()
            if t == n:
                return _F(1)
            tot = _F(0)
            for x, q in atoms:
                a2 = a + s + x
                if a2 > 0:
                    tot += q * rec(t + 1, s + x, a2)
            return tot

        return rec(0, 0, 0)

    memo: dict[tuple[int, int, int], Fraction] = {}

    def rec_memo(m: int, s: int, a: int) -> Fraction:
        if m == 0:
            return _F(1)
        key = (m, s, a)
        got = memo.get(key)
        if got is not None:
            return got
        bump()
        tot = _F(0)
        for x, q in spec.atoms_above(-(a + s)):
            tot += q * rec_memo(m - 1, s + x, a + s + x)
        memo[key] = tot
        return tot

    return rec_memo(n, 0, 0)


# ---------------------------------------------------------------------------
# Cycle laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactDist:
    """Finite exact distribution over (length, area) atoms."""

    atoms: dict
    total: Fraction

    @property
    def residual(self) -> Fraction:
        return 1 - self.total

    def prob(self, key) -> Fraction:
        return self.atoms.get(key, _F(0))


@dataclass(frozen=True)
class CycleLawResult:
    convention: CrossingConvention
    horizon: int
    law: ExactDist          # (theta, psi)
    hat_law: ExactDist      # (theta_hat, area at theta_hat)
    residual: Fraction


def _closes(convention, s, s2):
    if convention is CrossingConvention.LEAVE_ZERO:
        return s == 0 and s2 != 0
    if convention is CrossingConvention.STRICT_UP:
        return s < 0 and s2 >= 0
    return s <= 0 and s2 > 0


def exact_cycle_law(
    spec: IncrementSpec,
    horizon: int,
    convention: CrossingConvention = CrossingConvention.WEAK_UP,
    budget: int = 4_000_000,
) -> CycleLawResult:
    """Exact law of the first cycle, restricted to length <= horizon.

    The walk starts under its first-step conditioning (S_1 > 0, or S_1 != 0
    for LEAVE_ZERO).  Returns the (theta, psi) law, the law of the
    last-negative prefix (theta_hat, area at theta_hat), and the residual
    mass of cycles longer than the horizon.  Under LAST_NEGATIVE the main
    law *is* the prefix law, restricted to weak-up cycles that close within
    the horizon.  Bounded support only.
    """
    _check_exact_lattice(spec)
    head, tail = spec.lattice_table()
    if tail is not None:
        raise TooLarge("cycle law enumeration needs bounded support")
    atoms = [(v, q) for v, q in sorted(head.items(), reverse=True) if q > 0]
    if convention is CrossingConvention.LEAVE_ZERO:
        cond = sum((q for v, q in atoms if v != 0), _F(0))
        starts = [(v, q / cond) for v, q in atoms if v != 0]
    else:
        cond = sum((q for v, q in atoms if v > 0), _F(0))
        starts = [(v, q / cond) for v, q in atoms if v > 0]
    close_conv = (
        CrossingConvention.WEAK_UP
        if convention is CrossingConvention.LAST_NEGATIVE
        else convention
    )
    law: dict = {}
    hat: dict = {}
    residual = _F(0)
    nodes = 0

    def emit(table, key, p):
        v = table.get(key)
        table[key] = p if v is None else v + p

    stack = []
    for v, q in starts:
        ln, aln = (1, v) if v < 0 else (0, 0)
        stack.append((1, v, v, ln, aln, q))
    while stack:
        t, s, a, ln, aln, prob = stack.pop()
        nodes += 1
        if nodes > budget:
            raise StateBudgetExceeded(f"cycle law exceeded {budget} nodes")
        for x, q in atoms:
            s2 = s + x
            p2 = prob * q
            if _closes(close_conv, s, s2):
                if convention is CrossingConvention.LAST_NEGATIVE:
                    emit(law, (ln, aln), p2)
                else:
                    emit(law, (t, a), p2)
                emit(hat, (ln, aln), p2)
            elif t == horizon:
                residual += p2
            else:
                a2 = a + s2
                if s2 < 0:
                    stack.append((t + 1, s2, a2, t + 1, a2, p2))
                else:
                    stack.append((t + 1, s2, a2, ln, aln, p2))

    total = sum(law.values(), _F(0))
    hat_total = sum(hat.values(), _F(0))
    return CycleLawResult(
        convention=convention,
        horizon=horizon,
        law=ExactDist(atoms=law, total=total),
        hat_law=ExactDist(atoms=hat, total=hat_total),
        residual=residual,
    )


@dataclass(frozen=True)
class AuditResult:
    """Outcome of a sign-symmetry audit of a (length, area) law."""

    max_gap: Fraction
    witness: Optional[tuple]
    zero_length_mass: Fraction

    @property
    def symmetric(self) -> bool:
        return self.max_gap == 0


def symmetry_audit(dist: ExactDist) -> AuditResult:
    """Largest |P(t, a) - P(t, -a)| over atoms, with the worst atom.

    Mass on zero-length atoms (degenerate cycles with no negative value,
    where the reflection statement is vacuous) is reported separately.
    """
    max_gap = _F(0)
    witness = None
    zero_mass = _F(0)
    for (t, a), p in dist.atoms.items():
        if t == 0:
            zero_mass += p
        gap = abs(p - dist.prob((t, -a)))
        if gap > max_gap:
            max_gap = gap
            witness = (t, a) if a >= 0 else (t, -a)
    return AuditResult(max_gap=max_gap, witness=witness, zero_length_mass=zero_mass)


def exact_cycle_min_positive(spec: IncrementSpec, n: int,
                             budget: int = 50_000_000) -> Fraction:
    """P(all complete-cycle boundary areas positive by time n | S_1 > 0).

    Cycle boundaries use the weak-up convention; a boundary at time m <= n
    needs S_{m+1}, so paths of length n+1 are enumerated.  Exhaustive and
    exact; bounded support only.
    """
    _check_exact_lattice(spec)
    head, tail = spec.lattice_table()
    if tail is not None:
        raise TooLarge("exhaustive cycle scan needs bounded support")
    atoms = [(v, q) for v, q in sorted(head.items(), reverse=True) if q > 0]
    if len(atoms) ** (n + 1) > budget:
        raise TooLarge(f"{len(atoms)}^{n + 1} paths exceed the budget")
    pos = sum((q for v, q in atoms if v > 0), _F(0))
    starts = [(v, q / pos) for v, q in atoms if v > 0]
    good = _F(0)

    # ok tracks "every boundary area so far positive"
    stack = [(1, v, v, True, q) for v, q in starts]
    while stack:
        t, s, a, ok, prob = stack.pop()
        if t == n + 1:
            if ok:
                good += prob
            continue
        for x, q in atoms:
            s2 = s + x
            ok2 = ok and not (s <= 0 and s2 > 0 and a <= 0)
            stack.append((t + 1, s2, a + s2, ok2, prob * q))
    return good


def zero_return_length_law(spec: IncrementSpec, n_max: int) -> np.ndarray:
    """Float law P(first leave-zero boundary at time t | S_1 != 0), t=1..n_max.

    A leave-zero boundary at time t means S_t = 0 and S_{t+1} != 0.  Walks
    that sit at zero over several steps close their boundary only when they
    leave.  One-dimensional float convolution; finite-support specs only.
    Returned array is indexed so that out[t-1] = P(boundary time = t).
    """
    _check_exact_lattice(spec)
    head, tail = spec.lattice_table()
    if tail is not None:
        raise TooLarge("boundary-length law needs bounded support")
    kernel = [(v, float(q)) for v, q in head.items() if q > 0]
    p0 = float(head.get(0, _F(0)))
    max_down = max((-v for v, _ in kernel), default=0)
    offset = n_max * max(1, max_down) + 1
    dist = np.zeros(offset + n_max + 2, dtype=np.float64)
    for v, q in kernel:
        if v != 0:
            dist[offset + v] = q / (1.0 - p0)
    out = np.zeros(n_max + 1, dtype=np.float64)
    for t in range(1, n_max + 1):
        at_zero = dist[offset]
        out[t] = at_zero * (1.0 - p0)  # at zero now, leaves on the next step
        if t == n_max:
            break
        dist[offset] = 0.0  # walks at zero either emit above or stay via p0
        new = np.zeros_like(dist)
        for v, q in kernel:
            if v > 0:
                new[v:] += q * dist[:-v]
            elif v < 0:
                new[:v] += q * dist[-v:]
            else:
                new += q * dist
        new[offset] += at_zero * p0
        dist = new
    return out[1:]
