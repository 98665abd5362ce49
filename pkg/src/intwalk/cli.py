"""Config-driven experiment runner.

Every library operation is exposed as a subcommand.  Resolution order for
parameters: built-in defaults, then `--config FILE` (key = value lines, `#`
comments), then command-line flags.  Unknown config keys are rejected.

Every run emits a manifest (the fully resolved configuration plus the
library version) to standard error, and to `<out>.manifest` when `--out` is
given; feeding a manifest back through `--config` reproduces the run
byte-for-byte.  Standard output carries data (CSV) only; all human-readable
text goes to standard error.

Exit codes: 0 ok, 1 enabled assertion failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from typing import Callable, Optional

from . import __version__
from .errors import (
    AssertionFailed,
    BudgetError,
    DegenerateGrid,
    ExponentMismatch,
    IntwalkConfigError,
    NoReferenceLaw,
    NotInBridgeSet,
)
from .increments import IncrementSpec, named_spec, spec_from_config
from .walk import CrossingConvention
from . import exact, fluct, mc

SEED_ENV = "INTWALK_SEED"

_CONVENTIONS = {
    "weak-up": CrossingConvention.WEAK_UP,
    "strict-up": CrossingConvention.STRICT_UP,
    "leave-zero": CrossingConvention.LEAVE_ZERO,
    "last-negative": CrossingConvention.LAST_NEGATIVE,
}

EXACT_HEADER = ["spec_id", "n", "quantity", "value_num", "value_den"]
MC_HEADER = ["spec_id", "quantity", "n", "value", "stderr", "n_samples",
             "seed", "shards"]
FIT_HEADER = ["slope", "slope_lo", "slope_hi", "intercept", "r2"]


# ---------------------------------------------------------------------------
# Config plumbing
# ---------------------------------------------------------------------------


def _parse_config_text(text: str, source: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise IntwalkConfigError(
                f"{source}:{lineno}: expected 'key = value', got {raw!r}"
            )
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _coerce(key: str, kind: str, raw):
    if not isinstance(raw, str):
        return raw
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "intlist":
            return tuple(int(tok) for tok in raw.split(",") if tok.strip())
        return raw  # str
    except ValueError as exc:
        raise IntwalkConfigError(f"key {key!r}: cannot parse {raw!r} as {kind}") from exc


class Resolved(dict):
    """Merged configuration with attribute-free, checked access."""

    def req(self, key):
        if self.get(key) is None:
            raise IntwalkConfigError(f"missing required key {key!r}")
        return self[key]


def _resolve(command: str, keys: dict, args: argparse.Namespace) -> Resolved:
    """defaults <- config file <- flags; reject unknown config keys."""
    cfg = Resolved((k, spec[1]) for k, spec in keys.items())
    if args.config:
        with open(args.config) as fh:
            file_kv = _parse_config_text(fh.read(), args.config)
        cmd = file_kv.pop("command", None)
        if cmd is not None and cmd != command:
            raise IntwalkConfigError(
                f"config file is for command {cmd!r}, not {command!r}"
            )
        file_kv.pop("version", None)
        unknown = set(file_kv) - set(keys)
        if unknown:
            raise IntwalkConfigError(
                f"unknown config keys for {command}: {sorted(unknown)}; "
                f"allowed: {sorted(keys)}"
            )
        for k, v in file_kv.items():
            cfg[k] = _coerce(k, keys[k][0], v)
    for k, spec in keys.items():
        flag_val = getattr(args, k.replace("-", "_"), None)
        if flag_val is not None:
            cfg[k] = _coerce(k, spec[0], flag_val)
    if "seed" in keys and cfg.get("seed") is None:
        cfg["seed"] = int(os.environ.get(SEED_ENV, "0"))
    return cfg


def _manifest(command: str, keys: dict, cfg: Resolved) -> str:
    lines = [f"command = {command}", f"version = {__version__}"]
    for k in sorted(keys):
        v = cfg.get(k)
        if v is None:
            continue
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


class Sink:
    """Routes CSV to --out (or stdout) and human text to stderr."""

    def __init__(self, out_path: Optional[str], manifest: str):
        self.out_path = out_path
        self.manifest = manifest

    def csv(self, header, rows) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)
        data = buf.getvalue()
        if self.out_path:
            with open(self.out_path, "w") as fh:
                fh.write(data)
            with open(self.out_path + ".manifest", "w") as fh:
                fh.write(self.manifest)
            self.human(f"wrote {self.out_path} (+.manifest)")
        else:
            sys.stdout.write(data)

    def human(self, text: str) -> None:
        print(text, file=sys.stderr)


def _spec_of(cfg: Resolved) -> IncrementSpec:
    if cfg.get("spec-file"):
        with open(cfg["spec-file"]) as fh:
            return spec_from_config(fh.read())
    return named_spec(cfg.req("family"))


def _rat(x: Fraction) -> tuple[int, int]:
    f = Fraction(x)
    return f.numerator, f.denominator


def _f(x) -> str:
    return repr(float(x))


def _grid(cfg: Resolved, even_only: bool = False):
    picked = [k for k in ("n", "n_grid", "n_max") if cfg.get(k) is not None]
    if len(picked) != 1:
        raise IntwalkConfigError("give exactly one of n, n_grid, n_max")
    if cfg.get("n") is not None:
        return [cfg["n"]]
    if cfg.get("n_grid") is not None:
        ns = sorted(set(cfg["n_grid"]))
    else:
        ns = list(range(1, cfg["n_max"] + 1))
    if even_only:
        ns = [n for n in ns if n % 2 == 0]
    if not ns:
        raise IntwalkConfigError("empty grid")
    return ns


def _require(cfg: Resolved, ok: bool, msg: str) -> None:
    if cfg.get("assert") and not ok:
        raise AssertionFailed(msg)


# ---------------------------------------------------------------------------
# Subcommand handlers.  Each entry: (help, keys, handler); keys map
# name -> (type, default, flag help).
# ---------------------------------------------------------------------------


def _h_exact_p(cfg: Resolved, sink: Sink) -> None:
    spec = _spec_of(cfg)
    ns = _grid(cfg)
    rows = []
    if cfg["mode"] == "float":
        for n in ns:
            v = exact.exact_persistence(spec, n, mode="float")
            rows.append([spec.spec_id, n, "pN", _f(v.value), ""])
            sink.human(f"p_{n}({spec.spec_id}) = {v.value!r} +- {v.bound:.3e}")
    else:
        if len(ns) > 1:
            profile = exact.exact_persistence_profile(spec, max(ns),
                                                      check=cfg["check"])
            values = {n: profile[n - 1] for n in ns}
        else:
            values = {ns[0]: exact.exact_persistence(spec, ns[0],
                                                     check=cfg["check"])}
        for n in ns:
            num, den = _rat(values[n])
            rows.append([spec.spec_id, n, "pN", num, den])
            sink.human(f"p_{n}({spec.spec_id}) = {num}/{den}")
    sink.csv(EXACT_HEADER, rows)


def _h_exact_bridge(cfg: Resolved, sink: Sink) -> None:
    spec = _spec_of(cfg)
    ns = _grid(cfg, even_only=cfg.get("n") is None)
    profile = exact.exact_bridge_profile(spec, max(ns), check=cfg["check"])
    rows = []
    for n in ns:
        if n not in profile:
            raise NotInBridgeSet(f"no return to zero at n={n} for {spec.spec_id}")
        num, den = _rat(profile[n])
        rows.append([spec.spec_id, n, "pStarN", num, den])
        sink.human(f"p*_{n}({spec.spec_id}) = {num}/{den}")
    sink.csv(EXACT_HEADER, rows)


def _h_enumerate(cfg: Resolved, sink: Sink) -> None:
    spec = _spec_of(cfg)
    n = cfg.req("n")
    value = exact.enumerate_persistence(spec, n, budget=cfg["budget"])
    num, den = _rat(value)
    sink.human(f"p_{n}({spec.spec_id}) = {num}/{den}  [exhaustive enumeration]")
    sink.csv(EXACT_HEADER, [[spec.spec_id, n, "pN", num, den]])


_LAW_HEADER = ["spec_id", "convention", "horizon", "kind", "theta",
               "psi_num", "psi_den", "prob_num", "prob_den"]


def _law_rows(spec_id, conv_name, result):
    rows = []
    for kind, dist in (("law", result.law), ("hat", result.hat_law)):
        for (t, a), p in sorted(dist.atoms.items()):
            an, ad = _rat(a)
            pn, pd = _rat(p)
            rows.append([spec_id, conv_name, result.horizon, kind, t,
                         an, ad, pn, pd])
    rn, rd = _rat(result.residual)
    rows.append([spec_id, conv_name, result.horizon, "residual", "", "", "",
                 rn, rd])
    return rows


def _h_cycle_law(cfg: Resolved, sink: Sink) -> None:
    spec = _spec_of(cfg)
    conv_name = cfg["convention"]
    if conv_name not in _CONVENTIONS:
        raise IntwalkConfigError(
            f"unknown convention {conv_name!r}; choose from {sorted(_CONVENTIONS)}"
        )
    result = exact.exact_cycle_law(spec, cfg.req("horizon"),
                                   convention=_CONVENTIONS[conv_name],
                                   budget=cfg["budget"])
    sink.human(
        f"{spec.spec_id} {conv_name} horizon {result.horizon}: "
        f"{len(result.law.atoms)} atoms, residual {result.residual}"
    )
    sink.csv(_LAW_HEADER, _law_rows(spec.spec_id, conv_name, result))


_AUDIT_HEADER = ["spec_id", "convention", "target", "horizon",
                 "max_gap_num", "max_gap_den",
                 "witness_theta", "witness_psi_num", "witness_psi_den",
                 "zero_mass_num", "zero_mass_den",
                 "mc_stat", "mc_value"]


def _h_symmetry_audit(cfg: Resolved, sink: Sink) -> None:
    spec = _spec_of(cfg)
    rows = []
    if spec.exact_lattice:
        names = (sorted(_CONVENTIONS) if cfg["convention"] == "all"
                 else [cfg["convention"]])
        for conv_name in names:
            if conv_name not in _CONVENTIONS:
                raise IntwalkConfigError(f"unknown convention {conv_name!r}")
            result = exact.exact_cycle_law(
                spec, cfg.req("horizon"), convention=_CONVENTIONS[conv_name],
                budget=cfg["budget"],
            )
            for target, dist in (("law", result.law), ("hat", result.hat_law)):
                audit = exact.symmetry_audit(dist)
                gn, gd = _rat(audit.max_gap)
                zn, zd = _rat(audit.zero_length_mass)
                wt, wn, wd = "", "", ""
                if audit.witness is not None:
                    wt = audit.witness[0]
                    wn, wd = _rat(audit.witness[1])
                rows.append([spec.spec_id, conv_name, target, result.horizon,
                             gn, gd, wt, wn, wd, zn, zd, "", ""])
                sink.human(
                    f"{conv_name}/{target}: max gap {gn}/{gd}"
                    + (f" at (theta={wt}, psi={wn}/{wd})" if wt != "" else "")
                )
    else:
        report = mc.psi_symmetry_check(spec, cfg.req("samples"),
                                       cfg["seed"], cap=cfg["cap"])
        for stat in ("ks_statistic", "p_value", "n_uncensored",
                     "censored_fraction"):
            rows.append([spec.spec_id, "weak-up", "psi-mc", "", "", "", "",
                         "", "", "", "", stat, _f(report[stat])])
        sink.human(
            f"psi sign-symmetry KS p = {report['p_value']:.4g} "
            f"({report['n_uncensored']} uncensored cycles)"
        )
        _require(cfg, report["p_value"] > cfg["level"],
                 f"psi symmetry KS p {report['p_value']:.4g} <= {cfg['level']}")
    sink.csv(_AUDIT_HEADER, rows)


def _positivity_source(cfg: Resolved, n: int) -> tuple[str, fluct.PositivitySeq]:
    src = cfg.req("probs")
    if src == "half":
        return "half", fluct.PositivitySeq(probs=(Fraction(1, 2),) * n,
                                           mode=cfg["mode"])
    spec = named_spec(src)
    return spec.spec_id, fluct.positivity_probs(spec, n, mode=cfg["mode"])


def _h_spitzer(cfg: Resolved, sink: Sink) -> None:
    n = cfg.req("n")
    source, seq = _positivity_source(cfg, n)
    q = fluct.sparre_andersen(seq)
    rows = []
    for k in range(1, n + 1):
        num, den = _rat(q[k])
        rows.append([source, k, "qN", num, den])
    sink.human(f"q_{n}({source}) = {q[n]}")
    sink.csv(["source", "n", "quantity", "value_num", "value_den"], rows)


def _h_series_diagnostic(cfg: Resolved, sink: Sink) -> None:
    n = cfg.req("n")
    source, seq = _positivity_source(cfg, n)
    alpha = cfg.get("alpha")
    if alpha is None:
        alpha = named_spec(cfg["probs"]).alpha if cfg["probs"] != "half" else 2.0
    partial = fluct.series_diagnostic(seq, alpha)
    rows = [[k + 1, _f(v)] for k, v in enumerate(partial)]
    sink.human(
        f"sum_{{k<=n}} (P(S_k>0) - 1/alpha)/k for {source}, alpha={alpha}: "
        f"last partial sum {partial[-1]!r}"
    )
    sink.csv(["n", "partial_sum"], rows)


_PROP2_HEADER = ["bspec_id", "n", "x", "lhs1_num", "lhs1_den", "rhs1_num",
                 "rhs1_den", "lhs2_num", "lhs2_den", "rhs2_num", "rhs2_den"]


def _h_prop2(cfg: Resolved, sink: Sink) -> None:
    bspec = fluct.named_bspec(cfg.req("bspec"))
    ns = _grid(cfg)
    rows, bad = [], 0
    for n in ns:
        for r in fluct.halfplane_measures(bspec, n, budget=cfg["budget"]):
            cells = [bspec.bspec_id, n, r.x]
            for v in (r.lhs1, r.rhs1, r.lhs2, r.rhs2):
                cells.extend(_rat(v))
            rows.append(cells)
            v1 = "PASS" if r.holds1 else "FAIL"
            v2 = "PASS" if r.holds2 else "FAIL"
            bad += (not r.holds1) + (not r.holds2)
            sink.human(
                f"n={n} x={r.x}: lhs1={r.lhs1} rhs1={r.rhs1} [{v1}]  "
                f"lhs2={r.lhs2} rhs2={r.rhs2} [{v2}]"
            )
    if not bspec.y_symmetric:
        sink.human(f"note: {bspec.bspec_id} is not y-symmetric; "
                   "the half-plane inequalities are not guaranteed")
    _require(cfg, bad == 0, f"{bad} half-plane inequality violation(s)")
    sink.csv(_PROP2_HEADER, rows)


def _mc_row(spec_id, quantity, n, value, stderr, n_samples, seed, shards):
    return [spec_id, quantity, n, _f(value), _f(stderr), n_samples, seed, shards]


def _h_corollary_check(cfg: Resolved, sink: Sink) -> None:
    spec = _spec_of(cfg)
    if spec.right_class != "right_exponential":
        raise IntwalkConfigError(
            "corollary-check needs a continuous right-exponential law "
            f"(got {spec.spec_id})"
        )
    res = fluct.corollary_independence_check(
        spec, cfg.req("n"), cfg.req("samples"), cfg["seed"], cap=cfg["cap"]
    )
    seed, n = cfg["seed"], cfg["n"]
    rows = [
        _mc_row(spec.spec_id, "corollaryKsStat", n, res.statistic, 0.0,
                res.n_conditioned, seed, 1),
        _mc_row(spec.spec_id, "corollaryKsP", n, res.p_value, 0.0,
                res.n_conditioned, seed, 1),
        _mc_row(spec.spec_id, "nConditioned", n, res.n_conditioned, 0.0,
                res.n_conditioned, seed, 1),
        _mc_row(spec.spec_id, "nUnconditioned", n, res.n_unconditioned, 0.0,
                res.n_unconditioned, seed, 1),
    ]
    sink.human(
        f"Theta_{n} | (min cycle areas > 0) vs unconditioned: KS p = "
        f"{res.p_value:.4g} ({res.n_conditioned} vs {res.n_unconditioned} draws)"
    )
    _require(cfg, res.p_value > cfg["level"],
             f"corollary KS p {res.p_value:.4g} <= {cfg['level']}")
    sink.csv(MC_HEADER, rows)


def _h_mc_p(cfg: Resolved, sink: Sink) -> None:
    spec = _spec_of(cfg)
    ns = _grid(cfg)
    seed, shards = cfg["seed"], cfg["shards"]
    rows = []
    for n in ns:
        est = mc.mc_persistence(spec, n, cfg.req("samples"), seed,
                                shards=shards, job=f"mc-p-{n}")
        rows.append(_mc_row(spec.spec_id, "pN", n, est.value, est.stderr,
                            est.n_samples, seed, shards))
        sink.human(f"p_{n}({spec.spec_id}) ~= {est.value:.6g} +- {est.stderr:.2g}")
    sink.csv(MC_HEADER, rows)


def _h_mc_cycle_tail(cfg: Resolved, sink: Sink) -> None:
    spec = _spec_of(cfg)
    ns = _grid(cfg)
    conv = _CONVENTIONS[cfg["convention"]]
    points = mc.mc_cycle_tail(spec, ns, cfg.req("samples"), cfg["cap"],
                              cfg["seed"], convention=conv)
    seed = cfg["seed"]
    rows = []
    for pt in points:
        rows.append(_mc_row(spec.spec_id, "thetaTail", pt.n, pt.prob.value,
                            pt.prob.stderr, pt.prob.n_samples, seed, 1))
        rows.append(_mc_row(spec.spec_id, "thetaTailScaled", pt.n, pt.scaled,
                            pt.scaled_stderr, pt.prob.n_samples, seed, 1))
        rows.append(_mc_row(spec.spec_id, "thetaTailScaledLo", pt.n,
                            pt.interval[0], 0.0, pt.prob.n_samples, seed, 1))
        rows.append(_mc_row(spec.spec_id, "thetaTailScaledHi", pt.n,
                            pt.interval[1], 0.0, pt.prob.n_samples, seed, 1))
        sink.human(
            f"n={pt.n}: n^(1-1/alpha) P(theta>=n) ~= {pt.scaled:.5g} "
            f"+- {pt.scaled_stderr:.2g} in [{pt.interval[0]:.5g}, "
            f"{pt.interval[1]:.5g}] (censored {pt.censored_fraction:.3g})"
        )
    sink.csv(MC_HEADER, rows)


def _h_eta_scaling(cfg: Resolved, sink: Sink) -> None:
    spec = _spec_of(cfg)
    n = cfg.req("n")
    res = mc.mc_eta_scaling(spec, n, cfg.req("samples"), cfg["seed"])
    seed = cfg["seed"]
    rows = [_mc_row(spec.spec_id, "etaMeanScaled", n, res.sample.mean(), 0.0,
                    res.sample.size, seed, 1)]
    if res.ks_statistic is not None:
        rows.append(_mc_row(spec.spec_id, "etaKsStat", n, res.ks_statistic,
                            0.0, res.sample.size, seed, 1))
        rows.append(_mc_row(spec.spec_id, "etaKsP", n, res.p_value, 0.0,
                            res.sample.size, seed, 1))
        sink.human(f"eta({n})/sqrt(n) vs {res.reference}: KS p = {res.p_value:.4g}")
        _require(cfg, res.p_value > cfg["level"],
                 f"eta scaling KS p {res.p_value:.4g} <= {cfg['level']}")
    else:
        sink.human(f"flag: {res.flag} (alpha={spec.alpha} has no closed-form "
                   "reference; sample summarized, use --emit-sample for draws)")
        if cfg.get("assert"):
            raise IntwalkConfigError(
                "assert needs a reference law (alpha = 2 only)"
            )
    if cfg["emit-sample"]:
        for i, v in enumerate(res.sample):
            rows.append(_mc_row(spec.spec_id, "etaScaledSample", i, v, 0.0,
                                res.sample.size, seed, 1))
    sink.csv(MC_HEADER, rows)


def _h_key_identity(cfg: Resolved, sink: Sink) -> None:
    spec = _spec_of(cfg)
    if spec.right_class != "right_exponential":
        raise IntwalkConfigError(
            f"key-identity needs a right-exponential law (got {spec.spec_id})"
        )
    n = cfg.req("n")
    res = mc.check_key_identity(spec, n, cfg.req("samples"), cfg["seed"],
                                chain_samples=cfg.get("chain-samples"),
                                chain_budget=cfg["chain-budget"])
    seed = cfg["seed"]
    rows = [
        _mc_row(spec.spec_id, "keyLhs", n, res.lhs.value, res.lhs.stderr,
                res.lhs.n_samples, seed, 1),
        _mc_row(spec.spec_id, "keyRhs", n, res.rhs.value, res.rhs.stderr,
                res.rhs.n_samples, seed, 1),
        _mc_row(spec.spec_id, "keyRhsLo", n, res.rhs_interval[0], 0.0,
                res.rhs.n_samples, seed, 1),
        _mc_row(spec.spec_id, "keyRhsHi", n, res.rhs_interval[1], 0.0,
                res.rhs.n_samples, seed, 1),
        _mc_row(spec.spec_id, "keyZ", n, res.z_score, 0.0, res.lhs.n_samples,
                seed, 1),
        _mc_row(spec.spec_id, "etaMean", n, res.eta_mean, 0.0,
                res.lhs.n_samples, seed, 1),
    ]
    if res.q5_estimate is not None:
        rows.append(_mc_row(spec.spec_id, "qFactor5", n, res.q5_estimate.value,
                            res.q5_estimate.stderr, res.q5_estimate.n_samples,
                            seed, 1))
    sink.human(
        f"lhs {res.lhs.value:.5g} vs rhs {res.rhs.value:.5g} "
        f"[{res.rhs_interval[0]:.5g}, {res.rhs_interval[1]:.5g}], "
        f"z = {res.z_score:.3f}"
    )
    _require(cfg, abs(res.z_score) < cfg["z-limit"],
             f"|z| = {abs(res.z_score):.3f} >= {cfg['z-limit']}")
    sink.csv(MC_HEADER, rows)


def _h_positivity_limit(cfg: Resolved, sink: Sink) -> None:
    spec = _spec_of(cfg)
    n = cfg.req("n")
    est = mc.positivity_limit_check(spec, n, cfg.req("samples"), cfg["seed"])
    sink.human(f"P(S_{n} > 0) ~= {est.value:.5g} +- {est.stderr:.2g} "
               f"(limit 1/alpha = {1.0 / spec.alpha:.5g})")
    sink.csv(MC_HEADER, [_mc_row(spec.spec_id, "posProb", n, est.value,
                                 est.stderr, est.n_samples, cfg["seed"], 1)])


def _read_points(path: str, quantity: str):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise IntwalkConfigError(f"{path}: empty points file")
    points = []
    spec_id = rows[0].get("spec_id") or rows[0].get("source") or ""
    for r in rows:
        if r.get("quantity", quantity) != quantity:
            continue
        n = int(r["n"])
        if r.get("value_den"):
            points.append((n, Fraction(int(r["value_num"]), int(r["value_den"]))))
        elif r.get("value") is not None:
            points.append((n, mc.Estimate(value=float(r["value"]),
                                          stderr=float(r.get("stderr") or 0.0),
                                          n_samples=int(r.get("n_samples") or 0))))
        else:
            raise IntwalkConfigError(f"{path}: row without value or value_num")
    points.sort(key=lambda p: p[0])
    if not points:
        raise IntwalkConfigError(f"{path}: no rows with quantity {quantity!r}")
    return spec_id, points


def _h_fit_exponent(cfg: Resolved, sink: Sink) -> None:
    _, points = _read_points(cfg.req("points"), cfg["quantity"])
    fit = mc.fit_exponent(points)
    sink.human(
        f"slope = {fit.slope:.5f} (95% CI [{fit.slope_ci95[0]:.5f}, "
        f"{fit.slope_ci95[1]:.5f}]), r2 = {fit.r2:.5f}"
    )
    sink.csv(FIT_HEADER, [[_f(fit.slope), _f(fit.slope_ci95[0]),
                           _f(fit.slope_ci95[1]), _f(fit.intercept),
                           _f(fit.r2)]])


def _h_estimate_constant(cfg: Resolved, sink: Sink) -> None:
    spec_id, points = _read_points(cfg.req("points"), cfg["quantity"])
    alpha = cfg.req("alpha")
    est = mc.estimate_constant(points, alpha)
    rows = [_mc_row(spec_id, "limitConstant", 0, est.value, est.stderr,
                    est.n_samples, "", "")]
    sink.human(f"lim N^(1/2-1/(2 alpha)) p_N ~= {est.value:.5g} "
               f"+- {est.stderr:.2g} (alpha = {alpha})")
    lo, hi = cfg.get("band-lo"), cfg.get("band-hi")
    if lo is not None and hi is not None:
        ok = (lo - 3 * est.stderr) <= est.value <= (hi + 3 * est.stderr)
        sink.human(f"band [{lo}, {hi}] +- 3 stderr: {'PASS' if ok else 'FAIL'}")
        _require(cfg, ok, f"constant {est.value:.5g} outside "
                          f"[{lo} - 3se, {hi} + 3se]")
    sink.csv(MC_HEADER, rows)


def _h_scaling_report(cfg: Resolved, sink: Sink) -> None:
    spec = _spec_of(cfg)
    ns = _grid(cfg)
    seed, shards = cfg["seed"], cfg["shards"]
    rows, points = [], []
    if cfg["mode"] == "exact":
        profile = exact.exact_persistence_profile(spec, max(ns))
        for n in ns:
            p = profile[n - 1]
            points.append((n, p))
            rows.append(_mc_row(spec.spec_id, "pN", n, float(p), 0.0, 0,
                                seed, shards))
    else:
        for n in ns:
            est = mc.mc_persistence(spec, n, cfg.req("samples"), seed,
                                    shards=shards, job=f"mc-p-{n}")
            points.append((n, est))
            rows.append(_mc_row(spec.spec_id, "pN", n, est.value, est.stderr,
                                est.n_samples, seed, shards))
            sink.human(f"p_{n} ~= {est.value:.6g} +- {est.stderr:.2g}")
    fit = mc.fit_exponent(points)
    alpha = cfg["alpha"] if cfg.get("alpha") is not None else spec.alpha
    target = -(0.5 - 0.5 / alpha)
    for q, v in (("slope", fit.slope), ("slopeLo", fit.slope_ci95[0]),
                 ("slopeHi", fit.slope_ci95[1]), ("intercept", fit.intercept),
                 ("r2", fit.r2), ("slopeTarget", target)):
        rows.append(_mc_row(spec.spec_id, q, 0, v, 0.0, 0, seed, shards))
    sink.human(f"slope = {fit.slope:.5f} in [{fit.slope_ci95[0]:.5f}, "
               f"{fit.slope_ci95[1]:.5f}] (target {target:.5f})")
    try:
        est = mc.estimate_constant(points, alpha)
    except ExponentMismatch as exc:
        sink.human(f"constant skipped: {exc}")
        _require(cfg, False, str(exc))
        est = None
    if est is not None:
        rows.append(_mc_row(spec.spec_id, "limitConstant", 0, est.value,
                            est.stderr, est.n_samples, seed, shards))
        sink.human(f"lim N^(1/2-1/(2 alpha)) p_N ~= {est.value:.5g} "
                   f"+- {est.stderr:.2g}")
        lo, hi = cfg.get("band-lo"), cfg.get("band-hi")
        if (lo is None or hi is None) and spec.right_class == "right_exponential" \
                and alpha == 2.0:
            lo, hi = mc.persistence_constant_interval(spec)
            sink.human(f"closed-form constant bracket: [{lo:.5g}, {hi:.5g}]")
        if lo is not None and hi is not None:
            rows.append(_mc_row(spec.spec_id, "bandLo", 0, lo, 0.0, 0, seed,
                                shards))
            rows.append(_mc_row(spec.spec_id, "bandHi", 0, hi, 0.0, 0, seed,
                                shards))
            ok = (lo - 3 * est.stderr) <= est.value <= (hi + 3 * est.stderr)
            sink.human(f"constant vs band: {'PASS' if ok else 'FAIL'}")
            _require(cfg, ok, f"constant {est.value:.5g} outside band "
                              f"[{lo:.5g}, {hi:.5g}] +- 3 stderr")
    sink.csv(MC_HEADER, rows)


# key name -> (type, default, help); None default means optional/required at use
_SPEC_KEYS = {
    "family": ("str", None, "named increment law (simple, lazy(1/2), "
               "geom-rc(1/2), laplace(1), rexp(2/3,1), heavy(3/2))"),
    "spec-file": ("str", None, "file with an inline increment-law config"),
}
_GRID_KEYS = {
    "n": ("int", None, "single horizon"),
    "n_grid": ("intlist", None, "comma-separated horizons"),
    "n_max": ("int", None, "all horizons 1..n_max"),
}

_COMMANDS: dict[str, tuple[str, dict, Callable]] = {
    "exact-p": (
        "exact persistence probability by dynamic programming",
        {**_SPEC_KEYS, **_GRID_KEYS,
         "mode": ("str", "rational", "rational | float"),
         "check": ("bool", True, "per-layer mass-conservation checks")},
        _h_exact_p,
    ),
    "exact-bridge": (
        "exact persistence conditioned on return to zero",
        {**_SPEC_KEYS, **_GRID_KEYS,
         "check": ("bool", True, "per-layer mass-conservation checks")},
        _h_exact_bridge,
    ),
    "enumerate": (
        "exhaustive-enumeration oracle for the exact DP",
        {**_SPEC_KEYS, "n": ("int", None, "horizon"),
         "budget": ("int", 100_000_000, "enumeration node budget")},
        _h_enumerate,
    ),
    "cycle-law": (
        "exact first-cycle (length, area) law to a finite horizon",
        {**_SPEC_KEYS, "horizon": ("int", None, "path-length horizon"),
         "convention": ("str", "weak-up", "|".join(sorted(_CONVENTIONS))),
         "budget": ("int", 4_000_000, "DFS state budget")},
        _h_cycle_law,
    ),
    "symmetry-audit": (
        "sign-symmetry audit of cycle laws (exact) or MC psi test (continuous)",
        {**_SPEC_KEYS, "horizon": ("int", None, "path-length horizon (exact)"),
         "convention": ("str", "all", "crossing convention or 'all'"),
         "budget": ("int", 4_000_000, "DFS state budget"),
         "samples": ("int", None, "MC cycles (continuous specs)"),
         "cap": ("int", 1 << 16, "MC cycle-length cap"),
         "seed": ("int", None, "RNG seed"),
         "level": ("float", 0.01, "KS level for --assert"),
         "assert": ("bool", False, "fail (exit 1) on KS violation")},
        _h_symmetry_audit,
    ),
    "spitzer": (
        "one-dimensional stay-positive probabilities via the "
        "positivity-probability recursion",
        {"probs": ("str", None, "'half' or a named lattice law"),
         "n": ("int", None, "number of terms"),
         "mode": ("str", "strict", "strict | weak positivity source")},
        _h_spitzer,
    ),
    "series-diagnostic": (
        "partial sums of (P(S_n > 0) - 1/alpha)/n",
        {"probs": ("str", None, "'half' or a named lattice law"),
         "n": ("int", None, "number of terms"),
         "mode": ("str", "strict", "strict | weak"),
         "alpha": ("float", None, "tail index (defaults to the law's)")},
        _h_series_diagnostic,
    ),
    "prop2": (
        "exact half-plane inequality table for a bivariate lattice law",
        {"bspec": ("str", None, "correlated-coin | coupled-coin | "
                   "independent-coins | five-atom"),
         **_GRID_KEYS,
         "budget": ("int", 100_000_000, "enumeration budget"),
         "assert": ("bool", False, "fail (exit 1) on any violation")},
        _h_prop2,
    ),
    "corollary-check": (
        "KS independence check of cycle times vs the positive-min event",
        {**_SPEC_KEYS, "n": ("int", None, "number of complete cycles"),
         "samples": ("int", None, "issued chains per arm"),
         "seed": ("int", None, "RNG seed"),
         "cap": ("int", 1 << 14, "total step budget per chain"),
         "level": ("float", 0.01, "KS level for --assert"),
         "assert": ("bool", False, "fail (exit 1) below level")},
        _h_corollary_check,
    ),
    "mc-p": (
        "Monte Carlo persistence probability",
        {**_SPEC_KEYS, **_GRID_KEYS,
         "samples": ("int", None, "samples per grid point"),
         "seed": ("int", None, "RNG seed"),
         "shards": ("int", 1, "recorded shard count (result-invariant)")},
        _h_mc_p,
    ),
    "mc-cycle-tail": (
        "rescaled cycle-length tail estimates",
        {**_SPEC_KEYS, **_GRID_KEYS,
         "samples": ("int", None, "number of cycles"),
         "cap": ("int", 1 << 16, "cycle-length censoring cap"),
         "seed": ("int", None, "RNG seed"),
         "convention": ("str", "weak-up", "|".join(sorted(_CONVENTIONS)))},
        _h_mc_cycle_tail,
    ),
    "eta-scaling": (
        "cycle-count scaling vs the half-normal reference (alpha = 2)",
        {**_SPEC_KEYS, "n": ("int", None, "time horizon"),
         "samples": ("int", None, "number of walks"),
         "seed": ("int", None, "RNG seed"),
         "emit-sample": ("bool", False, "write each scaled draw as a CSV row"),
         "level": ("float", 0.01, "KS level for --assert"),
         "assert": ("bool", False, "fail (exit 1) below level")},
        _h_eta_scaling,
    ),
    "key-identity": (
        "two-run check of the cycle-count conditioning identity",
        {**_SPEC_KEYS, "n": ("int", None, "time horizon"),
         "samples": ("int", None, "samples for each direct run"),
         "seed": ("int", None, "RNG seed"),
         "chain-samples": ("int", None, "chain rows (default samples/10)"),
         "chain-budget": ("int", 1 << 20, "step budget per chain"),
         "z-limit": ("float", 3.0, "z threshold for --assert"),
         "assert": ("bool", False, "fail (exit 1) at |z| >= z-limit")},
        _h_key_identity,
    ),
    "positivity-limit": (
        "Monte Carlo P(S_n > 0)",
        {**_SPEC_KEYS, "n": ("int", None, "time horizon"),
         "samples": ("int", None, "number of walks"),
         "seed": ("int", None, "RNG seed")},
        _h_positivity_limit,
    ),
    "fit-exponent": (
        "weighted log-log slope fit over a points CSV",
        {"points": ("str", None, "CSV from exact-p / mc-p / scaling-report"),
         "quantity": ("str", "pN", "quantity column to fit")},
        _h_fit_exponent,
    ),
    "estimate-constant": (
        "limit constant from a points CSV (exponent-gated)",
        {"points": ("str", None, "CSV from exact-p / mc-p / scaling-report"),
         "quantity": ("str", "pN", "quantity column to use"),
         "alpha": ("float", None, "tail index"),
         "band-lo": ("float", None, "lower verdict band"),
         "band-hi": ("float", None, "upper verdict band"),
         "assert": ("bool", False, "fail (exit 1) outside the band")},
        _h_estimate_constant,
    ),
    "scaling-report": (
        "composite: persistence grid + exponent fit + limit constant",
        {**_SPEC_KEYS, **_GRID_KEYS,
         "mode": ("str", "mc", "mc | exact (exact never samples)"),
         "samples": ("int", None, "samples per grid point (mc mode)"),
         "seed": ("int", None, "RNG seed"),
         "shards": ("int", 1, "recorded shard count (result-invariant)"),
         "alpha": ("float", None, "tail index (defaults to the law's)"),
         "band-lo": ("float", None, "lower verdict band"),
         "band-hi": ("float", None, "upper verdict band"),
         "assert": ("bool", False, "fail (exit 1) on fit/band violation")},
        _h_scaling_report,
    ),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="intwalk",
        description="Persistence laboratory for integrated random walks.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (help_text, keys, handler) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--out", help="write CSV here (+ .manifest); "
                       "default stdout")
        for key, (kind, default, khelp) in keys.items():
            flag = "--" + key.replace("_", "-")
            dest = key.replace("-", "_")
            if kind == "bool":
                p.add_argument(flag, dest=dest, action="store_const",
                               const="true", default=None,
                               help=khelp + (" (default on)" if default else ""))
            else:
                p.add_argument(flag, dest=dest, default=None, metavar=kind.upper(),
                               help=f"{khelp} (default {default})"
                               if default is not None else khelp)
        p.set_defaults(_name=name, _keys=keys, _handler=handler)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args._name, args._keys, args)
        manifest = _manifest(args._name, args._keys, cfg)
        sink = Sink(args.out, manifest)
        sys.stderr.write(manifest)
        args._handler(cfg, sink)
        return 0
    except AssertionFailed as exc:
        _report_error(exc, 1)
        return 1
    except ExponentMismatch as exc:
        _report_error(exc, 1)
        return 1
    except (IntwalkConfigError, NotInBridgeSet, DegenerateGrid, BudgetError,
            NoReferenceLaw) as exc:
        _report_error(exc, 2)
        return 2
    except OSError as exc:
        _report_error(exc, 2)
        return 2


def _report_error(exc: BaseException, code: int) -> None:
    print(json.dumps({"error": type(exc).__name__, "exit": code,
                      "message": str(exc)}), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
