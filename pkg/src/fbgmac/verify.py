"""The acceptance suite: nine criteria, each a closed-form or Monte Carlo check.

Every criterion returns a :class:`CriterionResult`.  :func:`run_suite` runs a
selection of them (by name or group) and :func:`format_table` renders the
pass/fail table printed by ``fbgmac verify``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import analysis, capacity
from .model import ChannelParams, DomainError
from .presets import FEEDBACK_GAIN, PRESETS
from .schemes import (SCHEMES, SchemeConfig, alpha_prime_closed_form, coefficients_for,
                      coeffs_dms, coeffs_ozarow, config_at_fraction, draw, run_batch)

SEED = 20240601
MC_TRIALS = 100_000
DECAY_TRIALS = 2_000
DECAY_LENGTHS = (40, 60)
FAULTS = ("zero-a2",)


@dataclass(frozen=True)
class CriterionResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _random_params(rng: np.random.Generator, count: int) -> list[ChannelParams]:
    draws = []
    for _ in range(count):
        p1, p2 = rng.uniform(0.1, 10.0, size=2)
        s1 = rng.uniform(0.05, 10.0)
        draws.append(ChannelParams(float(p1), float(p2), float(s1)))
    return draws


def scheme_config(scheme: str, n: int, fraction: float | None = None) -> SchemeConfig:
    """Each scheme at the parameters of its preset."""
    if scheme == "sk_p2p":
        return SchemeConfig("sk_p2p", ChannelParams(1.0, 0.0, 1.0), n, 0.4)
    preset = next(p for p in PRESETS.values() if p.scheme == scheme)
    frac = preset.rate_fraction if fraction is None else fraction
    return config_at_fraction(scheme, preset.params, n, frac, preset.rho)


@lru_cache(maxsize=None)
def _batch(config: SchemeConfig, trials: int, seed: int) -> analysis.TrialBatch:
    return analysis.estimate_error_rate(config, trials, seed)


# ------------------------------------------------------------------ criteria


def fixed_point(fault=None) -> CriterionResult:
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for prm in _random_params(rng, 100):
        rho = capacity.solve_rho_star(prm)
        diff, rhs = capacity.rho_star_residual(prm, rho)
        worst = max(worst, abs(diff) / rhs)
    unit = ChannelParams(1.0, 1.0, 1.0)
    rho_u = capacity.solve_rho_star(unit)
    limit = abs(coeffs_ozarow(unit, 500).rho_seq[-1])
    ok = worst < 1e-10 and 0.30 < rho_u < 0.32 and abs(limit - rho_u) < 1e-6
    return CriterionResult("fixed_point", ok,
                           f"max rel residual {worst:.1e}; rho*={rho_u:.12f}; "
                           f"|recursion limit - rho*|={abs(limit - rho_u):.1e}")


def sum_rate_identity(fault=None) -> CriterionResult:
    rng = np.random.default_rng(SEED + 1)
    worst = 0.0
    for prm in _random_params(rng, 20):
        for rho in np.linspace(0.0, 1.0, 11):
            pair = capacity.dms_corner(prm, float(rho))
            coherent = prm.p1 + prm.p2 + 2.0 * math.sqrt(prm.p1 * prm.p2) * rho
            target = 0.5 * math.log2(1.0 + coherent / prm.sigma1_sq)
            worst = max(worst, abs(pair.r1 + pair.r2 - target))
    return CriterionResult("sum_rate_identity", worst < 1e-12, f"max |error| {worst:.1e}")


_CHAINS = (("outer_gmac_wt", "gmac"), ("gmac", "gmac_feedback"), ("outer_gmac_dms", "gmac_dms"),
           ("gmac_feedback", "gmac_dms"), ("outer_ncsit_dms", "gmac_dms"))


def region_containment(fault=None) -> CriterionResult:
    failures = []
    gains = []
    for name, preset in PRESETS.items():
        kinds = [k for k in capacity.REGION_KINDS
                 if k != "outer_ncsit_dms" or preset.params.q > 0]
        regions = capacity.regions_for_preset(preset.params, kinds)
        for inner, outer in _CHAINS:
            if inner in regions and outer in regions:
                bad = capacity.region_subset(regions[inner], regions[outer], tol=1e-9)
                if bad:
                    failures.append(f"{name}: {inner} not inside {outer} ({len(bad)} points)")
        fb, cmp_ = FEEDBACK_GAIN[name]
        outside = capacity.region_subset(regions[fb], regions[cmp_], tol=1e-9)
        gains.append(f"{name}:{len(outside)}")
        if not outside:
            failures.append(f"{name}: {fb} does not exceed {cmp_}")
    detail = "; ".join(failures) if failures else "chains hold; feedback gain points " + " ".join(gains)
    return CriterionResult("region_containment", not failures, detail)


def sk_p2p(fault=None) -> CriterionResult:
    bound = analysis.pe_bound_sk(1.0, 1.0, 20, 0.4)
    cfg = scheme_config("sk_p2p", 20)
    small = analysis.estimate_error_rate(cfg, 10_000, SEED)
    dev = analysis.variance_validation(cfg, MC_TRIALS, SEED)
    ok = bound < 1e-6 and small.error_count_joint == 0 and dev < 0.05
    return CriterionResult("sk_p2p", ok, f"bound {bound:.2e}; errors {small.error_count_joint}/10000;"
                           f" max var dev {dev:.4f}")


def error_decay(fault=None) -> CriterionResult:
    notes, ok = [], True
    for scheme in ("ozarow", "rosenzweig_ncsit", "twostep_dms", "hybrid_ncsit_dms"):
        batches = [_batch(scheme_config(scheme, n), DECAY_TRIALS, SEED) for n in DECAY_LENGTHS]
        rates = [b.pe_joint for b in batches]
        decays = rates[1] <= rates[0] + batches[0].halfwidth("joint")
        good = all(r < 0.02 for r in rates) and decays
        ok &= good
        notes.append(f"{scheme} " + "/".join(f"{r:.4f}" for r in rates))
    return CriterionResult("error_decay", ok, "; ".join(notes))


def secrecy_structure(fault=None) -> CriterionResult:
    limit = 5.0 / math.sqrt(MC_TRIALS)
    corr = {s: _batch(scheme_config(s, 40), MC_TRIALS, SEED).diagnostics["max_corr"]
            for s in SCHEMES}
    ok = all(v <= limit for v in corr.values())
    leaks = []
    for name, preset in PRESETS.items():
        a = capacity.leakage_bound(preset.params, 1000)
        b = capacity.leakage_bound(preset.params, 2000)
        leaks.append(a)
        ok &= a < 0.005 and abs(b - a / 2) <= 1e-15 * a
    worst = max(corr.values())
    return CriterionResult("secrecy_structure", ok,
                           f"max |corr| {worst:.4f} (limit {limit:.4f}); "
                           f"max leakage bound at N=1000 {max(leaks):.5f}")


def _zero_a2(coeffs):
    return replace(coeffs, a2_coeffs=np.zeros_like(coeffs.a2_coeffs),
                   a2_coeffs_lo=np.zeros_like(coeffs.a2_coeffs_lo))


def state_invariance_check(fault=None) -> CriterionResult:
    worst, notes = 0.0, []
    base = PRESETS["figNcsitDms"].params
    for scheme in ("rosenzweig_ncsit", "hybrid_ncsit_dms"):
        for q in (1.0, 5.0):
            cfg = scheme_config(scheme, 60).replace(params=replace(base, q=q))
            coeffs = coefficients_for(cfg)
            if fault == "zero-a2":
                coeffs = _zero_a2(coeffs)
            dev = analysis.state_invariance_check(cfg, 1000, SEED, coeffs=coeffs)
            worst = max(worst, dev)
    exact = True
    for scheme, plain in (("rosenzweig_ncsit", "ozarow"), ("hybrid_ncsit_dms", "twostep_dms")):
        cfg = scheme_config(scheme, 60).replace(params=replace(base, q=0.0))
        ref = cfg.replace(scheme=plain)
        a = run_batch(cfg, draw(cfg, SEED, np.arange(500)))
        b = run_batch(ref, draw(ref, SEED, np.arange(500)))
        for attr in ("x1", "u", "v", "y", "z", "theta_hat_1", "theta_hat_2",
                     "final_eps1", "final_eps2"):
            exact &= np.array_equal(getattr(a, attr), getattr(b, attr))
    notes.append(f"max deviation {worst:.1e}")
    notes.append("Q=0 reduction bit-exact" if exact else "Q=0 reduction differs")
    return CriterionResult("state_invariance_check", worst < 1e-9 and exact, "; ".join(notes))


def coefficient_recursions(fault=None) -> CriterionResult:
    dev = {s: _batch(scheme_config(s, 40), MC_TRIALS, SEED).diagnostics["max_var_dev"]
           for s in SCHEMES}
    rho_dev = max(_batch(scheme_config(s, 40), MC_TRIALS, SEED).diagnostics["max_rho_dev"]
                  for s in ("ozarow", "rosenzweig_ncsit"))
    closed = 0.0
    for prm, rho in ((ChannelParams(1.0, 1.0, 1.0), 0.5), (PRESETS["fig13"].params, 0.5),
                     (PRESETS["figNcsitDms"].params, 0.0)):
        c = coeffs_dms(prm, rho, 60)
        for k in range(2, 61):
            it = c.alpha_prime_seq[k - 1]
            closed = max(closed, abs(alpha_prime_closed_form(c, k) - it) / it)
    worst = max(dev.values())
    ok = worst < 0.05 and closed < 1e-12 and rho_dev < 0.02
    return CriterionResult("coefficient_recursions", ok,
                           f"max var dev {worst:.4f}; alpha' closed-form rel err {closed:.1e}; "
                           f"max rho dev {rho_dev:.4f}")


def first_stage_bound(fault=None) -> CriterionResult:
    ok, notes = True, []
    cases = [(scheme_config(s, n), s) for s in ("twostep_dms", "hybrid_ncsit_dms")
             for n in DECAY_LENGTHS]
    unit = ChannelParams(1.0, 1.0, 1.0)
    cases.append((config_at_fraction("twostep_dms", unit, 50, 0.8, 0.5), "twostep_dms@unit"))
    # rates close to the corner, where the bound is far from zero and actually binds
    for n, frac in ((20, 0.9), (40, 0.95)):
        cases.append((config_at_fraction("twostep_dms", unit, n, frac, 0.5), "twostep_dms@unit"))
        cases.append((scheme_config("hybrid_ncsit_dms", n, frac), "hybrid_ncsit_dms"))
    for cfg, label in cases:
        batch = _batch(cfg, DECAY_TRIALS, SEED)
        bound = analysis.pe1_bound_dms(cfg.params, cfg.rho, cfg.n, cfg.rate1)
        slack = bound + 3.0 * batch.halfwidth("1")
        ok &= batch.pe1 <= slack
        notes.append(f"{label} N={cfg.n}: {batch.pe1:.4f} vs {bound:.2e}")
    return CriterionResult("first_stage_bound", ok, "; ".join(notes))


CRITERIA = {
    "fixed_point": fixed_point,
    "sum_rate_identity": sum_rate_identity,
    "region_containment": region_containment,
    "sk_p2p": sk_p2p,
    "error_decay": error_decay,
    "secrecy_structure": secrecy_structure,
    "state_invariance_check": state_invariance_check,
    "coefficient_recursions": coefficient_recursions,
    "first_stage_bound": first_stage_bound,
}

GROUPS = {
    "identity": ("fixed_point", "sum_rate_identity"),
    "regions": ("region_containment",),
    "state": ("state_invariance_check",),
    "monte_carlo": ("sk_p2p", "error_decay", "secrecy_structure", "coefficient_recursions",
                    "first_stage_bound"),
}


def select(only: str | None) -> list[str]:
    """Criterion names for a comma-separated list of names and group names."""
    if not only:
        return list(CRITERIA)
    chosen = []
    for token in (t.strip() for t in only.split(",")):
        if token in GROUPS:
            names = GROUPS[token]
        elif token in CRITERIA:
            names = (token,)
        else:
            raise DomainError(f"unknown criterion or group {token!r}; choose from "
                              f"{', '.join(list(GROUPS) + list(CRITERIA))}")
        chosen.extend(n for n in names if n not in chosen)
    return [n for n in CRITERIA if n in chosen]


def run_criterion(name: str, fault: str | None = None) -> CriterionResult:
    start = time.perf_counter()
    try:
        res = CRITERIA[name](fault=fault)
    except (DomainError, ArithmeticError) as exc:
        res = CriterionResult(name, False, f"raised {type(exc).__name__}: {exc}")
    return replace(res, seconds=time.perf_counter() - start)


def run_suite(only: str | None = None, fault: str | None = None, echo=None) -> list[CriterionResult]:
    if fault is not None and fault not in FAULTS:
        raise DomainError(f"unknown fault {fault!r}; choose from {', '.join(FAULTS)}")
    results = []
    for name in select(only):
        res = run_criterion(name, fault)
        results.append(res)
        if echo is not None:
            echo(format_line(res))
    return results


def format_line(res: CriterionResult) -> str:
    return f"{'PASS' if res.passed else 'FAIL'}  {res.name:<24} {res.seconds:7.2f}s  {res.detail}"


def format_table(results: list[CriterionResult]) -> str:
    return "\n".join(format_line(r) for r in results)
