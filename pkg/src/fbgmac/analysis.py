"""Monte Carlo harness, statistical diagnostics and closed-form error bounds.

Trials are processed in fixed-size chunks of consecutive trial indices.  Every
chunk produces a set of additive moment sums; the sums are combined in chunk
order, so the result is a pure function of (config, trials, master_seed) no
matter how many worker threads evaluate the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erfc

from .capacity import leakage_bound, dms_power_split
from .model import ChannelParams, DomainError
from .schemes import (DMS_SCHEMES, STATE_SCHEMES, SchemeCoefficients, SchemeConfig,
                      coefficients_for, draw, run_batch)

#: two-sided 95% standard-normal quantile used for Wilson intervals
Z95 = 1.959963984540054
#: times (1-based) up to which error variances are compared with their schedule
VARIANCE_HORIZON = 25
DEFAULT_CHUNK = 8192

REPORT_HEADER = ("scheme,p1,p2,q,sigma1_sq,sigma2_sq,rho,n,r1,r2,trials,pe1,pe2,pe_joint,"
                 "pe1_lo,pe1_hi,max_corr,max_var_dev,leakage_bound")

# ------------------------------------------------------------ closed forms


def qfunc(x):
    """Gaussian tail probability Q(x) = erfc(x / sqrt 2) / 2."""
    x = np.asarray(x, dtype=np.float64)
    out = 0.5 * erfc(x / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def wilson_interval(errors: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if not 0 <= errors <= trials:
        raise DomainError(f"error count {errors} outside [0, {trials}]")
    p = errors / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    lo = 0.0 if errors == 0 else max(0.0, centre - half)
    hi = 1.0 if errors == trials else min(1.0, centre + half)
    return lo, hi


def wilson_halfwidth(errors: int, trials: int, z: float = Z95) -> float:
    lo, hi = wilson_interval(errors, trials, z)
    return 0.5 * (hi - lo)


def _q_of_log2(log2_arg: float) -> float:
    """2 Q(2**log2_arg), returning the limits cleanly when the argument over/underflows."""
    if log2_arg > 1100:
        return 0.0
    return min(1.0, 2.0 * qfunc(2.0 ** log2_arg))


def pe_bound_sk(power: float, sigma1_sq: float, n: int, rate: float) -> float:
    """Single-user feedback error bound 2 Q(2^{-nR} / (2 sqrt(alpha_n))), in the log domain."""
    if power <= 0 or sigma1_sq <= 0:
        raise DomainError("pe_bound_sk needs power > 0 and sigma1_sq > 0")
    if n < 1 or rate < 0:
        raise DomainError("pe_bound_sk needs n >= 1 and rate >= 0")
    log2_alpha = math.log2(sigma1_sq / (12.0 * power)) + (n - 1) * math.log2(
        sigma1_sq / (power + sigma1_sq))
    return _q_of_log2(-1.0 - n * rate - 0.5 * log2_alpha)


def pe1_bound_dms(params: ChannelParams, rho: float, n: int, rate1: float) -> float:
    """First-stage (common message) error bound of the two-step scheme."""
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"pe1_bound_dms needs 0 <= rho < 1, got {rho!r}")
    if n < 1 or rate1 < 0:
        raise DomainError("pe1_bound_dms needs n >= 1 and rate1 >= 0")
    p_star, r_sq = dms_power_split(params, rho)
    if p_star <= 0:
        raise DomainError("pe1_bound_dms needs a positive common-stream power")
    c = math.log2(math.sqrt(r_sq + p_star) / math.sqrt(r_sq))
    log2_arg = (math.log2(0.5 * math.sqrt(12.0 * p_star / r_sq))
                - 2.0 * c - n * (rate1 - c))
    return _q_of_log2(log2_arg)


# ------------------------------------------------------------ moment sums


def _col_corr(sx, sy, sxx, syy, sxy, count):
    """Pearson correlation from raw sums; NaN where either side is constant."""
    mx, my = sx / count, sy / count
    vx = sxx / count - mx * mx
    vy = syy / count - my * my
    cov = sxy / count - mx * my
    with np.errstate(invalid="ignore", divide="ignore"):
        ok = (vx > 1e-12 * (sxx / count)) & (vy > 1e-12 * (syy / count))
        out = np.where(ok, cov / np.sqrt(np.abs(vx * vy)), np.nan)
    return out


def _std_corr(a, b):
    """Column-wise sums needed for corr(a, b); ``a`` is (T,) or (T, n), ``b`` is (T, n)."""
    if a.ndim == 1:
        a = a[:, None]
    return np.stack([a.sum(0) * np.ones(b.shape[1]), b.sum(0),
                     (a * a).sum(0) * np.ones(b.shape[1]), (b * b).sum(0), (a * b).sum(0)])


def _signals(out) -> dict:
    """Codeword streams checked for message independence."""
    sig = {"x1": out.x1, "x2": out.x2}
    if out.config.scheme in DMS_SCHEMES:
        sig["u"] = out.u
        sig["v"] = out.v
    return sig


def _chunk_sums(out) -> dict:
    """All additive statistics of one chunk, keyed by name."""
    sums: dict = {}
    x2 = out.x2
    for j, x in ((1, out.x1), (2, x2)):
        sq = x * x
        sums[f"pow{j}"] = sq.sum(0)
        sums[f"pow{j}_sq"] = (sq * sq).sum(0)
    sums["err1"] = np.array([np.count_nonzero(~out.correct1)])
    sums["err2"] = np.array([np.count_nonzero(~out.correct2)])
    sums["err_joint"] = np.array([np.count_nonzero(~(out.correct1 & out.correct2))])
    for j, th in ((1, out.theta1), (2, out.theta2)):
        for name, sig in _signals(out).items():
            sums[f"ind|{j}|{name}"] = _std_corr(th, sig)
    for name, e in out.errors.items():
        sums[f"var|{name}"] = np.stack([e.sum(0), (e * e).sum(0)])
        obs = out.observations[name]
        sums[f"orth|{name}"] = _std_corr(e, obs)
    if "eps1" in out.errors and "eps2" in out.errors:
        sums["rho"] = _std_corr(out.errors["eps1"], out.errors["eps2"])
    if "eps_prime" in out.errors:
        # stage-one error at k-1 against the effective stage-one noise V_k + eta_k
        ep = out.errors["eps_prime"][:, :-1]
        sums["eta_prime"] = _std_corr(ep, out.v[:, 1:] + out.draws.eta1[:, 1:])
    return sums


def _add_sums(total: dict, part: dict) -> dict:
    if not total:
        return {k: np.array(v, dtype=np.float64) for k, v in part.items()}
    for k, v in part.items():
        total[k] = total[k] + v
    return total


# ------------------------------------------------------------ batch results


@dataclass(frozen=True, eq=False)
class TrialBatch:
    """Aggregated outcome of a Monte Carlo batch."""

    scheme_id: str
    params: ChannelParams
    rho: float
    n: int
    r1: float
    r2: float
    trials: int
    master_seed: int
    error_count_1: int
    error_count_2: int
    error_count_joint: int
    per_time_power_1: np.ndarray
    per_time_power_2: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    #: per-time statistic arrays behind the scalar diagnostics
    profiles: dict = field(default_factory=dict)

    @property
    def pe1(self) -> float:
        return self.error_count_1 / self.trials

    @property
    def pe2(self) -> float:
        return self.error_count_2 / self.trials

    @property
    def pe_joint(self) -> float:
        return self.error_count_joint / self.trials

    def interval(self, which: str = "joint") -> tuple[float, float]:
        count = {"1": self.error_count_1, "2": self.error_count_2,
                 "joint": self.error_count_joint}[which]
        return wilson_interval(count, self.trials)

    def halfwidth(self, which: str = "joint") -> float:
        lo, hi = self.interval(which)
        return 0.5 * (hi - lo)

    def leakage(self) -> float:
        if self.params.sigma2_sq <= 0:
            return math.inf
        return leakage_bound(self.params, self.n)

    def report_row(self) -> str:
        lo, hi = self.interval("1")
        p = self.params
        vals = [self.scheme_id, p.p1, p.p2, p.q, p.sigma1_sq, p.sigma2_sq, self.rho, self.n,
                self.r1, self.r2, self.trials, self.pe1, self.pe2, self.pe_joint, lo, hi,
                self.diagnostics.get("max_corr", math.nan),
                self.diagnostics.get("max_var_dev", math.nan), self.leakage()]
        return ",".join(v if isinstance(v, str) else repr(v) for v in vals)

    def report_csv(self) -> str:
        return REPORT_HEADER + "\n" + self.report_row() + "\n"


def _nanmax_abs(a) -> float:
    a = np.abs(np.asarray(a, dtype=np.float64))
    a = a[np.isfinite(a)]
    return float(a.max()) if a.size else 0.0


def _finalise(config: SchemeConfig, coeffs: SchemeCoefficients, schedules: dict,
              sums: dict, trials: int, master_seed: int) -> TrialBatch:
    n, T = config.n, trials
    prof: dict = {}
    diag: dict = {}
    # power: per-time mean squares and z-scores against the declared constraint (k >= 3)
    p_decl = {1: config.params.p1, 2: config.params.p2 if config.scheme != "sk_p2p" else 0.0}
    z_max = 0.0
    for j in (1, 2):
        mean = sums[f"pow{j}"] / T
        prof[f"power_{j}"] = mean
        if p_decl[j] > 0 and n > 2:
            sd = np.sqrt(np.maximum(sums[f"pow{j}_sq"] / T - mean * mean, 0.0))
            z = (mean[2:] - p_decl[j]) / np.maximum(sd[2:] / math.sqrt(T), 1e-300)
            z_max = max(z_max, _nanmax_abs(z))
    diag["max_power_z"] = z_max
    # independence of late codewords from the messages
    ind = []
    for key, s in sums.items():
        if key.startswith("ind|"):
            c = _col_corr(*s, T)
            prof["corr_" + key[4:].replace("|", "_")] = c
            ind.append(_nanmax_abs(c[2:]))
    diag["max_corr"] = max(ind) if ind else 0.0
    # error variances against their schedules
    dev = []
    horizon = min(n, VARIANCE_HORIZON)
    for key, s in sums.items():
        if key.startswith("var|"):
            name = key[4:]
            mean = s[0] / T
            var = (s[1] / T - mean * mean) * T / max(T - 1, 1)
            prof["var_" + name] = var
            sched = np.asarray(schedules[name], dtype=np.float64)
            with np.errstate(invalid="ignore", divide="ignore"):
                rel = var[:horizon] / sched[:horizon] - 1.0
            prof["var_dev_" + name] = rel
            dev.append(_nanmax_abs(rel))
    diag["max_var_dev"] = max(dev) if dev else 0.0
    # orthogonality of each error to the observation its update just used
    orth = []
    for key, s in sums.items():
        if key.startswith("orth|"):
            c = _col_corr(*s, T)
            prof["orth_" + key[5:]] = c
            orth.append(_nanmax_abs(c))
    diag["max_orth_corr"] = max(orth) if orth else 0.0
    if "rho" in sums:
        emp = _col_corr(*sums["rho"], T)
        prof["rho_empirical"] = emp
        diag["max_rho_dev"] = _nanmax_abs(emp[1:] - coeffs.rho_seq[1:])
    if "eta_prime" in sums:
        c = _col_corr(*sums["eta_prime"], T)
        prof["eta_prime_corr"] = c
        # pairs (eps'_{k-1}, eta'_k) for k >= 3
        diag["eta_prime_corr"] = _nanmax_abs(c[1:])
    return TrialBatch(
        scheme_id=config.scheme, params=config.params, rho=config.rho, n=n,
        r1=config.rate1, r2=config.rate2, trials=T, master_seed=master_seed,
        error_count_1=int(sums["err1"][0]), error_count_2=int(sums["err2"][0]),
        error_count_joint=int(sums["err_joint"][0]),
        per_time_power_1=prof["power_1"], per_time_power_2=prof["power_2"],
        diagnostics=diag, profiles=prof,
    )


def estimate_error_rate(config: SchemeConfig, trials: int, master_seed: int, *,
                        chunk_size: int = DEFAULT_CHUNK, workers: int = 1, engine=None,
                        coeffs: SchemeCoefficients | None = None) -> TrialBatch:
    """Run ``trials`` independent sessions and aggregate errors, powers and diagnostics.

    Trial indices are 0..trials-1.  ``engine`` and ``coeffs`` override the
    registered engine and the analytic schedules (used for fault injection).
    """
    trials = int(trials)
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    if chunk_size < 1 or workers < 1:
        raise DomainError("chunk_size and workers must be >= 1")
    coeffs = coefficients_for(config) if coeffs is None else coeffs
    bounds = [(a, min(a + chunk_size, trials)) for a in range(0, trials, chunk_size)]
    schedules: dict = {}

    def work(bound):
        draws = draw(config, master_seed, np.arange(*bound))
        out = run_batch(config, draws, coeffs, engine)
        return out.schedules, _chunk_sums(out)

    if workers == 1:
        results = map(work, bounds)
        total: dict = {}
        for sched, part in results:
            schedules = sched
            total = _add_sums(total, part)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            total = {}
            for sched, part in pool.map(work, bounds):
                schedules = sched
                total = _add_sums(total, part)
    return _finalise(config, coeffs, schedules, total, trials, master_seed)


# ------------------------------------------------------------ diagnostics


def independence_diagnostic(config: SchemeConfig, trials: int, master_seed: int, *,
                            engine=None) -> float:
    """Largest |corr(theta_j, codeword at time k)| over k >= 3 and both users."""
    if trials < 100:
        raise DomainError("independence_diagnostic needs at least 100 trials")
    return estimate_error_rate(config, trials, master_seed, engine=engine).diagnostics["max_corr"]


def state_invariance_check(config: SchemeConfig, trials: int, master_seed: int, *,
                           coeffs: SchemeCoefficients | None = None) -> float:
    """Largest change of the terminal estimates when the state is replaced by zeros.

    Both runs share messages and noise.  ``coeffs`` may carry deliberately
    broken precancellation weights for fault injection.
    """
    if config.scheme not in STATE_SCHEMES:
        raise DomainError(f"state_invariance_check applies to {', '.join(STATE_SCHEMES)}, "
                          f"not {config.scheme!r}")
    if trials < 1:
        raise DomainError("trials must be >= 1")
    coeffs = coefficients_for(config) if coeffs is None else coeffs
    worst = 0.0
    for a in range(0, trials, DEFAULT_CHUNK):
        draws = draw(config, master_seed, np.arange(a, min(a + DEFAULT_CHUNK, trials)))
        still = replace(draws, s=np.zeros_like(draws.s))
        with_state = run_batch(config, draws, coeffs)
        without = run_batch(config, still, coeffs)
        for h_a, h_b in ((with_state.theta_hat_1, without.theta_hat_1),
                         (with_state.theta_hat_2, without.theta_hat_2)):
            worst = max(worst, float(np.max(np.abs(h_a[:, -1] - h_b[:, -1]))))
    return worst


def variance_validation(config: SchemeConfig, trials: int, master_seed: int, *,
                        schedules: dict | None = None) -> float:
    """Largest relative deviation of empirical error variances from their schedule.

    Compared over times k <= min(n, 25).  ``schedules`` replaces the reference
    schedules by name, which allows checking that a wrong schedule is caught.
    """
    if trials < 10_000:
        raise DomainError("variance_validation needs at least 10^4 trials")
    batch = estimate_error_rate(config, trials, master_seed)
    if not schedules:
        return batch.diagnostics["max_var_dev"]
    horizon = min(config.n, VARIANCE_HORIZON)
    dev = []
    for key, var in batch.profiles.items():
        if key.startswith("var_") and not key.startswith("var_dev_"):
            name = key[4:]
            ref = schedules.get(name)
            if ref is None:
                ref_rel = batch.profiles["var_dev_" + name]
                dev.append(_nanmax_abs(ref_rel))
                continue
            with np.errstate(invalid="ignore", divide="ignore"):
                dev.append(_nanmax_abs(var[:horizon] / np.asarray(ref)[:horizon] - 1.0))
    return max(dev)


@dataclass(frozen=True)
class PowerAudit:
    """Empirical transmit power against the declared constraints."""

    declared: tuple
    block_average: tuple
    steady_average: tuple
    early: tuple
    tolerance: float
    ok: bool


def power_audit(batch: TrialBatch) -> PowerAudit:
    """Check block-average power; for state schemes times 1-2 are reported separately.

    ``steady_average`` averages times 3..n, ``early`` holds the time-1 and
    time-2 powers, and ``block_average`` covers the whole block.
    """
    p = batch.params
    declared = (p.p1, p.p2 if batch.scheme_id != "sk_p2p" else 0.0)
    tol = 10.0 / math.sqrt(batch.trials)
    block, steady, early = [], [], []
    ok = True
    for d, prof in zip(declared, (batch.per_time_power_1, batch.per_time_power_2)):
        block.append(float(prof.mean()))
        steady.append(float(prof[2:].mean()) if prof.size > 2 else math.nan)
        early.append(tuple(float(v) for v in prof[:2]))
        audited = steady[-1] if batch.scheme_id in STATE_SCHEMES else block[-1]
        if audited > d * (1.0 + tol) + 1e-300:
            ok = False
    return PowerAudit(declared, tuple(block), tuple(steady), tuple(early), tol, ok)
