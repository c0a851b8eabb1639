"""Single-session entry points and the engine registry."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import ChannelParams, DomainError, TrialSeed, Transcript
from .coefficients import SchemeCoefficients, coeffs_dms, coeffs_ozarow, coeffs_sk
from .config import Draws, SchemeConfig, draw
from .engines import BatchOutput, dms_engine, ozarow_engine, sk_engine

ENGINES = {
    "sk_p2p": sk_engine,
    "ozarow": ozarow_engine,
    "rosenzweig_ncsit": ozarow_engine,
    "twostep_dms": dms_engine,
    "hybrid_ncsit_dms": dms_engine,
}


def coefficients_for(config: SchemeConfig) -> SchemeCoefficients:
    if config.scheme == "sk_p2p":
        return coeffs_sk(config.params.p1, config.params.sigma1_sq, config.n)
    if config.scheme in ("ozarow", "rosenzweig_ncsit"):
        return coeffs_ozarow(config.params, config.n)
    return coeffs_dms(config.params, config.rho, config.n)


def run_batch(config: SchemeConfig, draws: Draws, coeffs: SchemeCoefficients | None = None,
              engine=None) -> BatchOutput:
    """Run the scheme on pre-drawn randomness (one row per trial)."""
    coeffs = coefficients_for(config) if coeffs is None else coeffs
    return (engine or ENGINES[config.scheme])(config, coeffs, draws)


@dataclass(frozen=True, eq=False)
class SessionResult:
    transcript: Transcript
    correct1: bool
    correct2: bool
    final_eps1: float
    final_eps2: float


def session_from_batch(out: BatchOutput, row: int = 0) -> SessionResult:
    d = out.draws
    tr = Transcript(
        n=out.config.n,
        w1=int(d.w1[row]), w2=int(d.w2[row]),
        card1=out.config.card1, card2=out.config.card2,
        x1=out.x1[row].copy(), u=out.u[row].copy(), v=out.v[row].copy(),
        x_star=out.x_star[row].copy(), y=out.y[row].copy(), z=out.z[row].copy(),
        s=d.s[row].copy(), eta1=d.eta1[row].copy(), eta2=d.eta2[row].copy(),
        theta_hat_1=out.theta_hat_1[row].copy(), theta_hat_2=out.theta_hat_2[row].copy(),
        decoded=(int(out.decoded1[row]), int(out.decoded2[row])),
    )
    return SessionResult(tr, bool(out.correct1[row]), bool(out.correct2[row]),
                         float(out.final_eps1[row]), float(out.final_eps2[row]))


def run_session(config: SchemeConfig, seed: TrialSeed) -> SessionResult:
    draws = draw(config, seed.master_seed, np.array([seed.trial_index]))
    return session_from_batch(run_batch(config, draws))


def _seed(seed) -> TrialSeed:
    if isinstance(seed, TrialSeed):
        return seed
    if isinstance(seed, tuple):
        return TrialSeed(*seed)
    return TrialSeed(int(seed), 0)


def run_sk_p2p(power: float, sigma1_sq: float, n: int, rate: float, seed) -> SessionResult:
    """Single-user feedback scheme; ``seed`` is a TrialSeed, (master, trial) or an int."""
    config = SchemeConfig("sk_p2p", ChannelParams(power, 0.0, sigma1_sq), n, rate)
    return run_session(config, _seed(seed))


def run_ozarow(params: ChannelParams, n: int, rate1: float, rate2: float, seed) -> SessionResult:
    config = SchemeConfig("ozarow", params.without_state(), n, rate1, rate2)
    return run_session(config, _seed(seed))


def run_rosenzweig_ncsit(params: ChannelParams, n: int, rate1: float, rate2: float,
                         seed) -> SessionResult:
    return run_session(SchemeConfig("rosenzweig_ncsit", params, n, rate1, rate2), _seed(seed))


def run_twostep_dms(params: ChannelParams, rho: float, n: int, rate1: float, rate2: float,
                    seed) -> SessionResult:
    config = SchemeConfig("twostep_dms", params.without_state(), n, rate1, rate2, rho)
    return run_session(config, _seed(seed))


def run_hybrid_ncsit_dms(params: ChannelParams, rho: float, n: int, rate1: float, rate2: float,
                         seed) -> SessionResult:
    config = SchemeConfig("hybrid_ncsit_dms", params, n, rate1, rate2, rho)
    return run_session(config, _seed(seed))
