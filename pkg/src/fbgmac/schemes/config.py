"""Scheme identifiers, run configurations and randomness for a batch of trials."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import rng
from ..capacity import _half_log2, dms_corner, ozarow_rate_pair
from ..model import ChannelParams, DomainError, message_cardinality

SCHEMES = ("sk_p2p", "ozarow", "rosenzweig_ncsit", "twostep_dms", "hybrid_ncsit_dms")
DMS_SCHEMES = ("twostep_dms", "hybrid_ncsit_dms")
STATE_SCHEMES = ("rosenzweig_ncsit", "hybrid_ncsit_dms")
SK_MAX_BITS = 60


@dataclass(frozen=True)
class SchemeConfig:
    """Which scheme to run, on which channel, at which block length and rates.

    For ``sk_p2p`` the single transmitter uses ``params.p1`` and ``rate1``.
    ``rho`` is the DMS power-split parameter and is ignored elsewhere.
    """

    scheme: str
    params: ChannelParams
    n: int
    rate1: float
    rate2: float = 0.0
    rho: float = 0.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        n = int(self.n)
        if n != self.n or n < (1 if self.scheme == "sk_p2p" else 3):
            raise DomainError(f"block length n={self.n!r} too small for {self.scheme}")
        object.__setattr__(self, "n", n)
        for name in ("rate1", "rate2", "rho"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {v!r}")
            object.__setattr__(self, name, v)
        if self.scheme == "sk_p2p":
            if self.rate2 != 0.0:
                raise DomainError("sk_p2p carries a single message; rate2 must be 0")
            if self.params.p1 <= 0:
                raise DomainError("sk_p2p needs power p1 > 0")
            if self.n * self.rate1 > SK_MAX_BITS:
                raise DomainError(
                    f"message of {self.n * self.rate1:.1f} bits exceeds the {SK_MAX_BITS}-bit "
                    "single-user limit")
        if self.scheme in DMS_SCHEMES:
            if self.rho > 1.0:
                raise DomainError(f"rho must lie in [0, 1], got {self.rho!r}")
            if self.rho == 1.0 or self.params.p2 == 0.0:
                # private stream disabled: nothing can be sent for W2
                object.__setattr__(self, "rate2", 0.0)
        message_cardinality(self.n, self.rate1)
        message_cardinality(self.n, self.rate2)

    @property
    def card1(self) -> int:
        return message_cardinality(self.n, self.rate1)

    @property
    def card2(self) -> int:
        return message_cardinality(self.n, self.rate2)

    @property
    def has_state(self) -> bool:
        return self.scheme in STATE_SCHEMES and self.params.q > 0.0

    def replace(self, **changes) -> "SchemeConfig":
        from dataclasses import replace

        return replace(self, **changes)


def corner_rates(scheme: str, params: ChannelParams, rho: float = 0.0) -> tuple[float, float]:
    """The analytic operating point each scheme is designed to approach."""
    if scheme == "sk_p2p":
        return float(_half_log2(params.p1 / params.sigma1_sq)), 0.0
    if scheme in ("ozarow", "rosenzweig_ncsit"):
        pair = ozarow_rate_pair(params)
        return pair.r1, pair.r2
    if scheme in DMS_SCHEMES:
        pair = dms_corner(params, rho)
        return pair.r1, pair.r2
    raise DomainError(f"unknown scheme {scheme!r}")


def config_at_fraction(scheme: str, params: ChannelParams, n: int, fraction: float,
                       rho: float = 0.0) -> SchemeConfig:
    """Configuration running at ``fraction`` of the analytic operating point."""
    fraction = float(fraction)
    if not math.isfinite(fraction) or fraction < 0:
        raise DomainError(f"rate_fraction must be finite and >= 0, got {fraction!r}")
    r1, r2 = corner_rates(scheme, params, rho)
    return SchemeConfig(scheme, params, n, fraction * r1, fraction * r2, rho)


@dataclass(frozen=True, eq=False)
class Draws:
    """Messages, noise and state for a set of trials."""

    trials: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray
    s: np.ndarray

    @property
    def size(self) -> int:
        return self.trials.size


def draw(config: SchemeConfig, master_seed: int, trials) -> Draws:
    """All randomness of the given trials; a pure function of (seed, trial index)."""
    trials = np.asarray(trials, dtype=np.int64).reshape(-1)
    n, p = config.n, config.params
    eta1 = math.sqrt(p.sigma1_sq) * rng.gaussian(master_seed, trials, n, rng.STREAM_ETA1)
    if p.sigma2_sq > 0:
        eta2 = math.sqrt(p.sigma2_sq) * rng.gaussian(master_seed, trials, n, rng.STREAM_ETA2)
    else:
        eta2 = np.zeros_like(eta1)
    if config.has_state:
        s = math.sqrt(p.q) * rng.gaussian(master_seed, trials, n, rng.STREAM_STATE)
    else:
        s = np.zeros_like(eta1)
    w1 = rng.uniform_messages(master_seed, trials, rng.STREAM_MSG1, config.card1)
    w2 = rng.uniform_messages(master_seed, trials, rng.STREAM_MSG2, config.card2)
    return Draws(trials, w1, w2, eta1, eta2, s)
