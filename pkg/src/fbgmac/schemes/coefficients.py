"""Deterministic per-time schedules shared by encoders and decoder.

All arrays are indexed by time: entry ``k-1`` belongs to time ``k``.  Entries
that are undefined at a given time (for example the variance of user 2's
error before it has transmitted) are NaN, and gains at times where no update
happens are 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..model import ChannelParams, DomainError
from ..capacity import dms_power_split


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.flags.writeable = False
    return arr


_EMPTY = _frozen([])


@dataclass(frozen=True, eq=False)
class SchemeCoefficients:
    kind: str
    n: int
    params: ChannelParams
    rho: float = float("nan")
    rho_seq: np.ndarray = field(default=_EMPTY)
    alpha1_seq: np.ndarray = field(default=_EMPTY)
    alpha2_seq: np.ndarray = field(default=_EMPTY)
    alpha_seq: np.ndarray = field(default=_EMPTY)
    alpha_prime_seq: np.ndarray = field(default=_EMPTY)
    beta1_seq: np.ndarray = field(default=_EMPTY)
    beta2_seq: np.ndarray = field(default=_EMPTY)
    p_star: float = float("nan")
    r_sq: float = float("nan")
    a1_coeffs: np.ndarray = field(default=_EMPTY)
    a2_coeffs: np.ndarray = field(default=_EMPTY)
    #: low-order parts of the A2 weights (weight = a2_coeffs + a2_coeffs_lo); empty means zero
    a2_coeffs_lo: np.ndarray = field(default=_EMPTY)

    def __post_init__(self):
        for name in ("rho_seq", "alpha1_seq", "alpha2_seq", "alpha_seq", "alpha_prime_seq",
                     "beta1_seq", "beta2_seq", "a1_coeffs", "a2_coeffs", "a2_coeffs_lo"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def private_enabled(self) -> bool:
        """DMS schemes only: whether the private (W2) stream is active."""
        return self.alpha_seq.size > 0

    @property
    def sign_seq(self) -> np.ndarray:
        """Ozarow sign modulation applied to user 2 at time k: sign(rho_{k-1}), sign(0)=+1."""
        out = np.ones(self.n)
        if self.rho_seq.size:
            out[1:] = np.where(self.rho_seq[:-1] >= 0.0, 1.0, -1.0)
        return out


def coeffs_sk(power: float, sigma1_sq: float, n: int) -> SchemeCoefficients:
    """Single-user schedule: alpha_k = (s/12P)(s/(P+s))^(k-1), gain sqrt(P a_{k-1})/(P+s)."""
    if power <= 0 or sigma1_sq <= 0:
        raise DomainError("SK scheme needs power > 0 and sigma1_sq > 0")
    if n < 1:
        raise DomainError("n must be >= 1")
    alpha = np.empty(n)
    gain = np.zeros(n)
    alpha[0] = sigma1_sq / (12.0 * power)
    for k in range(1, n):
        gain[k] = math.sqrt(power * alpha[k - 1]) / (power + sigma1_sq)
        alpha[k] = alpha[k - 1] * sigma1_sq / (power + sigma1_sq)
    params = ChannelParams(power, 0.0, sigma1_sq)
    return SchemeCoefficients("sk_p2p", n, params, alpha_seq=alpha, beta1_seq=gain)


def coeffs_ozarow(params: ChannelParams, n: int) -> SchemeCoefficients:
    """Two-user schedule: correlation rho_k, error variances and update gains."""
    if n < 3:
        raise DomainError("Ozarow-type schemes need n >= 3")
    if params.p1 <= 0 or params.p2 <= 0:
        raise DomainError("Ozarow-type schemes need p1 > 0 and p2 > 0")
    p1, p2, s = params.p1, params.p2, params.sigma1_sq
    rp = math.sqrt(p1 * p2)
    rho = np.zeros(n)
    a1 = np.full(n, np.nan)
    a2 = np.full(n, np.nan)
    b1 = np.zeros(n)
    b2 = np.zeros(n)
    a1[0] = a1[1] = s / (12.0 * p1)
    a2[1] = s / (12.0 * p2)
    for k in range(2, n):
        r = rho[k - 1]
        sg = 1.0 if r >= 0.0 else -1.0
        shrink = 1.0 - r * r
        d = p1 + p2 + 2.0 * rp * abs(r) + s
        b1[k] = math.sqrt(a1[k - 1]) * (math.sqrt(p1) + abs(r) * math.sqrt(p2)) / d
        b2[k] = sg * math.sqrt(a2[k - 1]) * (math.sqrt(p2) + abs(r) * math.sqrt(p1)) / d
        a1[k] = a1[k - 1] * (p2 * shrink + s) / d
        a2[k] = a2[k - 1] * (p1 * shrink + s) / d
        rho[k] = (r * s - sg * rp * shrink) / math.sqrt((p1 * shrink + s) * (p2 * shrink + s))
    return SchemeCoefficients(
        "ozarow", n, params, rho_seq=rho, alpha1_seq=a1, alpha2_seq=a2,
        beta1_seq=b1, beta2_seq=b2, a1_coeffs=b1[2:], a2_coeffs=b2[2:],
    )


def coeffs_dms(params: ChannelParams, rho: float, n: int) -> SchemeCoefficients:
    """Two-step schedule: common stream (alpha'), private stream (alpha) and A weights."""
    rho = float(rho)
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [0, 1], got {rho!r}")
    if n < 3:
        raise DomainError("two-step schemes need n >= 3")
    if params.p1 <= 0:
        raise DomainError("two-step schemes need p1 > 0")
    s = params.sigma1_sq
    p_star, r_sq = dms_power_split(params, rho)
    pv = (1.0 - rho * rho) * params.p2
    private = rho < 1.0 and params.p2 > 0.0

    ap = np.full(n, np.nan)
    b1 = np.zeros(n)
    ap[1] = r_sq / (12.0 * p_star)
    for k in range(2, n):
        b1[k] = math.sqrt(p_star * ap[k - 1]) / (p_star + r_sq)
        ap[k] = ap[k - 1] * r_sq / (p_star + r_sq)

    b2 = np.zeros(n)
    alpha = _EMPTY
    a2w = np.zeros(n - 2)
    a2lo = np.zeros(n - 2)
    if private:
        alpha = np.empty(n)
        alpha[0] = s / (12.0 * pv)
        for k in range(1, n):
            b2[k] = math.sqrt(pv * alpha[k - 1]) / r_sq
            alpha[k] = alpha[k - 1] * s / r_sq
        # weight of S_m in A2: the receiver's second-stage offsets are
        # b2_2 sqrt(12P*) A1 - sum_i b2_i c_i (A1 - sum_{j<i} b1_j S_j) + sum_i b2_i S_i
        # with c_i = sqrt(P*/alpha'_{i-1}); collect the coefficient of each S_m.
        # The sum is evaluated exactly over the stored floats so that the
        # double-double offsets in the engine cancel far below the message spacing.
        c = np.sqrt(p_star / ap[1:-1])  # c_i for i = 3..n
        lead = Fraction(float(math.sqrt(12.0 * p_star) * b2[1]))
        run = Fraction(0)
        for m in range(n - 2):
            run += Fraction(float(b2[m + 2])) * Fraction(float(c[m]))
            w = Fraction(float(b1[m + 2])) * (lead - run) + Fraction(float(b2[m + 2]))
            a2w[m] = float(w)
            a2lo[m] = float(w - Fraction(a2w[m]))
    return SchemeCoefficients(
        "dms", n, params, rho=rho, alpha_seq=alpha, alpha_prime_seq=ap,
        beta1_seq=b1, beta2_seq=b2, p_star=p_star, r_sq=r_sq,
        a1_coeffs=b1[2:], a2_coeffs=a2w, a2_coeffs_lo=a2lo,
    )


def alpha_prime_closed_form(coeffs: SchemeCoefficients, k: int) -> float:
    """alpha'_k = ((r/sqrt(r^2+P*))^(k-2) r/sqrt(12P*))^2 for k >= 2."""
    r = math.sqrt(coeffs.r_sq)
    root = (r / math.sqrt(coeffs.r_sq + coeffs.p_star)) ** (k - 2) * r / math.sqrt(12.0 * coeffs.p_star)
    return root * root
