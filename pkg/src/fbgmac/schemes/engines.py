"""Vectorised encode/transmit/decode engines, one trial per row.

Each engine runs a whole batch of trials in lock-step over time.  Besides the
literal codewords and channel outputs, an engine tracks every error process
``eps = theta_hat - theta`` the way the encoders do (they know their own
message and see the receiver's observations through feedback).

Receiver decisions are taken on the receiver's own estimation error, which
equals the encoder error plus, for the state-dependent schemes, the state
offsets still left in the estimate.  Those offsets are sums of products of
gains and state samples that must cancel to the last bit; they are kept in
double-double arithmetic.  Deciding on the error rather than on the float
estimate keeps decisions exact when the message grid is finer than float64
can resolve around a point of magnitude 0.5.  The estimate trajectories
``theta_hat_*`` are theta plus that receiver error.  The receiver's literal
float recursions on the channel output are kept in ``literal_theta_hat_*`` as
an independent cross-check; over long blocks they lose accuracy because the
second decoding stage amplifies rounding in the first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..model import channel_step, decode_offsets, thetas
from .coefficients import SchemeCoefficients
from .config import Draws, SchemeConfig

# ------------------------------------------------------ double-double helpers

_SPLIT = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    t = _SPLIT * a
    hi = t - (t - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _renorm(s, e):
    hi = s + e
    return hi, e - (hi - s)


class DD:
    """Minimal vectorised double-double number (hi + lo)."""

    __slots__ = ("hi", "lo")

    def __init__(self, hi, lo=None):
        self.hi = np.asarray(hi, dtype=np.float64)
        self.lo = np.zeros_like(self.hi) if lo is None else lo

    def __add__(self, other: "DD") -> "DD":
        s, e = _two_sum(self.hi, other.hi)
        return DD(*_renorm(s, e + self.lo + other.lo))

    def __neg__(self) -> "DD":
        return DD(-self.hi, -self.lo)

    def __sub__(self, other: "DD") -> "DD":
        return self + (-other)

    def scale(self, f: float) -> "DD":
        p, e = _two_prod(self.hi, f)
        return DD(*_renorm(p, e + self.lo * f))

    @classmethod
    def product(cls, a, b) -> "DD":
        """Exact product of two float arrays."""
        return cls(*_two_prod(np.asarray(a, dtype=np.float64), b))

    def value(self) -> np.ndarray:
        return self.hi + self.lo


def _weighted_sum(s: np.ndarray, weights: np.ndarray) -> DD:
    """sum_m weights[m] * s[:, m] in double-double."""
    acc = DD(np.zeros(s.shape[0]))
    for m in range(weights.size):
        if weights[m] != 0.0:
            acc = acc + DD.product(s[:, m], weights[m])
    return acc


# -------------------------------------------------------------------- output


@dataclass(eq=False)
class BatchOutput:
    """Everything an engine produced for a batch of trials (rows)."""

    config: SchemeConfig
    coeffs: SchemeCoefficients
    draws: Draws
    theta1: np.ndarray
    theta2: np.ndarray
    x1: np.ndarray
    u: np.ndarray
    v: np.ndarray
    x_star: np.ndarray
    y: np.ndarray
    z: np.ndarray
    theta_hat_1: np.ndarray
    theta_hat_2: np.ndarray
    literal_theta_hat_1: np.ndarray
    literal_theta_hat_2: np.ndarray
    final_eps1: np.ndarray
    final_eps2: np.ndarray
    decoded1: np.ndarray
    decoded2: np.ndarray
    correct1: np.ndarray
    correct2: np.ndarray
    #: encoder-side error processes by name, shape (T, n), NaN where undefined
    errors: dict = field(default_factory=dict)
    #: for each error process, the observation its update at time k projects out
    observations: dict = field(default_factory=dict)
    #: (error process, observation) pairs checked for orthogonality
    schedules: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.theta1.size

    @property
    def x2(self) -> np.ndarray:
        return self.u + self.v


def _blank(shape):
    return np.zeros(shape, dtype=np.float64)


def _nan(shape):
    return np.full(shape, np.nan)


def _estimates(theta, rx):
    """Receiver estimate trajectory theta + error; 0 (the prior mean) before any update."""
    return np.where(np.isnan(rx), 0.0, theta[:, None] + np.nan_to_num(rx))


def _finish(config, coeffs, draws, th1, th2, sig, rx1, rx2, **extra) -> BatchOutput:
    """Package an engine's signals; ``rx1``/``rx2`` are receiver error trajectories."""
    e1, e2 = rx1[:, -1].copy(), rx2[:, -1].copy()
    dec1, ok1 = decode_offsets(draws.w1, e1, config.card1)
    dec2, ok2 = decode_offsets(draws.w2, e2, config.card2)
    return BatchOutput(
        config=config, coeffs=coeffs, draws=draws, theta1=th1, theta2=th2,
        theta_hat_1=_estimates(th1, rx1), theta_hat_2=_estimates(th2, rx2),
        final_eps1=e1, final_eps2=e2, decoded1=dec1, decoded2=dec2,
        correct1=ok1, correct2=ok2, **sig, **extra,
    )


# ---------------------------------------------------------------- SK (1 user)


def sk_engine(config: SchemeConfig, coeffs: SchemeCoefficients, draws: Draws) -> BatchOutput:
    p, n, T = config.params.p1, config.n, draws.size
    alpha, g = coeffs.alpha_seq, coeffs.beta1_seq
    th = thetas(draws.w1, config.card1)
    c0 = math.sqrt(12.0 * p)
    x1, y, z, eps, lit = _blank((T, n)), _blank((T, n)), _blank((T, n)), _nan((T, n)), _blank((T, n))
    zero = np.zeros(T)
    x1[:, 0] = c0 * th
    y[:, 0], z[:, 0] = channel_step(x1[:, 0], zero, zero, draws.eta1[:, 0], draws.eta2[:, 0])
    eps[:, 0] = draws.eta1[:, 0] / c0
    lit[:, 0] = y[:, 0] / c0
    for k in range(1, n):
        x1[:, k] = math.sqrt(p / alpha[k - 1]) * eps[:, k - 1]
        y[:, k], z[:, k] = channel_step(x1[:, k], zero, zero, draws.eta1[:, k], draws.eta2[:, k])
        eps[:, k] = eps[:, k - 1] - g[k] * y[:, k]
        lit[:, k] = lit[:, k - 1] - g[k] * y[:, k]
    blank = _blank((T, n))
    sig = dict(x1=x1, u=blank, v=blank.copy(), x_star=x1, y=y, z=z,
               literal_theta_hat_1=lit, literal_theta_hat_2=_blank((T, n)))
    obs = y.copy()
    obs[:, 0] = np.nan
    return _finish(config, coeffs, draws, th, np.zeros(T), sig, eps, np.zeros((T, n)),
                   errors={"eps": eps}, observations={"eps": obs},
                   schedules={"eps": coeffs.alpha_seq})


# ----------------------------------------------------- Ozarow and Rosenzweig


def ozarow_engine(config: SchemeConfig, coeffs: SchemeCoefficients, draws: Draws) -> BatchOutput:
    """Ozarow's scheme; with a state sequence this is the pre-cancelling NCSIT variant."""
    prm, n, T = config.params, config.n, draws.size
    a1, a2 = coeffs.alpha1_seq, coeffs.alpha2_seq
    b1, b2, sg = coeffs.beta1_seq, coeffs.beta2_seq, coeffs.sign_seq
    s, eta1, eta2 = draws.s, draws.eta1, draws.eta2
    th1 = thetas(draws.w1, config.card1)
    th2 = thetas(draws.w2, config.card2)
    c1, c2 = math.sqrt(12.0 * prm.p1), math.sqrt(12.0 * prm.p2)

    # state offsets left in the receiver's estimates: A_j - sum_{i<=k} b_{j,i} S_i
    off1 = _weighted_sum(s[:, 2:], coeffs.a1_coeffs)
    off2 = _weighted_sum(s[:, 2:], coeffs.a2_coeffs)
    big_a1, big_a2 = off1.value(), off2.value()

    x1, x2, y, z = _blank((T, n)), _blank((T, n)), _blank((T, n)), _blank((T, n))
    e1, e2 = _nan((T, n)), _nan((T, n))
    h1, h2 = _blank((T, n)), _blank((T, n))
    zero = np.zeros(T)

    o1 = np.zeros((T, n))
    o2 = np.full((T, n), np.nan)
    o1[:, 0] = o1[:, 1] = big_a1
    o2[:, 1] = big_a2

    x1[:, 0] = c1 * (th1 - s[:, 0] / c1 + big_a1)
    y[:, 0], z[:, 0] = channel_step(x1[:, 0], zero, s[:, 0], eta1[:, 0], eta2[:, 0])
    e1[:, 0] = eta1[:, 0] / c1
    h1[:, 0] = y[:, 0] / c1

    x2[:, 1] = c2 * (th2 - s[:, 1] / c2 + big_a2)
    y[:, 1], z[:, 1] = channel_step(zero, x2[:, 1], s[:, 1], eta1[:, 1], eta2[:, 1])
    e1[:, 1] = e1[:, 0]
    e2[:, 1] = eta1[:, 1] / c2
    h1[:, 1] = h1[:, 0]
    h2[:, 1] = y[:, 1] / c2

    clean = _nan((T, n))  # Y_k - S_k, the observation the encoders project out
    for k in range(2, n):
        x1[:, k] = math.sqrt(prm.p1 / a1[k - 1]) * e1[:, k - 1]
        x2[:, k] = sg[k] * math.sqrt(prm.p2 / a2[k - 1]) * e2[:, k - 1]
        y[:, k], z[:, k] = channel_step(x1[:, k], x2[:, k], s[:, k], eta1[:, k], eta2[:, k])
        clean[:, k] = x1[:, k] + x2[:, k] + eta1[:, k]
        e1[:, k] = e1[:, k - 1] - b1[k] * clean[:, k]
        e2[:, k] = e2[:, k - 1] - b2[k] * clean[:, k]
        h1[:, k] = h1[:, k - 1] - b1[k] * y[:, k]
        h2[:, k] = h2[:, k - 1] - b2[k] * y[:, k]
        off1 = off1 - DD.product(s[:, k], b1[k])
        off2 = off2 - DD.product(s[:, k], b2[k])
        o1[:, k] = off1.value()
        o2[:, k] = off2.value()

    rx1 = e1 + o1
    rx2 = e2 + o2
    sig = dict(x1=x1, u=_blank((T, n)), v=x2, x_star=x1, y=y, z=z,
               literal_theta_hat_1=h1, literal_theta_hat_2=h2)
    return _finish(config, coeffs, draws, th1, th2, sig, rx1, rx2,
                   errors={"eps1": e1, "eps2": e2},
                   observations={"eps1": clean, "eps2": clean},
                   schedules={"eps1": coeffs.alpha1_seq, "eps2": coeffs.alpha2_seq})


# ------------------------------------------------------ two-step DMS schemes


def dms_engine(config: SchemeConfig, coeffs: SchemeCoefficients, draws: Draws) -> BatchOutput:
    """Two-step scheme; with a state sequence this is the hybrid NCSIT variant."""
    prm, n, T = config.params, config.n, draws.size
    rho = coeffs.rho
    p_star, r_sq = coeffs.p_star, coeffs.r_sq
    pv = (1.0 - rho * rho) * prm.p2
    private = coeffs.private_enabled
    alpha, ap = coeffs.alpha_seq, coeffs.alpha_prime_seq
    b1, b2 = coeffs.beta1_seq, coeffs.beta2_seq
    lam = rho * math.sqrt(prm.p2 / prm.p1)  # U = lam * X1
    s, eta1, eta2 = draws.s, draws.eta1, draws.eta2
    th1 = thetas(draws.w1, config.card1)
    th2 = thetas(draws.w2, config.card2)
    cs = math.sqrt(12.0 * p_star)
    cv = math.sqrt(12.0 * pv) if private else 0.0

    a1dd = _weighted_sum(s[:, 2:], coeffs.a1_coeffs)
    a2dd = _weighted_sum(s[:, 2:], coeffs.a2_coeffs)
    if coeffs.a2_coeffs_lo.size:
        a2dd = a2dd + _weighted_sum(s[:, 2:], coeffs.a2_coeffs_lo)
    big_a1, big_a2 = a1dd.value(), a2dd.value()

    x1, u, v, xs = _blank((T, n)), _blank((T, n)), _blank((T, n)), _blank((T, n))
    y, z = _blank((T, n)), _blank((T, n))
    ep, e = _nan((T, n)), _nan((T, n))  # common-stream and private errors
    h1, h2 = _blank((T, n)), _blank((T, n))
    yp = _nan((T, n))      # private observation Y - X1 - U - S = V + eta1
    clean = _nan((T, n))   # Y - S
    zero = np.zeros(T)

    # time 1: only the private stream speaks
    if private:
        v[:, 0] = cv * (th2 - s[:, 0] / cv + big_a2)
    y[:, 0], z[:, 0] = channel_step(zero, u[:, 0] + v[:, 0], s[:, 0], eta1[:, 0], eta2[:, 0])
    if private:
        e[:, 0] = eta1[:, 0] / cv
        h2[:, 0] = y[:, 0] / cv

    # time 2: common stream starts, private stream sends its first correction
    xs[:, 1] = cs * (th1 - s[:, 1] / cs + big_a1)
    x1[:, 1] = xs[:, 1] / (1.0 + lam)
    u[:, 1] = lam * x1[:, 1]
    if private:
        v[:, 1] = math.sqrt(pv / alpha[0]) * e[:, 0]
    y[:, 1], z[:, 1] = channel_step(x1[:, 1], u[:, 1] + v[:, 1], s[:, 1], eta1[:, 1], eta2[:, 1])
    yp[:, 1] = v[:, 1] + eta1[:, 1]
    ep[:, 1] = yp[:, 1] / cs
    if private:
        e[:, 1] = e[:, 0] - b2[1] * yp[:, 1]
    h1[:, 1] = y[:, 1] / cs

    # offsets: common-stream estimate error = ep + off1
    o1 = np.full((T, n), np.nan)
    o1[:, 1] = big_a1
    off1_hist = [None, a1dd]
    off1 = a1dd
    for k in range(2, n):
        xs[:, k] = math.sqrt(p_star / ap[k - 1]) * ep[:, k - 1]
        x1[:, k] = xs[:, k] / (1.0 + lam)
        u[:, k] = lam * x1[:, k]
        if private:
            v[:, k] = math.sqrt(pv / alpha[k - 1]) * e[:, k - 1]
        y[:, k], z[:, k] = channel_step(x1[:, k], u[:, k] + v[:, k], s[:, k], eta1[:, k], eta2[:, k])
        yp[:, k] = v[:, k] + eta1[:, k]
        clean[:, k] = x1[:, k] + (u[:, k] + v[:, k]) + eta1[:, k]
        ep[:, k] = ep[:, k - 1] - b1[k] * clean[:, k]
        if private:
            e[:, k] = e[:, k - 1] - b2[k] * yp[:, k]
        h1[:, k] = h1[:, k - 1] - b1[k] * y[:, k]
        off1 = off1 - DD.product(s[:, k], b1[k])
        off1_hist.append(off1)
        o1[:, k] = off1.value()

    # first stage: decide W1
    rx1 = ep + o1
    dec1, ok1 = decode_offsets(draws.w1, rx1[:, -1], config.card1)
    card1 = config.card1
    if draws.w1.dtype != object:
        delta = (draws.w1 - dec1).astype(np.float64) / float(card1)
    else:
        delta = np.array([(int(a) - int(b)) / card1 for a, b in zip(draws.w1, dec1)])
    theta1_hat = th1 - delta

    # second stage: subtract the reconstructed common stream, decode W2
    if private:
        # off2 carries A2, the A1-induced offsets and any first-stage mistake
        ddelta = DD(delta)
        o2 = np.empty((T, n))
        o2[:, 0] = big_a2
        off2 = a2dd - (a1dd + ddelta).scale(cs * b2[1])
        o2[:, 1] = off2.value()
        for k in range(2, n):
            ck = math.sqrt(p_star / ap[k - 1])
            corr = DD(s[:, k]) - (off1_hist[k - 1] + ddelta).scale(ck)
            off2 = off2 - corr.scale(b2[k])
            o2[:, k] = off2.value()
        rx2 = e + o2
        # literal receiver: theta_hat_2 from Y minus the reconstructed X*
        h2[:, 1] = h2[:, 0] - b2[1] * (y[:, 1] - cs * theta1_hat)
        for k in range(2, n):
            recon = math.sqrt(p_star / ap[k - 1]) * (h1[:, k - 1] - theta1_hat)
            h2[:, k] = h2[:, k - 1] - b2[k] * (y[:, k] - recon)
    else:
        rx2 = np.zeros((T, n))

    sig = dict(x1=x1, u=u, v=v, x_star=xs, y=y, z=z,
               literal_theta_hat_1=h1, literal_theta_hat_2=h2)
    errors = {"eps_prime": ep}
    observations = {"eps_prime": clean}
    schedules = {"eps_prime": coeffs.alpha_prime_seq}
    if private:
        errors["eps"] = e
        observations["eps"] = yp
        schedules["eps"] = coeffs.alpha_seq
    return _finish(config, coeffs, draws, th1, th2, sig, rx1, rx2, errors=errors,
                   observations=observations, schedules=schedules)
