"""Closed-form capacity regions, secrecy outer bounds and region utilities.

Every region handled here is a union of "pentagons"

    {(r1, r2) >= 0 : r1 <= a, r2 <= b, r1 + r2 <= c}

indexed by an auxiliary parameter (a correlation coefficient, a power split,
...).  A :class:`RateRegion` keeps the full table of ``(a, b, c)`` caps, one
row per swept parameter value, so membership is tested against the
generating constraints rather than an interpolated boundary.  Rates are in
bits per channel use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .model import ChannelParams, DomainError

DEFAULT_GRID = 201
DEFAULT_GRID_3D = 41


def _half_log2(x):
    """0.5 * log2(1 + x), accurate for small x."""
    return np.log1p(x) / (2.0 * math.log(2.0))


@dataclass(frozen=True)
class RatePair:
    r1: float
    r2: float

    def __post_init__(self):
        for name in ("r1", "r2"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {v!r}")
            object.__setattr__(self, name, v)

    @property
    def total(self) -> float:
        return self.r1 + self.r2


@dataclass(frozen=True, eq=False)
class RateRegion:
    """A union of pentagons together with its traced upper-right boundary.

    ``caps`` has one row ``(a, b, c)`` per swept auxiliary parameter value
    (``aux`` holds those values, one row each).  ``boundary`` is the upper
    envelope evaluated on a uniform r1 grid, plus the point on the r1 axis.
    """

    kind: str
    params: ChannelParams
    resolution: int
    caps: np.ndarray
    aux: np.ndarray
    boundary: tuple[RatePair, ...] = field(default=())

    @property
    def max_r1(self) -> float:
        return max(p.r1 for p in self.boundary)

    @property
    def max_r2(self) -> float:
        return max(p.r2 for p in self.boundary)

    @property
    def max_sum(self) -> float:
        return max(p.total for p in self.boundary)

    def boundary_array(self) -> np.ndarray:
        return np.array([[p.r1, p.r2] for p in self.boundary], dtype=np.float64)

    def to_csv(self) -> str:
        lines = ["r1,r2"]
        lines += [f"{p.r1!r},{p.r2!r}" for p in self.boundary]
        return "\n".join(lines) + "\n"


def _trace(caps: np.ndarray, points: int) -> tuple[RatePair, ...]:
    """Upper envelope r2(r1) of a union of pentagons on a uniform r1 grid."""
    a, b, c = caps[:, 0], caps[:, 1], caps[:, 2]
    live = (a >= 0) & (b >= 0) & (c >= 0)
    if not live.any():
        return (RatePair(0.0, 0.0),)
    a, b, c = a[live], b[live], c[live]
    r1_top = float(np.max(np.minimum(a, c)))
    grid = np.linspace(0.0, r1_top, max(points, 2))
    pts = []
    for r1 in grid:
        ok = (a >= r1) & (c >= r1)
        if not ok.any():
            continue
        r2 = float(np.max(np.minimum(b[ok], c[ok] - r1)))
        pts.append(RatePair(float(r1), max(r2, 0.0)))
    if pts[-1].r2 > 0.0:
        pts.append(RatePair(pts[-1].r1, 0.0))
    # enforce a non-increasing trace against floating-point jitter
    out = [pts[0]]
    for p in pts[1:]:
        out.append(RatePair(p.r1, min(p.r2, out[-1].r2)))
    return tuple(out)


def _region(kind, params, resolution, caps, aux, trace_points) -> RateRegion:
    caps = np.ascontiguousarray(caps, dtype=np.float64)
    return RateRegion(
        kind=kind,
        params=params,
        resolution=int(resolution),
        caps=caps,
        aux=np.asarray(aux, dtype=np.float64),
        boundary=_trace(caps, trace_points),
    )


def region_contains(region: RateRegion, point: RatePair, tol: float = 1e-9) -> bool:
    """True iff ``point`` meets some swept pentagon's constraints within tol."""
    if tol < 0:
        raise DomainError("tol must be >= 0")
    a, b, c = region.caps[:, 0], region.caps[:, 1], region.caps[:, 2]
    r1, r2 = point.r1, point.r2
    ok = (r1 <= a + tol) & (r2 <= b + tol) & (r1 + r2 <= c + tol)
    return bool(ok.any())


def region_subset(inner: RateRegion, outer: RateRegion, tol: float = 1e-9) -> list[RatePair]:
    """Boundary points of ``inner`` that are *not* contained in ``outer``."""
    return [p for p in inner.boundary if not region_contains(outer, p, tol)]


# ---------------------------------------------------------------- fixed point


def rho_star_residual(params: ChannelParams, rho: float) -> tuple[float, float]:
    """(LHS - RHS, RHS) of the correlation fixed-point equation."""
    p1, p2, s = params.p1, params.p2, params.sigma1_sq
    lhs = s * (s + p1 + p2 + 2.0 * math.sqrt(p1 * p2) * rho)
    rhs = (s + p1 * (1.0 - rho * rho)) * (s + p2 * (1.0 - rho * rho))
    return lhs - rhs, rhs


def solve_rho_star(params: ChannelParams, max_iter: int = 200) -> float:
    """Root in [0, 1) of s(s+P1+P2+2 sqrt(P1P2) rho) = (s+P1(1-rho^2))(s+P2(1-rho^2))."""
    if params.p1 <= 0:
        raise DomainError("solve_rho_star requires p1 > 0")
    f0, _ = rho_star_residual(params, 0.0)
    f1, _ = rho_star_residual(params, 1.0)
    if f0 == 0.0:
        return 0.0
    if not (f0 < 0.0 < f1):
        raise DomainError(
            f"no sign change on [0, 1]: residual(0)={f0!r}, residual(1)={f1!r}"
        )
    lo, hi = 0.0, 1.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm, _ = rho_star_residual(params, mid)
        if fm == 0.0:
            return mid
        if fm < 0.0:
            lo = mid
        else:
            hi = mid
    flo, _ = rho_star_residual(params, lo)
    fhi, _ = rho_star_residual(params, hi)
    return lo if abs(flo) <= abs(fhi) else hi


def ozarow_rate_pair(params: ChannelParams) -> RatePair:
    """Per-user rates 0.5 log(1 + Pj (1 - rho*^2) / sigma1^2) at the fixed point."""
    rho = solve_rho_star(params)
    shrink = 1.0 - rho * rho
    return RatePair(
        float(_half_log2(params.p1 * shrink / params.sigma1_sq)),
        float(_half_log2(params.p2 * shrink / params.sigma1_sq)),
    )


# ------------------------------------------------------------ achievable sets


def _check_grid(n: int, name: str = "grid"):
    if int(n) < 2:
        raise DomainError(f"{name} must be >= 2, got {n}")


def _coherent_sum(params: ChannelParams, rho):
    return params.p1 + params.p2 + 2.0 * np.sqrt(params.p1 * params.p2) * rho


def region_gmac_feedback(params: ChannelParams, rho_grid_size: int = DEFAULT_GRID,
                         trace_points: int = DEFAULT_GRID) -> RateRegion:
    """Feedback capacity region (and feedback secrecy region) of the GMAC."""
    _check_grid(rho_grid_size, "rho_grid_size")
    rho = np.linspace(0.0, 1.0, int(rho_grid_size))
    s = params.sigma1_sq
    shrink = 1.0 - rho * rho
    caps = np.column_stack([
        _half_log2(params.p1 * shrink / s),
        _half_log2(params.p2 * shrink / s),
        _half_log2(_coherent_sum(params, rho) / s),
    ])
    return _region("gmac_feedback", params, rho_grid_size, caps, rho[:, None], trace_points)


def region_gmac(params: ChannelParams, trace_points: int = DEFAULT_GRID) -> RateRegion:
    """No-feedback GMAC capacity pentagon."""
    s = params.sigma1_sq
    caps = np.array([[
        _half_log2(params.p1 / s),
        _half_log2(params.p2 / s),
        _half_log2((params.p1 + params.p2) / s),
    ]])
    return _region("gmac", params, 1, caps, np.zeros((1, 0)), trace_points)


def region_gmac_dms(params: ChannelParams, rho_grid_size: int = DEFAULT_GRID,
                    trace_points: int = DEFAULT_GRID) -> RateRegion:
    """Capacity region of the GMAC with degraded message sets."""
    _check_grid(rho_grid_size, "rho_grid_size")
    rho = np.linspace(0.0, 1.0, int(rho_grid_size))
    s = params.sigma1_sq
    caps = np.column_stack([
        np.full(rho.shape, np.inf),
        _half_log2((1.0 - rho * rho) * params.p2 / s),
        _half_log2(_coherent_sum(params, rho) / s),
    ])
    return _region("gmac_dms", params, rho_grid_size, caps, rho[:, None], trace_points)


def dms_power_split(params: ChannelParams, rho: float) -> tuple[float, float]:
    """(P*, r^2) of the two-step scheme: common-stream power and effective noise."""
    rho = float(rho)
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [0, 1], got {rho!r}")
    p_star = params.p1 + rho * rho * params.p2 + 2.0 * math.sqrt(params.p1 * params.p2) * rho
    r_sq = (1.0 - rho * rho) * params.p2 + params.sigma1_sq
    return p_star, r_sq


def dms_corner(params: ChannelParams, rho: float) -> RatePair:
    """Operating point (0.5 log(1 + P*/r^2), 0.5 log(1 + (1-rho^2) P2 / sigma1^2))."""
    p_star, r_sq = dms_power_split(params, rho)
    return RatePair(
        float(_half_log2(p_star / r_sq)),
        float(_half_log2((1.0 - rho * rho) * params.p2 / params.sigma1_sq)),
    )


# --------------------------------------------------------------- outer bounds


def outer_gmac_wt_caps(params: ChannelParams, alpha1, alpha2, beta) -> np.ndarray:
    """Pentagon caps of the wiretap outer bound at given (alpha1, alpha2, beta)."""
    p1, p2 = params.p1, params.p2
    s1, s2 = params.sigma1_sq, params.sigma2_sq
    a1p1 = np.asarray(alpha1, dtype=np.float64) * p1
    a2p2 = np.asarray(alpha2, dtype=np.float64) * p2
    beta = np.asarray(beta, dtype=np.float64)
    big = np.maximum(a1p1, a2p2)
    eaves = s1 + s2 + big + beta * (p1 + p2 - big)
    ln2 = math.log(2.0)
    r1 = _half_log2(a1p1 / s1) - 0.5 * np.log(eaves / (s1 + s2 + a2p2)) / ln2
    r2 = _half_log2(a2p2 / s1) - 0.5 * np.log(eaves / (s1 + s2 + a1p1)) / ln2
    total = _half_log2((p1 + p2) / s1) - _half_log2((p1 + p2) / (s1 + s2))
    r1, r2 = np.broadcast_arrays(r1, r2)
    return np.column_stack([r1.ravel(), r2.ravel(), np.full(r1.size, total)])


def outer_gmac_wt(params: ChannelParams, grid: int = DEFAULT_GRID_3D,
                  trace_points: int = DEFAULT_GRID) -> RateRegion:
    """Secrecy outer bound of the GMAC-WT without feedback (union over alpha1, alpha2, beta)."""
    _check_grid(grid)
    g = np.linspace(0.0, 1.0, int(grid))
    a1, a2, b = (m.ravel() for m in np.meshgrid(g, g, g, indexing="ij"))
    caps = outer_gmac_wt_caps(params, a1, a2, b)
    return _region("outer_gmac_wt", params, grid, caps, np.column_stack([a1, a2, b]), trace_points)


def outer_gmac_dms(params: ChannelParams, grid: int = DEFAULT_GRID,
                   trace_points: int = DEFAULT_GRID) -> RateRegion:
    """Secrecy outer bound of the GMAC-WT-DMS without feedback (union over rho in [-1, 1])."""
    _check_grid(grid)
    rho = np.linspace(-1.0, 1.0, int(grid))
    s1, s2 = params.sigma1_sq, params.sigma2_sq
    coh = np.maximum(_coherent_sum(params, rho), 0.0)
    caps = np.column_stack([
        np.full(rho.shape, np.inf),
        _half_log2((1.0 - rho * rho) * params.p2 / s1),
        _half_log2(coh / s1) - _half_log2(coh / (s1 + s2)),
    ])
    return _region("outer_gmac_dms", params, grid, caps, rho[:, None], trace_points)


def mmse_coefficients(params: ChannelParams, rho12, rho1s, rho2s):
    """Linear-MMSE weights (a, b) of X2 on (X1, S) for the given correlations."""
    rho12, rho1s, rho2s = (np.asarray(v, dtype=np.float64) for v in (rho12, rho1s, rho2s))
    den = 1.0 - rho1s * rho1s
    a = math.sqrt(params.p2 / params.p1) * (rho12 - rho1s * rho2s) / den
    b = math.sqrt(params.p2 / params.q) * (rho2s - rho12 * rho1s) / den
    return a, b


def _psd_correlation(rho12, rho1s, rho2s, tol=1e-12):
    det = 1.0 + 2.0 * rho12 * rho1s * rho2s - rho12**2 - rho1s**2 - rho2s**2
    return (det >= -tol) & (np.abs(rho1s) < 1.0)


def outer_ncsit_dms_caps(params: ChannelParams, rho12, rho1s, rho2s,
                         r2_form: str = "residual") -> np.ndarray:
    """Caps of the NCSIT-DMS secrecy outer bound at given correlations.

    ``r2_form="residual"`` uses 0.5 log(1 + Var(X2 - aX1 - bS) / sigma1^2),
    i.e. the log ratio (residual + sigma1^2) / sigma1^2 of the entropy
    difference that defines this bound.  ``r2_form="statement"`` instead
    evaluates 0.5 log(1 + (residual + sigma1^2) / sigma1^2), which counts the
    noise variance twice.  See the project notes for why the residual form
    is the default.
    """
    p1, p2, q = params.p1, params.p2, params.q
    s1, s2 = params.sigma1_sq, params.sigma2_sq
    rho12, rho1s, rho2s = (np.asarray(v, dtype=np.float64) for v in (rho12, rho1s, rho2s))
    a, b = mmse_coefficients(params, rho12, rho1s, rho2s)
    resid = (p2 + a * a * p1 + b * b * q
             - 2.0 * a * rho12 * math.sqrt(p1 * p2)
             - 2.0 * b * rho2s * math.sqrt(p2 * q)
             + 2.0 * a * b * rho1s * math.sqrt(p1 * q))
    resid = np.maximum(resid, 0.0)
    if r2_form == "residual":
        r2 = _half_log2(resid / s1)
    elif r2_form == "statement":
        r2 = _half_log2((resid + s1) / s1)
    else:
        raise DomainError(f"unknown r2_form {r2_form!r}")
    t = (p1 + p2 + q + 2.0 * math.sqrt(p1 * p2) * rho12
         + 2.0 * rho1s * math.sqrt(p1 * q) + 2.0 * rho2s * math.sqrt(p2 * q))
    t = np.maximum(t, 0.0)
    total = _half_log2(t / s1) - _half_log2(t / (s1 + s2))
    r2, total = np.broadcast_arrays(r2, total)
    return np.column_stack([np.full(r2.size, np.inf), r2.ravel(), total.ravel()])


def outer_ncsit_dms(params: ChannelParams, grid: int = DEFAULT_GRID_3D,
                    trace_points: int = DEFAULT_GRID, r2_form: str = "residual") -> RateRegion:
    """Secrecy outer bound of the GMAC-WT-NCSIT-DMS without feedback."""
    if params.q <= 0:
        raise DomainError("outer_ncsit_dms needs q > 0; use outer_gmac_dms for stateless models")
    if params.p1 <= 0:
        raise DomainError("outer_ncsit_dms needs p1 > 0")
    _check_grid(grid)
    g = np.linspace(-1.0, 1.0, int(grid))
    r12, r1s, r2s = (m.ravel() for m in np.meshgrid(g, g, g, indexing="ij"))
    keep = _psd_correlation(r12, r1s, r2s)
    r12, r1s, r2s = r12[keep], r1s[keep], r2s[keep]
    caps = outer_ncsit_dms_caps(params, r12, r1s, r2s, r2_form=r2_form)
    aux = np.column_stack([r12, r1s, r2s])
    return _region("outer_ncsit_dms", params, grid, caps, aux, trace_points)


def leakage_bound(params: ChannelParams, n: int) -> float:
    """Upper bound on (R1+R2) - H(W1,W2|Z^n)/n for the SK-type schemes."""
    if int(n) < 1:
        raise DomainError("n must be >= 1")
    if params.sigma2_sq <= 0:
        raise DomainError("leakage bound diverges when sigma2_sq = 0")
    s2 = params.sigma2_sq
    return float((math.log2(1.0 + params.p1 / s2) + math.log2(1.0 + params.p2 / s2)) / (2.0 * n))


def regions_for_preset(params: ChannelParams, kinds: Iterable[str], **kw) -> dict[str, RateRegion]:
    """Evaluate a list of region kinds by name."""
    table = {
        "gmac_feedback": lambda: region_gmac_feedback(params, kw.get("rho_grid", DEFAULT_GRID)),
        "gmac": lambda: region_gmac(params),
        "gmac_dms": lambda: region_gmac_dms(params, kw.get("rho_grid", DEFAULT_GRID)),
        "outer_gmac_wt": lambda: outer_gmac_wt(params, kw.get("grid3", DEFAULT_GRID_3D)),
        "outer_gmac_dms": lambda: outer_gmac_dms(params, kw.get("rho_grid", DEFAULT_GRID)),
        "outer_ncsit_dms": lambda: outer_ncsit_dms(params, kw.get("grid3", DEFAULT_GRID_3D)),
    }
    out = {}
    for kind in kinds:
        if kind not in table:
            raise DomainError(f"unknown region kind {kind!r}")
        out[kind] = table[kind]()
    return out


REGION_KINDS = ("gmac_feedback", "gmac", "gmac_dms", "outer_gmac_wt", "outer_gmac_dms",
                "outer_ncsit_dms")
