"""Coefficient schedules and full trials checked against the mpmath oracle."""

import math

import mpmath as mp
import numpy as np
import pytest

import oracles
from fbgmac import analysis, capacity
from fbgmac.model import ChannelParams, DomainError, TrialSeed, nearest_message
from fbgmac.schemes import (SchemeConfig, alpha_prime_closed_form, coeffs_dms, coeffs_ozarow,
                            coeffs_sk, config_at_fraction, draw, run_batch, run_hybrid_ncsit_dms,
                            run_ozarow, run_rosenzweig_ncsit, run_sk_p2p, run_twostep_dms)
from fbgmac.schemes.config import Draws

UNIT = ChannelParams(1.0, 1.0, 1.0)
FIG8 = ChannelParams(1.0, 1.2, 0.1, 3.0)
FIG10 = ChannelParams(10.0, 3.0, 10.0, 20.0, 5.0)
FIG13 = ChannelParams(1.0, 1.5, 0.1, 1.2)


def _close(got, ref, rel=1e-12):
    for k, (g, r) in enumerate(zip(got, ref)):
        if r is None:
            assert math.isnan(g), k
            continue
        r = float(r)
        assert abs(g - r) <= rel * max(abs(r), 1e-300), (k, g, r)


# ------------------------------------------------------------------ schedules


@pytest.mark.parametrize("power,s", [(1.0, 1.0), (10.0, 0.5), (0.2, 3.0)])
def test_sk_schedule_matches_oracle(power, s):
    c = coeffs_sk(power, s, 25)
    ref = oracles.sk_schedule(power, s, 25)
    _close(c.alpha_seq, ref["alpha"])
    _close(c.beta1_seq[1:], ref["beta"][1:])
    # closed form (s/12P)(s/(P+s))^(k-1)
    k = np.arange(1, 26)
    np.testing.assert_allclose(c.alpha_seq, s / (12 * power) * (s / (power + s)) ** (k - 1), rtol=1e-13)


@pytest.mark.parametrize("params", [UNIT, FIG8, FIG10], ids=["unit", "fig8", "fig10"])
def test_ozarow_schedule_matches_oracle(params):
    n = 40
    c = coeffs_ozarow(params, n)
    ref = oracles.ozarow_schedule(params.p1, params.p2, params.sigma1_sq, n)
    _close(c.alpha1_seq, ref["alpha1"])
    _close(c.alpha2_seq, ref["alpha2"])
    _close(c.beta1_seq[2:], ref["beta1"][2:])
    _close(c.beta2_seq[2:], ref["beta2"][2:])
    np.testing.assert_allclose(c.rho_seq, [float(r) for r in ref["rho"]], rtol=0, atol=1e-13)
    assert c.sign_seq.tolist() == [float(v) for v in ref["sign"]]


def test_ozarow_first_correlation_and_sign_convention():
    for params in (UNIT, FIG8, FIG10):
        c = coeffs_ozarow(params, 5)
        p1, p2, s = params.p1, params.p2, params.sigma1_sq
        assert c.rho_seq[0] == 0.0 and c.rho_seq[1] == 0.0
        rho3 = -math.sqrt(p1 * p2) / math.sqrt((p1 + s) * (p2 + s))
        assert c.rho_seq[2] == pytest.approx(rho3, abs=1e-15)
        # sign(0) = +1 so user 2 is not inverted at time 3
        assert c.sign_seq[2] == 1.0
        assert c.sign_seq[3] == -1.0
        assert c.alpha1_seq[0] == c.alpha1_seq[1] == pytest.approx(s / (12 * p1), rel=1e-15)
        assert c.alpha2_seq[1] == pytest.approx(s / (12 * p2), rel=1e-15)


def test_ozarow_alpha_strictly_decreasing():
    c = coeffs_ozarow(FIG8, 60)
    assert np.all(np.diff(c.alpha1_seq[1:]) < 0)
    assert np.all(np.diff(c.alpha2_seq[2:]) < 0)


@pytest.mark.parametrize("params", [UNIT, FIG8, FIG10], ids=["unit", "fig8", "fig10"])
def test_ozarow_correlation_magnitude_converges_to_fixed_point(params):
    c = coeffs_ozarow(params, 500)
    limit = abs(c.rho_seq[-1])
    assert abs(abs(c.rho_seq[-2]) - limit) < 1e-12
    diff, rhs = capacity.rho_star_residual(params, limit)
    assert abs(diff) / rhs < 1e-8
    assert limit == pytest.approx(capacity.solve_rho_star(params), abs=1e-8)


def test_ozarow_domain_errors():
    with pytest.raises(DomainError):
        coeffs_ozarow(UNIT, 2)
    with pytest.raises(DomainError):
        coeffs_ozarow(ChannelParams(1.0, 0.0, 1.0), 10)


@pytest.mark.parametrize("params,rho", [(UNIT, 0.5), (FIG13, 0.5), (FIG10, 0.3), (UNIT, 0.0), (UNIT, 1.0)])
def test_dms_schedule_matches_oracle(params, rho):
    n = 30
    c = coeffs_dms(params, rho, n)
    ref = oracles.dms_schedule(params.p1, params.p2, params.sigma1_sq, rho, n)
    assert c.p_star == pytest.approx(float(ref["p_star"]), rel=1e-15)
    _close(c.alpha_prime_seq, ref["alpha_prime"])
    _close(c.beta1_seq[2:], ref["beta1"][2:])
    # the two error processes stay uncorrelated, so the projections are decoupled
    assert max(abs(float(x)) for x in ref["cross"]) < 1e-40
    if rho < 1:
        _close(c.alpha_seq, ref["alpha"])
        _close(c.beta2_seq[1:], ref["beta2"][1:])
        weights = oracles.dms_a2_weights(ref, n)
        np.testing.assert_allclose(c.a2_coeffs, [float(w) for w in weights], rtol=1e-11, atol=1e-17)
    else:
        assert not c.private_enabled


def test_dms_schedule_examples():
    c = coeffs_dms(UNIT, 0.5, 20)
    assert c.p_star == pytest.approx(2.25, abs=1e-15)
    assert c.r_sq == pytest.approx(1.75, abs=1e-15)
    ratio = c.alpha_prime_seq[2:] / c.alpha_prime_seq[1:-1]
    np.testing.assert_allclose(ratio, 0.4375, rtol=1e-14)
    c0 = coeffs_dms(FIG13, 0.0, 5)
    assert c0.p_star == FIG13.p1
    assert c0.r_sq == pytest.approx(FIG13.p2 + FIG13.sigma1_sq, rel=1e-15)
    assert c.alpha_seq[0] == pytest.approx(1.0 / (12 * 0.75), rel=1e-15)
    with pytest.raises(DomainError):
        coeffs_dms(UNIT, -0.1, 10)
    with pytest.raises(DomainError):
        coeffs_dms(UNIT, 1.1, 10)


@pytest.mark.parametrize("params,rho", [(UNIT, 0.5), (FIG13, 0.2), (FIG10, 0.9)])
def test_alpha_prime_closed_form(params, rho):
    c = coeffs_dms(params, rho, 60)
    for k in range(2, 61):
        assert alpha_prime_closed_form(c, k) == pytest.approx(c.alpha_prime_seq[k - 1], rel=1e-12)


# ------------------------------------------------------------------ full trials vs oracle


def _oracle_trial(cfg, d, row):
    p = cfg.params
    eta = d.eta1[row].tolist()
    state = d.s[row].tolist()
    w1, w2 = int(d.w1[row]), int(d.w2[row])
    if cfg.scheme == "sk_p2p":
        return oracles.sk_trial(p.p1, p.sigma1_sq, cfg.n, w1, cfg.card1, eta)
    if cfg.scheme in ("ozarow", "rosenzweig_ncsit"):
        return oracles.ozarow_trial(p.p1, p.p2, p.sigma1_sq, cfg.n, w1, cfg.card1, w2, cfg.card2,
                                    eta, state)
    return oracles.dms_trial(p.p1, p.p2, p.sigma1_sq, cfg.rho, cfg.n, w1, cfg.card1, w2,
                             cfg.card2, eta, state)


TRIAL_CASES = [
    ("sk_p2p", ChannelParams(1.0, 0.0, 1.0), 0.0, 20, 0.8),
    ("ozarow", UNIT, 0.0, 30, 0.8),
    ("ozarow", FIG8, 0.0, 25, 0.8),
    ("rosenzweig_ncsit", FIG10, 0.0, 40, 0.7),
    ("twostep_dms", UNIT, 0.5, 30, 0.8),
    ("twostep_dms", FIG13, 0.5, 25, 0.8),
    ("hybrid_ncsit_dms", FIG10, 0.5, 40, 0.7),
]


@pytest.mark.parametrize("scheme,params,rho,n,frac", TRIAL_CASES)
def test_full_trials_match_oracle(scheme, params, rho, n, frac):
    cfg = config_at_fraction(scheme, params, n, frac, rho)
    d = draw(cfg, 77, np.arange(6))
    out = run_batch(cfg, d)
    for row in range(6):
        ref = _oracle_trial(cfg, d, row)
        scale = max(abs(float(v)) for v in ref["y"])
        np.testing.assert_allclose(out.y[row], [float(v) for v in ref["y"]], rtol=0, atol=1e-12 * scale)
        np.testing.assert_allclose(out.x1[row], [float(v) for v in ref["x1"]], rtol=0,
                                   atol=1e-12 * scale)
        assert abs(out.theta_hat_1[row, -1] - float(ref["h1"][-1])) < 1e-12
        assert int(out.decoded1[row]) == ref["dec1"]
        if scheme != "sk_p2p":
            assert abs(out.theta_hat_2[row, -1] - float(ref["h2"][-1])) < 1e-12
            assert int(out.decoded2[row]) == ref["dec2"]
        if scheme in ("twostep_dms", "hybrid_ncsit_dms"):
            np.testing.assert_allclose(out.v[row], [float(v) for v in ref["v"]], rtol=0,
                                       atol=1e-12 * scale)
            np.testing.assert_allclose(out.u[row], [float(v) for v in ref["u"]], rtol=0,
                                       atol=1e-12 * scale)


@pytest.mark.parametrize("scheme,params", [("twostep_dms", UNIT), ("hybrid_ncsit_dms", FIG10)])
def test_first_stage_errors_propagate_like_the_oracle(scheme, params):
    cfg = config_at_fraction(scheme, params, 12, 1.6, 0.5)
    d = draw(cfg, 5, np.arange(400))
    out = run_batch(cfg, d)
    wrong = np.flatnonzero(~out.correct1)[:6]
    assert wrong.size >= 3
    for row in wrong:
        ref = _oracle_trial(cfg, d, row)
        assert int(out.decoded1[row]) == ref["dec1"]
        assert int(out.decoded2[row]) == ref["dec2"]


def test_terminal_estimates_equal_message_plus_error():
    cfg = config_at_fraction("twostep_dms", UNIT, 30, 0.8, 0.5)
    out = run_batch(cfg, draw(cfg, 3, np.arange(500)))
    ok = out.correct1
    np.testing.assert_allclose(out.theta_hat_1[:, -1], out.theta1 + out.errors["eps_prime"][:, -1],
                               rtol=0, atol=1e-12)
    np.testing.assert_allclose(out.theta_hat_2[ok, -1], out.theta2[ok] + out.errors["eps"][ok, -1],
                               rtol=0, atol=1e-12)
    # the literal float receiver agrees with the error-coordinate trajectory
    np.testing.assert_allclose(out.literal_theta_hat_1[:, -1], out.theta_hat_1[:, -1], rtol=0, atol=1e-12)
    np.testing.assert_allclose(out.literal_theta_hat_2[ok, -1], out.theta_hat_2[ok, -1], rtol=0,
                               atol=1e-9)


@pytest.mark.parametrize("scheme,params,rho", [("ozarow", UNIT, 0.0), ("rosenzweig_ncsit", FIG10, 0.0),
                                               ("twostep_dms", FIG13, 0.5),
                                               ("hybrid_ncsit_dms", FIG10, 0.5)])
def test_terminal_error_does_not_depend_on_messages(scheme, params, rho):
    cfg = config_at_fraction(scheme, params, 40, 0.7, rho)
    d = draw(cfg, 11, np.arange(300))
    other = Draws(d.trials, (d.w1 * 7) % cfg.card1 + 1, (d.w2 * 3) % cfg.card2 + 1,
                  d.eta1, d.eta2, d.s)
    a, b = run_batch(cfg, d), run_batch(cfg, other)
    keep = a.correct1 & b.correct1
    np.testing.assert_allclose(a.final_eps1, b.final_eps1, rtol=0, atol=1e-12)
    np.testing.assert_allclose(a.final_eps2[keep], b.final_eps2[keep], rtol=0, atol=1e-12)


@pytest.mark.parametrize("scheme,params,rho", [("rosenzweig_ncsit", FIG10, 0.0),
                                               ("hybrid_ncsit_dms", FIG10, 0.5),
                                               ("hybrid_ncsit_dms", ChannelParams(1, 1.5, 0.1, 1.2, 3), 0.5)])
def test_state_is_cancelled(scheme, params, rho):
    cfg = config_at_fraction(scheme, params, 60, 0.7, rho)
    d = draw(cfg, 13, np.arange(300))
    assert np.std(d.s) > 1
    clean = Draws(d.trials, d.w1, d.w2, d.eta1, d.eta2, np.zeros_like(d.s))
    a, b = run_batch(cfg, d), run_batch(cfg, clean)
    assert np.max(np.abs(a.theta_hat_1[:, -1] - b.theta_hat_1[:, -1])) < 1e-9
    assert np.max(np.abs(a.theta_hat_2[:, -1] - b.theta_hat_2[:, -1])) < 1e-9
    assert np.array_equal(a.correct1, b.correct1) and np.array_equal(a.correct2, b.correct2)


@pytest.mark.parametrize("state_scheme,plain,rho", [("rosenzweig_ncsit", "ozarow", 0.0),
                                                    ("hybrid_ncsit_dms", "twostep_dms", 0.5)])
def test_zero_state_reduces_bit_exactly(state_scheme, plain, rho):
    params = ChannelParams(10.0, 3.0, 10.0, 20.0, 0.0)
    a_cfg = config_at_fraction(state_scheme, params, 50, 0.7, rho)
    b_cfg = config_at_fraction(plain, params, 50, 0.7, rho)
    a = run_batch(a_cfg, draw(a_cfg, 21, np.arange(200)))
    b = run_batch(b_cfg, draw(b_cfg, 21, np.arange(200)))
    for name in ("x1", "u", "v", "y", "z", "theta_hat_1", "theta_hat_2", "final_eps1", "final_eps2"):
        assert np.array_equal(getattr(a, name), getattr(b, name)), name
    assert np.array_equal(a.decoded1, b.decoded1) and np.array_equal(a.decoded2, b.decoded2)


# ------------------------------------------------------------------ operating behaviour


ERROR_RATE_CASES = [
    ("ozarow", UNIT, 0.0, 40, 0.8, "joint", 0.01),
    ("rosenzweig_ncsit", FIG10, 0.0, 60, 0.7, "joint", 0.02),
    ("twostep_dms", UNIT, 0.5, 50, 0.8, "joint", 0.02),
    ("twostep_dms", FIG13, 0.5, 50, 0.8, "joint", 0.02),
    ("hybrid_ncsit_dms", FIG10, 0.5, 60, 0.7, "joint", 0.02),
]


@pytest.mark.parametrize("scheme,params,rho,n,frac,which,limit", ERROR_RATE_CASES)
def test_error_rates_at_reference_operating_points(scheme, params, rho, n, frac, which, limit):
    cfg = config_at_fraction(scheme, params, n, frac, rho)
    batch = analysis.estimate_error_rate(cfg, 2000, 4242)
    assert batch.pe_joint < limit


def test_sk_single_session_api():
    res = run_sk_p2p(1.0, 1.0, 20, 0.4, TrialSeed(8, 3))
    t = res.transcript
    assert t.card1 == 256 and res.correct1
    assert res.final_eps1 == pytest.approx(t.theta_hat_1[-1] - (2 * t.w1 - 1) / 512 + 0.5, abs=1e-15)
    assert nearest_message(t.theta_hat_1[-1], 256) == t.decoded[0]
    assert run_sk_p2p(1.0, 1.0, 20, 0.4, (8, 3)).transcript == t
    zero = run_sk_p2p(1.0, 1.0, 10, 0.0, 1)
    assert zero.transcript.card1 == 1 and zero.correct1
    with pytest.raises(DomainError):
        run_sk_p2p(1.0, 1.0, 61, 1.0, 1)


def test_sk_zero_rate_always_correct():
    cfg = SchemeConfig("sk_p2p", ChannelParams(1.0, 0.0, 1.0), 5, 0.0)
    out = run_batch(cfg, draw(cfg, 2, np.arange(1000)))
    assert out.correct1.all()


def test_session_wrappers_are_consistent_with_batches():
    cases = [
        (run_ozarow, (UNIT, 30, 0.3, 0.3), SchemeConfig("ozarow", UNIT, 30, 0.3, 0.3)),
        (run_rosenzweig_ncsit, (FIG10, 30, 0.2, 0.1), SchemeConfig("rosenzweig_ncsit", FIG10, 30, 0.2, 0.1)),
        (run_twostep_dms, (FIG13, 0.5, 30, 0.5, 0.9),
         SchemeConfig("twostep_dms", FIG13.without_state(), 30, 0.5, 0.9, 0.5)),
        (run_hybrid_ncsit_dms, (FIG10, 0.5, 30, 0.3, 0.1),
         SchemeConfig("hybrid_ncsit_dms", FIG10, 30, 0.3, 0.1, 0.5)),
    ]
    for fn, args, cfg in cases:
        res = fn(*args, TrialSeed(4, 9))
        out = run_batch(cfg, draw(cfg, 4, np.array([9])))
        assert np.array_equal(res.transcript.y, out.y[0])
        assert res.final_eps1 == out.final_eps1[0] and res.final_eps2 == out.final_eps2[0]


def test_ozarow_first_symbols_respect_power():
    cfg = config_at_fraction("ozarow", FIG8, 30, 0.8)
    out = run_batch(cfg, draw(cfg, 9, np.arange(20000)))
    assert np.all(out.x2[:, 0] == 0) and np.all(out.x1[:, 1] == 0)
    # 12 P Var(theta) = P (1 - 1/M^2) on the uniform grid
    assert 12 * FIG8.p1 * (1 - 1 / cfg.card1**2) / 12 <= FIG8.p1
    assert np.mean(out.x1[:, 0] ** 2) == pytest.approx(FIG8.p1, rel=0.05)
    assert np.mean(out.x2[:, 1] ** 2) == pytest.approx(FIG8.p2, rel=0.05)


def test_private_stream_disabled_at_full_correlation():
    cfg = SchemeConfig("twostep_dms", UNIT, 20, 0.5, 0.3, 1.0)
    assert cfg.rate2 == 0.0 and cfg.card2 == 1
    out = run_batch(cfg, draw(cfg, 1, np.arange(100)))
    assert np.all(out.v == 0)
    assert out.correct2.all()


def test_eavesdropper_output_is_main_output_plus_noise():
    for scheme, params, rho in [("ozarow", FIG8, 0.0), ("hybrid_ncsit_dms", FIG10, 0.5)]:
        cfg = config_at_fraction(scheme, params, 20, 0.7, rho)
        out = run_batch(cfg, draw(cfg, 1, np.arange(50)))
        assert np.array_equal(out.z, out.y + out.draws.eta2)
        assert np.array_equal(out.y, out.x1 + out.x2 + out.draws.s + out.draws.eta1)


def test_config_validation():
    with pytest.raises(DomainError):
        SchemeConfig("nope", UNIT, 10, 0.1)
    with pytest.raises(DomainError):
        SchemeConfig("ozarow", UNIT, 2, 0.1, 0.1)
    with pytest.raises(DomainError):
        SchemeConfig("sk_p2p", UNIT, 10, 0.1, 0.1)
    with pytest.raises(DomainError):
        SchemeConfig("ozarow", UNIT, 10, -0.1, 0.1)
    with pytest.raises(DomainError):
        SchemeConfig("twostep_dms", UNIT, 10, 0.1, 0.1, 1.5)
    with pytest.raises(DomainError):
        config_at_fraction("ozarow", UNIT, 10, float("nan"))


def test_high_precision_oracle_is_self_consistent():
    """The oracle's terminal estimate equals theta plus its own error recursion."""
    ref = oracles.ozarow_trial(1, 1, 1, 20, 3, 8, 5, 8, [0.1 * i for i in range(20)], [0] * 20)
    assert abs(ref["h1"][-1] - ref["theta1"] - ref["eps1"]) < mp.mpf(10) ** -40
    assert abs(ref["h2"][-1] - ref["theta2"] - ref["eps2"]) < mp.mpf(10) ** -40
