"""Feedback coding schemes: coefficient schedules, engines and sessions."""

from .coefficients import (SchemeCoefficients, alpha_prime_closed_form, coeffs_dms,
                           coeffs_ozarow, coeffs_sk)
from .config import (DMS_SCHEMES, SCHEMES, STATE_SCHEMES, Draws, SchemeConfig,
                     config_at_fraction, corner_rates, draw)
from .engines import BatchOutput
from .sessions import (ENGINES, SessionResult, coefficients_for, run_batch, run_hybrid_ncsit_dms,
                       run_ozarow, run_rosenzweig_ncsit, run_session, run_sk_p2p,
                       run_twostep_dms, session_from_batch)

__all__ = [
    "BatchOutput", "DMS_SCHEMES", "Draws", "ENGINES", "SCHEMES", "STATE_SCHEMES",
    "SchemeCoefficients", "SchemeConfig", "SessionResult", "alpha_prime_closed_form",
    "coefficients_for", "coeffs_dms", "coeffs_ozarow", "coeffs_sk", "config_at_fraction",
    "corner_rates", "draw", "run_batch", "run_hybrid_ncsit_dms", "run_ozarow",
    "run_rosenzweig_ncsit", "run_session", "run_sk_p2p", "run_twostep_dms",
    "session_from_batch",
]
