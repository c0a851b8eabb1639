"""Counter-based random streams keyed by (master_seed, trial, time, stream).

Every Gaussian variate used by a simulation is a pure function of its key:
the 64-bit master seed is the Threefry key, and the counter packs the trial
index (first word) with ``time << 12 | stream << 5 | lane`` (second word).
Trials can therefore be generated in any order, in any chunking, on any
number of threads, and always produce the same numbers.

The hot loop lives in a compiled extension when it is available; otherwise a
vectorised numpy implementation is used.  Set ``FBGMAC_PURE_PYTHON=1`` to
force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _rng_py

try:
    from . import _rng_ext
except ImportError:
    _rng_ext = None

COMPILED_AVAILABLE = _rng_ext is not None
if COMPILED_AVAILABLE and not os.environ.get("FBGMAC_PURE_PYTHON"):
    _backend_module, BACKEND = _rng_ext, "compiled"
else:
    _backend_module, BACKEND = _rng_py, "numpy"


def _resolve(backend):
    """Backend module from None (the default), a name, or a module."""
    if backend is None:
        return _backend_module
    if backend == "numpy":
        return _rng_py
    if backend == "compiled":
        if not COMPILED_AVAILABLE:
            raise ImportError("the compiled random-number backend is not built")
        return _rng_ext
    return backend

STREAM_ETA1 = 0
STREAM_ETA2 = 1
STREAM_STATE = 2
STREAM_MSG1 = 3
STREAM_MSG2 = 4

MAX_TIME = (1 << 20) - 1
MAX_LANES = 32
MAX_TRIAL = (1 << 32) - 1


def _key(master_seed: int) -> tuple[int, int]:
    seed = int(master_seed)
    if not 0 <= seed < 1 << 64:
        raise ValueError(f"master_seed must fit in 64 bits, got {master_seed}")
    return seed & 0xFFFFFFFF, seed >> 32


def _trial_array(trials) -> np.ndarray:
    arr = np.asarray(trials, dtype=np.int64).reshape(-1)
    if arr.size and (arr.min() < 0 or arr.max() > MAX_TRIAL):
        raise ValueError("trial indices must lie in [0, 2**32)")
    return arr.astype(np.uint32)


def _stream_base(stream: int, time: int) -> int:
    if not 0 <= stream < 128:
        raise ValueError("stream id must lie in [0, 128)")
    return (time << 12) | (stream << 5)


def gaussian(master_seed: int, trials, n: int, stream: int, *, backend=None) -> np.ndarray:
    """Standard normal draws for times 1..n, shape (len(trials), n)."""
    if not 0 <= n <= MAX_TIME:
        raise ValueError(f"block length must lie in [0, {MAX_TIME}]")
    mod = _resolve(backend)
    k0, k1 = _key(master_seed)
    tr = _trial_array(trials)
    return mod.normal_block(k0, k1, tr, _stream_base(stream, 1), n)


def words(master_seed: int, trials, stream: int, nwords: int, *, backend=None) -> np.ndarray:
    """Raw 64-bit words at time 0, shape (len(trials), nwords)."""
    if not 1 <= nwords <= MAX_LANES:
        raise ValueError(f"nwords must lie in [1, {MAX_LANES}]")
    mod = _resolve(backend)
    k0, k1 = _key(master_seed)
    tr = _trial_array(trials)
    return mod.word_block(k0, k1, tr, _stream_base(stream, 0), nwords)


def uniform_messages(master_seed: int, trials, stream: int, cardinality: int) -> np.ndarray:
    """Message indices uniform on 1..cardinality, one per trial.

    Uses ``bits + 64`` random bits reduced modulo the cardinality, so the
    deviation from uniform is below 2**-64.  Returns int64 when the
    cardinality fits, an object array of Python ints otherwise.
    """
    m = int(cardinality)
    tr = _trial_array(trials)
    if m == 1:
        return np.ones(tr.size, dtype=np.int64)
    nwords = (m.bit_length() + 63) // 64 + 1
    raw = words(master_seed, tr, stream, nwords)
    vals = []
    for row in raw.tolist():
        acc = 0
        for wd in row:
            acc = (acc << 64) | wd
        vals.append(acc % m + 1)
    if m < 1 << 62:
        return np.array(vals, dtype=np.int64)
    out = np.empty(len(vals), dtype=object)
    out[:] = vals
    return out
