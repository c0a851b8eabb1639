"""Pure numpy implementation of the counter-based generator.

This is the fallback used when the compiled kernel is unavailable.  It is
bit-compatible with the kernel for the raw 32-bit words; Gaussian variates
agree to within a few ulps (the two backends may use different libm
implementations of ``log`` and ``cos``).
"""

import numpy as np

_ROTATIONS = (13, 15, 26, 6, 17, 29, 16, 24)
_PARITY = np.uint32(0x1BD11BDA)
_TWO_PI = 6.283185307179586
_INV_2_53 = 1.0 / 9007199254740992.0


def _rotl(x, r):
    return (x << np.uint32(r)) | (x >> np.uint32(32 - r))


def threefry2x32(k0, k1, c0, c1):
    """Threefry-2x32 with 20 rounds on uint32 arrays (broadcasting)."""
    k0 = np.uint32(k0)
    k1 = np.uint32(k1)
    ks = (k0, k1, _PARITY ^ k0 ^ k1)
    with np.errstate(over="ignore"):
        x0 = np.asarray(c0, dtype=np.uint32) + ks[0]
        x1 = np.asarray(c1, dtype=np.uint32) + ks[1]
        for block in range(5):
            for j in range(4):
                x0 = x0 + x1
                x1 = _rotl(x1, _ROTATIONS[(4 * block + j) % 8])
                x1 = x1 ^ x0
            i = block + 1
            x0 = x0 + ks[i % 3]
            x1 = x1 + ks[(i + 1) % 3] + np.uint32(i)
    return x0, x1


def _words64(k0, k1, c0, c1):
    x0, x1 = threefry2x32(k0, k1, c0, c1)
    return (x1.astype(np.uint64) << np.uint64(32)) | x0.astype(np.uint64)


def _open_unit(words):
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


def normal_block(k0, k1, trials, c1_base, n):
    """Standard normals of shape (len(trials), n).

    ``c1_base`` is the second counter word for time 1 and lane 0; time
    ``t`` adds ``t << 12`` and the second Box-Muller lane adds 1.
    """
    trials = np.asarray(trials, dtype=np.uint32)[:, None]
    times = np.arange(1, n + 1, dtype=np.uint32)[None, :]
    c1 = np.uint32(c1_base) + ((times - np.uint32(1)) << np.uint32(12))
    u1 = _open_unit(_words64(k0, k1, trials, c1))
    u2 = _open_unit(_words64(k0, k1, trials, c1 + np.uint32(1)))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


def word_block(k0, k1, trials, c1_base, nwords):
    """Raw 64-bit words of shape (len(trials), nwords), lanes 0..nwords-1."""
    trials = np.asarray(trials, dtype=np.uint32)[:, None]
    lanes = np.arange(nwords, dtype=np.uint32)[None, :]
    return _words64(k0, k1, trials, np.uint32(c1_base) + lanes)
