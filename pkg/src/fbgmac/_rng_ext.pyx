# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Threefry-2x32 kernel (see ``_rng_py`` for the reference)."""

import numpy as np
from libc.math cimport log, sqrt, cos
from libc.stdint cimport uint32_t, uint64_t

cdef uint32_t _PARITY = 0x1BD11BDA
cdef int[8] _ROT
_ROT[:] = [13, 15, 26, 6, 17, 29, 16, 24]
cdef double _TWO_PI = 6.283185307179586
cdef double _INV_2_53 = 1.0 / 9007199254740992.0


cdef inline uint32_t _rotl(uint32_t x, int r) noexcept nogil:
    return (x << r) | (x >> (32 - r))


cdef inline uint64_t _tf(uint32_t k0, uint32_t k1, uint32_t c0, uint32_t c1) noexcept nogil:
    cdef uint32_t ks0 = k0, ks1 = k1, ks2 = _PARITY ^ k0 ^ k1
    cdef uint32_t x0 = c0 + ks0, x1 = c1 + ks1
    cdef uint32_t ks[3]
    cdef int block, j, i
    ks[0] = ks0
    ks[1] = ks1
    ks[2] = ks2
    for block in range(5):
        for j in range(4):
            x0 = x0 + x1
            x1 = _rotl(x1, _ROT[(4 * block + j) % 8])
            x1 = x1 ^ x0
        i = block + 1
        x0 = x0 + ks[i % 3]
        x1 = x1 + ks[(i + 1) % 3] + <uint32_t>i
    return (<uint64_t>x1 << 32) | <uint64_t>x0


cdef inline double _unit(uint64_t w) noexcept nogil:
    return (<double>(w >> 11) + 0.5) * _INV_2_53


def threefry2x32(uint32_t k0, uint32_t k1, c0, c1):
    """Scalar-loop Threefry over equal-length uint32 arrays."""
    cdef const uint32_t[::1] a = np.ascontiguousarray(c0, dtype=np.uint32)
    cdef const uint32_t[::1] b = np.ascontiguousarray(c1, dtype=np.uint32)
    cdef Py_ssize_t m = a.shape[0], i
    out0 = np.empty(m, dtype=np.uint32)
    out1 = np.empty(m, dtype=np.uint32)
    cdef uint32_t[::1] o0 = out0
    cdef uint32_t[::1] o1 = out1
    cdef uint64_t w
    with nogil:
        for i in range(m):
            w = _tf(k0, k1, a[i], b[i])
            o0[i] = <uint32_t>w
            o1[i] = <uint32_t>(w >> 32)
    return out0, out1


def normal_block(uint32_t k0, uint32_t k1, trials, uint32_t c1_base, Py_ssize_t n):
    cdef const uint32_t[::1] tr = np.ascontiguousarray(trials, dtype=np.uint32)
    cdef Py_ssize_t m = tr.shape[0], i, t
    out = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef uint32_t c1
    cdef double u1, u2
    with nogil:
        for i in range(m):
            for t in range(n):
                c1 = c1_base + (<uint32_t>t << 12)
                u1 = _unit(_tf(k0, k1, tr[i], c1))
                u2 = _unit(_tf(k0, k1, tr[i], c1 + 1))
                o[i, t] = sqrt(-2.0 * log(u1)) * cos(_TWO_PI * u2)
    return out


def word_block(uint32_t k0, uint32_t k1, trials, uint32_t c1_base, Py_ssize_t nwords):
    cdef const uint32_t[::1] tr = np.ascontiguousarray(trials, dtype=np.uint32)
    cdef Py_ssize_t m = tr.shape[0], i, j
    out = np.empty((m, nwords), dtype=np.uint64)
    cdef uint64_t[:, ::1] o = out
    with nogil:
        for i in range(m):
            for j in range(nwords):
                o[i, j] = _tf(k0, k1, tr[i], c1_base + <uint32_t>j)
    return out
