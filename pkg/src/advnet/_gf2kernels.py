"""Compiled GF(2^m) kernels, m <= 64, elements packed in uint64 words.

Every kernel takes the field as ``(m, red, mask)`` where ``red`` is the
modulus with its x^m term dropped and ``mask`` is 2^m - 1.
"""

import numpy as np
from numba import njit

_ONE = np.uint64(1)


@njit(cache=True)
def mul(a, b, m, red, mask):
    # Horner-style multiply-and-reduce, so r never leaves m bits.
    r = np.uint64(0)
    top = _ONE << np.uint64(m - 1)
    for i in range(m - 1, -1, -1):
        hi = r & top
        r = (r << _ONE) & mask
        if hi:
            r ^= red
        if (b >> np.uint64(i)) & _ONE:
            r ^= a
    return r


@njit(cache=True)
def power(a, e, m, red, mask):
    result = _ONE
    base = a
    while e:
        if e & _ONE:
            result = mul(result, base, m, red, mask)
        base = mul(base, base, m, red, mask)
        e >>= _ONE
    return result


@njit(cache=True)
def frobenius(a, steps, m, red, mask):
    for _ in range(steps):
        a = mul(a, a, m, red, mask)
    return a


@njit(cache=True)
def frobenius_chain(a, k, m, red, mask):
    out = np.empty(k, dtype=np.uint64)
    for i in range(k):
        a = mul(a, a, m, red, mask)
        out[i] = a
    return out


@njit(cache=True)
def vmul(x, y, m, red, mask):
    out = np.empty(x.shape[0], dtype=np.uint64)
    for i in range(x.shape[0]):
        out[i] = mul(x[i], y[i], m, red, mask)
    return out


@njit(cache=True)
def scale(c, x, m, red, mask):
    out = np.empty(x.shape[0], dtype=np.uint64)
    for i in range(x.shape[0]):
        out[i] = mul(c, x[i], m, red, mask)
    return out


@njit(cache=True)
def dot(x, y, m, red, mask):
    acc = np.uint64(0)
    for i in range(x.shape[0]):
        acc ^= mul(x[i], y[i], m, red, mask)
    return acc


@njit(cache=True)
def matvec(a, v, m, red, mask):
    out = np.zeros(a.shape[0], dtype=np.uint64)
    for i in range(a.shape[0]):
        acc = np.uint64(0)
        for j in range(a.shape[1]):
            acc ^= mul(a[i, j], v[j], m, red, mask)
        out[i] = acc
    return out


@njit(cache=True)
def lincomb(coeffs, rows, m, red, mask):
    out = np.zeros(rows.shape[1], dtype=np.uint64)
    for i in range(rows.shape[0]):
        c = coeffs[i]
        if c == 0:
            continue
        for j in range(rows.shape[1]):
            out[j] ^= mul(c, rows[i, j], m, red, mask)
    return out
