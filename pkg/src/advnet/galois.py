"""Arithmetic in GF(p^m) with Frobenius powers and linearized-polynomial hashing.

Elements are stored as non-negative integers in the polynomial basis: the
coefficient of x^i sits in base-p digit i (for p = 2, bit i). ``FieldParams``
does the arithmetic on those integers and on numpy vectors of them;
``FieldElement`` wraps one integer for operator-style use.

For p = 2 and m <= 64, vector work runs in compiled kernels over uint64
arrays. Other fields fall back to Python loops, which is fine for the small
fields used in exhaustive checks.
"""

from functools import lru_cache
import math

import numpy as np

from . import _gf2kernels as _k
from .errors import UsageError

__all__ = [
    "BUILTIN_MODULI",
    "FieldParams",
    "FieldElement",
    "gf_add",
    "gf_sub",
    "gf_mul",
    "gf_inv",
    "gf_frobenius_pow",
    "slp_eval",
    "slp_hash",
    "is_irreducible",
    "smallest_irreducible",
]

# Smallest irreducible polynomial of each degree over GF(2), read as an
# integer with bit i holding the coefficient of x^i.
BUILTIN_MODULI = {
    3: 0b1011,                    # x^3 + x + 1
    4: 0b10011,                   # x^4 + x + 1
    8: 0x11B,                     # x^8 + x^4 + x^3 + x + 1
    16: 0x1002B,                  # x^16 + x^5 + x^3 + x + 1
    32: 0x10000008D,              # x^32 + x^7 + x^3 + x^2 + 1
    64: 0x1000000000000001B,      # x^64 + x^4 + x^3 + x + 1
}

_TABLE_LIMIT = 1 << 16


def _is_prime(n):
    if n < 2:
        return False
    for d in range(2, math.isqrt(n) + 1):
        if n % d == 0:
            return False
    return True


def _prime_factors(n):
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


# -- GF(2)[x] on Python ints ----------------------------------------------

_SPREAD = [int(f"{b:08b}".replace("", "0")[:-1] or "0", 2) for b in range(256)]


def _gf2_square(a):
    out, shift = 0, 0
    while a:
        out |= _SPREAD[a & 0xFF] << shift
        a >>= 8
        shift += 16
    return out


def _gf2_mod(a, f):
    df = f.bit_length() - 1
    while a.bit_length() - 1 >= df:
        a ^= f << (a.bit_length() - 1 - df)
    return a


def _gf2_clmul(a, b):
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def _gf2_gcd(a, b):
    while b:
        a, b = b, _gf2_mod(a, b)
    return a


def _gf2_irreducible(f):
    m = f.bit_length() - 1
    if m < 1:
        return False
    h = 2  # x
    for _ in range(m // 2):
        h = _gf2_mod(_gf2_square(h), f)
        if _gf2_gcd(f, h ^ 2) != 1:
            return False
    return True


# -- GF(p)[x] on coefficient lists, lowest degree first --------------------

def _trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmod(a, f, p):
    a = _trim(list(a))
    df = len(f) - 1
    inv_lead = pow(f[-1], p - 2, p)
    while len(a) - 1 >= df:
        c = a[-1] * inv_lead % p
        off = len(a) - 1 - df
        for i, fc in enumerate(f):
            a[off + i] = (a[off + i] - c * fc) % p
        _trim(a)
    return a


def _pmul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _trim(out)


def _pgcd(a, b, p):
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, _pmod(a, b, p)
    return a


def _ppowmod(a, e, f, p):
    result, base = [1], _pmod(a, f, p)
    while e:
        if e & 1:
            result = _pmod(_pmul(result, base, p), f, p)
        base = _pmod(_pmul(base, base, p), f, p)
        e >>= 1
    return result


def is_irreducible(coeffs, p=2):
    """Ben-Or test: gcd(x^(p^k) - x, f) = 1 for every k <= deg(f) / 2.

    ``coeffs`` lists coefficients lowest degree first; p = 2 also accepts an
    int bit pattern.
    """
    if p == 2:
        if not isinstance(coeffs, int):
            coeffs = sum(int(c) % 2 << i for i, c in enumerate(coeffs))
        return _gf2_irreducible(coeffs)
    f = _trim([int(c) % p for c in coeffs])
    m = len(f) - 1
    if m < 1:
        return False
    h = [0, 1]
    for _ in range(m // 2):
        h = _ppowmod(h, p, f, p)
        diff = list(h) + [0] * max(0, 2 - len(h))
        diff[1] = (diff[1] - 1) % p
        g = _pgcd(f, _trim(diff), p)
        if len(g) > 1:
            return False
    return True


@lru_cache(maxsize=None)
def smallest_irreducible(p, m):
    """Monic irreducible of degree m with the smallest base-p encoding."""
    if p == 2:
        base = 1 << m
        for low in range(1, base, 2):
            if _gf2_irreducible(base | low):
                return tuple((base | low) >> i & 1 for i in range(m + 1))
    else:
        for low in range(1, p**m):
            digits = [(low // p**i) % p for i in range(m)]
            if digits[0] and is_irreducible(digits + [1], p):
                return tuple(digits + [1])
    raise UsageError(f"no irreducible polynomial of degree {m} over GF({p})")


class FieldParams:
    """The field GF(p^m) fixed by an irreducible monic modulus.

    ``modulus`` may be a coefficient sequence (lowest degree first, length
    m + 1) or, for p = 2, an int bit pattern. When omitted, the built-in
    table is used for p = 2, otherwise the smallest irreducible is searched.
    """

    __slots__ = ("p", "m", "q", "modulus", "_fast", "_red", "_mask", "_tables", "_nbytes")

    def __init__(self, p=2, m=8, modulus=None):
        if not _is_prime(p):
            raise UsageError(f"characteristic {p} is not prime")
        if m < 1:
            raise UsageError(f"extension degree must be positive, got {m}")
        if modulus is None:
            if p == 2 and m in BUILTIN_MODULI:
                coeffs = tuple(BUILTIN_MODULI[m] >> i & 1 for i in range(m + 1))
            else:
                coeffs = smallest_irreducible(p, m)
        else:
            if isinstance(modulus, int):
                if p != 2:
                    raise UsageError("integer moduli are only accepted for p = 2")
                coeffs = tuple(modulus >> i & 1 for i in range(modulus.bit_length()))
            else:
                coeffs = tuple(int(c) % p for c in modulus)
            if len(coeffs) != m + 1 or coeffs[-1] != 1:
                raise UsageError(f"modulus must be monic of degree {m}")
            if not is_irreducible(list(coeffs), p):
                raise UsageError(f"modulus {coeffs} is reducible over GF({p})")
        self.p = p
        self.m = m
        self.q = p**m
        self.modulus = coeffs
        self._fast = p == 2 and m <= 64
        self._nbytes = max(1, ((self.q - 1).bit_length() + 7) // 8)
        self._tables = None
        if p == 2:
            self._red = sum(c << i for i, c in enumerate(coeffs[:m]))
            self._mask = (1 << m) - 1
        if self._fast:
            self._red = np.uint64(self._red)
            self._mask = np.uint64(self._mask)

    def __repr__(self):
        return f"FieldParams(p={self.p}, m={self.m})"

    def __eq__(self, other):
        return (isinstance(other, FieldParams) and self.p == other.p
                and self.m == other.m and self.modulus == other.modulus)

    def __hash__(self):
        return hash((self.p, self.m, self.modulus))

    def __reduce__(self):
        return (FieldParams, (self.p, self.m, self.modulus))

    @property
    def element_bytes(self):
        return self._nbytes

    @property
    def dtype(self):
        return np.uint64 if self.q <= 1 << 64 else object

    def element(self, value):
        return FieldElement(self, value)

    # -- scalar arithmetic on ints --------------------------------------

    def _digits(self, a):
        p = self.p
        out = []
        for _ in range(self.m):
            a, d = divmod(a, p)
            out.append(d)
        return out

    def _undigits(self, ds):
        v = 0
        for d in reversed(ds):
            v = v * self.p + d
        return v

    def add(self, a, b):
        if self.p == 2:
            return int(a) ^ int(b)
        p = self.p
        return self._undigits([(x + y) % p for x, y in zip(self._digits(int(a)), self._digits(int(b)))])

    def neg(self, a):
        if self.p == 2:
            return int(a)
        p = self.p
        return self._undigits([-x % p for x in self._digits(int(a))])

    def sub(self, a, b):
        if self.p == 2:
            return int(a) ^ int(b)
        return self.add(a, self.neg(b))

    def _slow_mul(self, a, b):
        if self.p == 2:
            return _gf2_mod(_gf2_clmul(a, b), self._red | (1 << self.m))
        prod = _pmod(_pmul(self._digits(a), self._digits(b), self.p), list(self.modulus), self.p)
        return self._undigits(prod + [0] * (self.m - len(prod)))

    def _build_tables(self):
        # log/exp tables over a primitive element; only for small q.
        q = self.q
        factors = _prime_factors(q - 1)
        for g in range(2, q):
            if all(self._slow_pow(g, (q - 1) // f) != 1 for f in factors):
                break
        else:
            g = 1  # q == 2
        exp = [1] * (2 * (q - 1))
        log = [0] * q
        x = 1
        for i in range(q - 1):
            exp[i] = exp[i + q - 1] = x
            log[x] = i
            x = self._slow_mul(x, g)
        self._tables = (exp, log)

    def _slow_pow(self, a, e):
        result, base = 1, a
        while e:
            if e & 1:
                result = self._slow_mul(result, base)
            base = self._slow_mul(base, base)
            e >>= 1
        return result

    def mul(self, a, b):
        if self._fast:
            return int(_k.mul(np.uint64(a), np.uint64(b), self.m, self._red, self._mask))
        a, b = int(a), int(b)
        if self.q <= _TABLE_LIMIT:
            if self._tables is None:
                self._build_tables()
            if a == 0 or b == 0:
                return 0
            exp, log = self._tables
            return exp[log[a] + log[b]]
        return self._slow_mul(a, b)

    def pow(self, a, e):
        if e < 0:
            return self.pow(self.inv(a), -e)
        if self._fast:
            return int(_k.power(np.uint64(a), np.uint64(e), self.m, self._red, self._mask))
        result, base = 1, int(a)
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def inv(self, a):
        if int(a) == 0:
            raise ZeroDivisionError("zero has no inverse in a field")
        return self.pow(a, self.q - 2)

    def frobenius(self, a, steps=1):
        """a^(p^steps) by ``steps`` successive p-th powers."""
        if self._fast:
            return int(_k.frobenius(np.uint64(a), steps, self.m, self._red, self._mask))
        a = int(a)
        for _ in range(steps):
            a = self.pow(a, self.p)
        return a

    # -- vectors ----------------------------------------------------------

    def asarray(self, values):
        if self.dtype is object:
            return np.array([int(v) for v in np.ravel(values)], dtype=object).reshape(np.shape(values))
        return np.asarray(values, dtype=np.uint64)

    def zeros(self, shape):
        return np.zeros(shape, dtype=self.dtype)

    def random(self, rng, shape=None):
        """Uniform elements from a numpy Generator."""
        if self.q <= 1 << 64:
            if shape is None:
                return int(rng.integers(0, self.q, dtype=np.uint64))
            return rng.integers(0, self.q, size=shape, dtype=np.uint64)
        nb = (self.q.bit_length() + 7) // 8 + 8
        draw = lambda: int.from_bytes(rng.bytes(nb), "little") % self.q  # noqa: E731
        if shape is None:
            return draw()
        out = np.empty(int(np.prod(shape)), dtype=object)
        for i in range(out.size):
            out[i] = draw()
        return out.reshape(shape)

    def vadd(self, x, y):
        if self.p == 2:
            return x ^ y
        return self._map2(self.add, x, y)

    def vsub(self, x, y):
        if self.p == 2:
            return x ^ y
        return self._map2(self.sub, x, y)

    def vneg(self, x):
        if self.p == 2:
            return x.copy()
        out = np.empty_like(x)
        for i, v in enumerate(x):
            out[i] = self.neg(v)
        return out

    def _map2(self, op, x, y):
        out = np.empty_like(x)
        flat_out, fx, fy = out.reshape(-1), np.ravel(x), np.ravel(y)
        for i in range(fx.size):
            flat_out[i] = op(fx[i], fy[i])
        return out

    def vmul(self, x, y):
        if self._fast:
            return _k.vmul(x, y, self.m, self._red, self._mask)
        return self._map2(self.mul, x, y)

    def scale(self, c, x):
        if self._fast:
            return _k.scale(np.uint64(c), x, self.m, self._red, self._mask)
        out = np.empty_like(x)
        for i, v in enumerate(x):
            out[i] = self.mul(c, v)
        return out

    def dot(self, x, y):
        if self._fast:
            return int(_k.dot(x, y, self.m, self._red, self._mask))
        acc = 0
        for a, b in zip(x, y):
            acc = self.add(acc, self.mul(a, b))
        return acc

    def matvec(self, a, v):
        if self._fast:
            return _k.matvec(a, v, self.m, self._red, self._mask)
        out = self.zeros(a.shape[0])
        for i in range(a.shape[0]):
            out[i] = self.dot(a[i], v)
        return out

    def lincomb(self, coeffs, rows):
        """sum_i coeffs[i] * rows[i] for a 2-D array of rows."""
        if self._fast:
            return _k.lincomb(self.asarray(coeffs), rows, self.m, self._red, self._mask)
        out = self.zeros(rows.shape[1])
        for c, row in zip(coeffs, rows):
            if int(c):
                out = self.vadd(out, self.scale(c, row))
        return out

    def frobenius_chain(self, a, k):
        """[a^p, a^(p^2), ..., a^(p^k)], each from the previous by one p-th power."""
        if self._fast:
            return _k.frobenius_chain(np.uint64(a), k, self.m, self._red, self._mask)
        out = self.zeros(k)
        a = int(a)
        for i in range(k):
            a = self.pow(a, self.p)
            out[i] = a
        return out

    # -- serialization ----------------------------------------------------

    def to_bytes(self, a):
        return int(a).to_bytes(self._nbytes, "little")

    def from_bytes(self, data):
        v = int.from_bytes(data, "little")
        if v >= self.q:
            raise UsageError(f"encoded value {v} is not an element of GF({self.p}^{self.m})")
        return v

    def pack(self, values):
        return b"".join(self.to_bytes(v) for v in np.ravel(values))

    def unpack(self, data):
        nb = self._nbytes
        if len(data) % nb:
            raise UsageError(f"byte string length {len(data)} is not a multiple of {nb}")
        return self.asarray([self.from_bytes(data[i:i + nb]) for i in range(0, len(data), nb)])


class FieldElement:
    __slots__ = ("field", "value")

    def __init__(self, field, value):
        value = int(value)
        if not 0 <= value < field.q:
            raise UsageError(f"{value} is not an element of GF({field.p}^{field.m})")
        self.field = field
        self.value = value

    @property
    def coeffs(self):
        return tuple(self.field._digits(self.value))

    def _check(self, other):
        if not isinstance(other, FieldElement):
            return NotImplemented
        if other.field != self.field:
            raise UsageError(f"mixing elements of {self.field} and {other.field}")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.field, self.field.add(self.value, other.value))

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.field, self.field.sub(self.value, other.value))

    def __neg__(self):
        return FieldElement(self.field, self.field.neg(self.value))

    def __mul__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.field, self.field.mul(self.value, other.value))

    def __truediv__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __pow__(self, e):
        return FieldElement(self.field, self.field.pow(self.value, e))

    def inverse(self):
        return FieldElement(self.field, self.field.inv(self.value))

    def __eq__(self, other):
        if not isinstance(other, FieldElement):
            return NotImplemented
        return self.field == other.field and self.value == other.value

    def __hash__(self):
        return hash((self.field, self.value))

    def __bool__(self):
        return self.value != 0

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"FieldElement({self.value:#x}, {self.field!r})"

    def to_bytes(self):
        return self.field.to_bytes(self.value)

    @classmethod
    def from_bytes(cls, field, data):
        return cls(field, field.from_bytes(data))


def gf_add(a, b):
    return a + b


def gf_sub(a, b):
    return a - b


def gf_mul(a, b):
    return a * b


def gf_inv(a):
    """Multiplicative inverse via a^(q-2); raises ZeroDivisionError on zero."""
    return a.inverse()


def gf_frobenius_pow(a, l):
    if l < 0:
        raise UsageError("Frobenius exponent must be non-negative")
    return FieldElement(a.field, a.field.frobenius(a.value, l))


def slp_eval(coeffs, x):
    """Evaluate sum_{i=1..k} coeffs[i-1] * x^(p^i).

    The powers x^(p^i) are produced one p-th power at a time, so the cost is
    k multiplications plus k Frobenius steps.
    """
    if len(coeffs) == 0:
        raise UsageError("a linearized polynomial needs at least one coefficient")
    f = x.field
    for c in coeffs:
        x._check(c)
    chain = f.frobenius_chain(x.value, len(coeffs))
    return FieldElement(f, f.dot(f.asarray([c.value for c in coeffs]), chain))


def slp_hash(x_vec, s1, s2):
    """Keyed check value s2 - sum_{l=1..k} x_vec[l-1] * s1^(p^l)."""
    if len(x_vec) == 0:
        raise UsageError("cannot hash an empty vector")
    s1._check(s2)
    return s2 - slp_eval(x_vec, s1)
