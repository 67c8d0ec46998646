"""Pure-Python edwards25519 group arithmetic.

Points are (X, Y, Z, T) extended coordinates with x = X/Z, y = Y/Z,
x*y = T/Z.  Addition is the unified a=-1 formula, doubling the dedicated
one; base-point multiplication walks a precomputed table of doublings of B
built once at import.  Always available; the compiled kernel replaces it
when the extension built.
"""

from __future__ import annotations

from ._ed25519_core import B_X, B_Y, D, P

_D2 = (2 * D) % P
_IDENTITY = (0, 1, 1, 0)


def _add(p, q):
    x1, y1, z1, t1 = p
    x2, y2, z2, t2 = q
    a = (y1 - x1) * (y2 - x2) % P
    b = (y1 + x1) * (y2 + x2) % P
    c = t1 * t2 % P * _D2 % P
    d = 2 * z1 * z2 % P
    e = b - a
    f = d - c
    g = d + c
    h = b + a
    return e * f % P, g * h % P, f * g % P, e * h % P


def _dbl(p):
    x1, y1, z1, _ = p
    a = x1 * x1 % P
    b = y1 * y1 % P
    c = 2 * z1 * z1 % P
    e = ((x1 + y1) * (x1 + y1) - a - b) % P
    g = b - a
    f = g - c
    h = -a - b
    return e * f % P, g * h % P, f * g % P, e * h % P


def _encode(p) -> bytes:
    x, y, z, _ = p
    zinv = pow(z, P - 2, P)
    x = x * zinv % P
    y = y * zinv % P
    return (y | ((x & 1) << 255)).to_bytes(32, "little")


def _mul(p, k: int):
    acc = _IDENTITY
    for i in range(k.bit_length() - 1, -1, -1):
        acc = _dbl(acc)
        if (k >> i) & 1:
            acc = _add(acc, p)
    return acc


_B = (B_X, B_Y, 1, B_X * B_Y % P)
_B_DOUBLES = []
_pt = _B
for _ in range(256):
    _B_DOUBLES.append(_pt)
    _pt = _dbl(_pt)
del _pt


def _mul_base(k: int):
    acc = _IDENTITY
    i = 0
    while k:
        if k & 1:
            acc = _add(acc, _B_DOUBLES[i])
        k >>= 1
        i += 1
    return acc


def scalarmult_base(k: int) -> bytes:
    """Encoded k*B for the curve base point B."""
    return _encode(_mul_base(k))


def scalarmult_sub(s: int, h: int, ax: int, ay: int) -> bytes:
    """Encoded s*B - h*A for the affine point A = (ax, ay)."""
    nx = (P - ax) % P
    a_neg = (nx, ay, 1, nx * ay % P)
    return _encode(_add(_mul_base(s), _mul(a_neg, h)))
