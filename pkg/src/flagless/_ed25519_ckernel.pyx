# cython: language_level=3
# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled edwards25519 group arithmetic.

Field elements are five unsigned 51-bit limbs (radix 2^51) so products fit
in 128-bit accumulators; point math uses the same extended-coordinate
formulas as the pure-Python kernel.  Exposes the identical two-function
contract, selected by flagless.ed25519 when the extension built.
"""

ctypedef unsigned long long u64

cdef extern from *:
    ctypedef unsigned long long u128 "unsigned __int128"

cdef u64 MASK = 0x7ffffffffffff          # 2^51 - 1
# 2*p in radix 2^51; added before subtraction to keep limbs non-negative
cdef u64 TWO_P0 = 0xfffffffffffda
cdef u64 TWO_PI = 0xffffffffffffe

cdef struct fe:
    u64 v[5]

cdef struct ge:                          # x = X/Z, y = Y/Z, x*y = T/Z
    fe X
    fe Y
    fe Z
    fe T


cdef inline void fe_carry(fe *h) noexcept nogil:
    cdef u64 c
    c = h.v[0] >> 51; h.v[0] &= MASK; h.v[1] += c
    c = h.v[1] >> 51; h.v[1] &= MASK; h.v[2] += c
    c = h.v[2] >> 51; h.v[2] &= MASK; h.v[3] += c
    c = h.v[3] >> 51; h.v[3] &= MASK; h.v[4] += c
    c = h.v[4] >> 51; h.v[4] &= MASK; h.v[0] += c * 19
    c = h.v[0] >> 51; h.v[0] &= MASK; h.v[1] += c


cdef inline void fe_add(fe *h, const fe *f, const fe *g) noexcept nogil:
    cdef int i
    for i in range(5):
        h.v[i] = f.v[i] + g.v[i]
    fe_carry(h)


cdef inline void fe_sub(fe *h, const fe *f, const fe *g) noexcept nogil:
    h.v[0] = f.v[0] + TWO_P0 - g.v[0]
    h.v[1] = f.v[1] + TWO_PI - g.v[1]
    h.v[2] = f.v[2] + TWO_PI - g.v[2]
    h.v[3] = f.v[3] + TWO_PI - g.v[3]
    h.v[4] = f.v[4] + TWO_PI - g.v[4]
    fe_carry(h)


cdef void fe_mul(fe *h, const fe *f, const fe *g) noexcept nogil:
    cdef u64 f0 = f.v[0], f1 = f.v[1], f2 = f.v[2], f3 = f.v[3], f4 = f.v[4]
    cdef u64 g0 = g.v[0], g1 = g.v[1], g2 = g.v[2], g3 = g.v[3], g4 = g.v[4]
    cdef u128 t0, t1, t2, t3, t4

    t0 = <u128>f0 * g0 + 19 * (<u128>f1 * g4 + <u128>f2 * g3 + <u128>f3 * g2 + <u128>f4 * g1)
    t1 = <u128>f0 * g1 + <u128>f1 * g0 + 19 * (<u128>f2 * g4 + <u128>f3 * g3 + <u128>f4 * g2)
    t2 = <u128>f0 * g2 + <u128>f1 * g1 + <u128>f2 * g0 + 19 * (<u128>f3 * g4 + <u128>f4 * g3)
    t3 = <u128>f0 * g3 + <u128>f1 * g2 + <u128>f2 * g1 + <u128>f3 * g0 + 19 * (<u128>f4 * g4)
    t4 = <u128>f0 * g4 + <u128>f1 * g3 + <u128>f2 * g2 + <u128>f3 * g1 + <u128>f4 * g0

    cdef u64 r0, r1, r2, r3, r4, c
    r0 = <u64>t0 & MASK; t1 += <u64>(t0 >> 51)
    r1 = <u64>t1 & MASK; t2 += <u64>(t1 >> 51)
    r2 = <u64>t2 & MASK; t3 += <u64>(t2 >> 51)
    r3 = <u64>t3 & MASK; t4 += <u64>(t3 >> 51)
    r4 = <u64>t4 & MASK; c = <u64>(t4 >> 51)
    r0 += c * 19
    c = r0 >> 51; r0 &= MASK; r1 += c
    h.v[0] = r0; h.v[1] = r1; h.v[2] = r2; h.v[3] = r3; h.v[4] = r4


cdef void fe_invert(fe *out, const fe *z) noexcept nogil:
    # z^(p-2); p-2 = 2^255 - 21 has bits 8..254 set and low byte 0xeb
    cdef fe r = z[0]
    cdef int i
    for i in range(253, -1, -1):
        fe_mul(&r, &r, &r)
        if i >= 8 or ((0xeb >> i) & 1):
            fe_mul(&r, &r, z)
    out[0] = r


cdef void fe_tobytes(unsigned char *s, const fe *f) noexcept nogil:
    cdef fe t = f[0]
    fe_carry(&t)
    fe_carry(&t)
    # canonical reduction: add 19 iff t >= p, then drop bit 255
    cdef u64 q = (t.v[0] + 19) >> 51
    q = (t.v[1] + q) >> 51
    q = (t.v[2] + q) >> 51
    q = (t.v[3] + q) >> 51
    q = (t.v[4] + q) >> 51
    t.v[0] += 19 * q
    cdef u64 c
    c = t.v[0] >> 51; t.v[0] &= MASK; t.v[1] += c
    c = t.v[1] >> 51; t.v[1] &= MASK; t.v[2] += c
    c = t.v[2] >> 51; t.v[2] &= MASK; t.v[3] += c
    c = t.v[3] >> 51; t.v[3] &= MASK; t.v[4] += c
    t.v[4] &= MASK

    cdef u64 w0 = t.v[0] | (t.v[1] << 51)
    cdef u64 w1 = (t.v[1] >> 13) | (t.v[2] << 38)
    cdef u64 w2 = (t.v[2] >> 26) | (t.v[3] << 25)
    cdef u64 w3 = (t.v[3] >> 39) | (t.v[4] << 12)
    cdef int i
    for i in range(8):
        s[i] = <unsigned char>(w0 >> (8 * i))
        s[8 + i] = <unsigned char>(w1 >> (8 * i))
        s[16 + i] = <unsigned char>(w2 >> (8 * i))
        s[24 + i] = <unsigned char>(w3 >> (8 * i))


cdef fe FE_ZERO
cdef fe FE_D2
cdef ge GE_B


cdef void ge_identity(ge *r) noexcept nogil:
    cdef int i
    for i in range(5):
        r.X.v[i] = 0
        r.Y.v[i] = 0
        r.Z.v[i] = 0
        r.T.v[i] = 0
    r.Y.v[0] = 1
    r.Z.v[0] = 1


cdef void ge_add(ge *r, const ge *p, const ge *q) noexcept nogil:
    cdef fe a, b, c, d, e, f, g, h, t
    fe_sub(&a, &p.Y, &p.X)
    fe_sub(&t, &q.Y, &q.X)
    fe_mul(&a, &a, &t)
    fe_add(&b, &p.Y, &p.X)
    fe_add(&t, &q.Y, &q.X)
    fe_mul(&b, &b, &t)
    fe_mul(&c, &p.T, &q.T)
    fe_mul(&c, &c, &FE_D2)
    fe_mul(&d, &p.Z, &q.Z)
    fe_add(&d, &d, &d)
    fe_sub(&e, &b, &a)
    fe_sub(&f, &d, &c)
    fe_add(&g, &d, &c)
    fe_add(&h, &b, &a)
    fe_mul(&r.X, &e, &f)
    fe_mul(&r.Y, &g, &h)
    fe_mul(&r.Z, &f, &g)
    fe_mul(&r.T, &e, &h)


cdef void ge_dbl(ge *r, const ge *p) noexcept nogil:
    cdef fe a, b, c, e, f, g, h, t
    fe_mul(&a, &p.X, &p.X)
    fe_mul(&b, &p.Y, &p.Y)
    fe_mul(&c, &p.Z, &p.Z)
    fe_add(&c, &c, &c)
    fe_add(&t, &p.X, &p.Y)
    fe_mul(&t, &t, &t)
    fe_sub(&e, &t, &a)
    fe_sub(&e, &e, &b)
    fe_sub(&g, &b, &a)
    fe_sub(&f, &g, &c)
    fe_sub(&h, &FE_ZERO, &a)
    fe_sub(&h, &h, &b)
    fe_mul(&r.X, &e, &f)
    fe_mul(&r.Y, &g, &h)
    fe_mul(&r.Z, &f, &g)
    fe_mul(&r.T, &e, &h)


cdef void ge_scalarmult(ge *r, const ge *p, const unsigned char *k) noexcept nogil:
    # k is a 32-byte little-endian scalar
    cdef ge acc
    ge_identity(&acc)
    cdef int i
    for i in range(255, -1, -1):
        ge_dbl(&acc, &acc)
        if (k[i >> 3] >> (i & 7)) & 1:
            ge_add(&acc, &acc, p)
    r[0] = acc


cdef void ge_tobytes(unsigned char *out, const ge *p) noexcept nogil:
    cdef fe zinv, x, y
    cdef unsigned char xb[32]
    fe_invert(&zinv, &p.Z)
    fe_mul(&x, &p.X, &zinv)
    fe_mul(&y, &p.Y, &zinv)
    fe_tobytes(xb, &x)
    fe_tobytes(out, &y)
    out[31] |= (xb[0] & 1) << 7


cdef void fe_from_int(fe *h, object n):
    cdef int i
    for i in range(5):
        h.v[i] = <u64>((n >> (51 * i)) & ((1 << 51) - 1))


from flagless._ed25519_core import B_X as _B_X, B_Y as _B_Y, D as _D, P as _P

fe_from_int(&FE_ZERO, 0)
fe_from_int(&FE_D2, (2 * _D) % _P)
fe_from_int(&GE_B.X, _B_X)
fe_from_int(&GE_B.Y, _B_Y)
fe_from_int(&GE_B.Z, 1)
fe_from_int(&GE_B.T, (_B_X * _B_Y) % _P)


def scalarmult_base(k) -> bytes:
    """Encoded k*B for the curve base point B."""
    kb = int(k).to_bytes(32, "little")
    cdef const unsigned char *kp = kb
    cdef ge r
    cdef unsigned char out[32]
    ge_scalarmult(&r, &GE_B, kp)
    ge_tobytes(out, &r)
    return bytes(out[:32])


def scalarmult_sub(s, h, ax, ay) -> bytes:
    """Encoded s*B - h*A for the affine point A = (ax, ay)."""
    cdef ge a_neg, r1, r2
    nx = (_P - ax) % _P
    fe_from_int(&a_neg.X, nx)
    fe_from_int(&a_neg.Y, ay)
    fe_from_int(&a_neg.Z, 1)
    fe_from_int(&a_neg.T, (nx * ay) % _P)
    sb = int(s).to_bytes(32, "little")
    hb = int(h).to_bytes(32, "little")
    cdef const unsigned char *sp = sb
    cdef const unsigned char *hp = hb
    cdef unsigned char out[32]
    ge_scalarmult(&r1, &GE_B, sp)
    ge_scalarmult(&r2, &a_neg, hp)
    ge_add(&r1, &r1, &r2)
    ge_tobytes(out, &r1)
    return bytes(out[:32])
