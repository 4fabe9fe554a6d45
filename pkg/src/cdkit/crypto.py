"""Discrete-log keypairs, challenge signatures, and linkable ring signatures.

The group is secp256k1 (prime order, cofactor 1). Points are encoded in
SEC1 compressed form (33 bytes), scalars as 32-byte little-endian reduced
integers. Ring signatures follow the back-linked challenge-cycle
construction with a per-key tag ("key image") I = sk * hash_to_group(pk),
so two signatures by the same key carry identical tags no matter which
ring or message they cover.

All operations are pure and deterministic: nonces and decoy responses are
derived by hashing the secret key with the message, never sampled.

This is a modeling-grade implementation: mathematically correct, not
hardened against side channels.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from functools import lru_cache

from .wire import Reader, WireError, enc_bytes, enc_list

try:  # pragma: no cover - plain ints are a functional fallback
    from gmpy2 import mpz as _mpz
except ImportError:  # pragma: no cover
    _mpz = int

# secp256k1 domain parameters
_P = _mpz(0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F)
GROUP_ORDER = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
_GX = _mpz(0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798)
_GY = _mpz(0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8)
_B = 7

_TAG_H2S = b"CDK/v1/h2s"
_TAG_H2G = b"CDK/v1/h2g"
_TAG_KEYGEN = b"CDK/v1/keygen"
_TAG_NONCE = b"CDK/v1/nonce"
_TAG_SCHNORR = b"CDK/v1/schnorr"
_TAG_RING_SEED = b"CDK/v1/ring-seed"
_TAG_RING_CHAL = b"CDK/v1/ring-chal"


def _sha256(*parts: bytes) -> bytes:
    h = hashlib.sha256()
    for p in parts:
        h.update(p)
    return h.digest()


# ---------------------------------------------------------------------------
# Jacobian point arithmetic. A point is (X, Y, Z) with x = X/Z^2, y = Y/Z^3;
# Z == 0 marks the identity. Affine points are (x, y) pairs.
# ---------------------------------------------------------------------------


def _jac_double(X1, Y1, Z1):
    if not Z1 or not Y1:
        return 0, 1, 0
    p = _P
    A = X1 * X1 % p
    B = Y1 * Y1 % p
    C = B * B % p
    t = X1 + B
    D = 2 * (t * t - A - C) % p
    E = 3 * A % p
    X3 = (E * E - 2 * D) % p
    Y3 = (E * (D - X3) - 8 * C) % p
    Z3 = 2 * Y1 * Z1 % p
    return X3, Y3, Z3


def _jac_add(X1, Y1, Z1, X2, Y2, Z2):
    if not Z1:
        return X2, Y2, Z2
    if not Z2:
        return X1, Y1, Z1
    p = _P
    Z1Z1 = Z1 * Z1 % p
    Z2Z2 = Z2 * Z2 % p
    U1 = X1 * Z2Z2 % p
    U2 = X2 * Z1Z1 % p
    S1 = Y1 * Z2 * Z2Z2 % p
    S2 = Y2 * Z1 * Z1Z1 % p
    if U1 == U2:
        if S1 != S2:
            return 0, 1, 0
        return _jac_double(X1, Y1, Z1)
    H = (U2 - U1) % p
    I = 4 * H * H % p
    J = H * I % p
    r = 2 * (S2 - S1) % p
    V = U1 * I % p
    X3 = (r * r - J - 2 * V) % p
    Y3 = (r * (V - X3) - 2 * S1 * J) % p
    t = Z1 + Z2
    Z3 = (t * t - Z1Z1 - Z2Z2) % p * H % p
    return X3, Y3, Z3


def _jac_add_affine(X1, Y1, Z1, x2, y2):
    # mixed addition with an affine (Z=1) second operand
    if not Z1:
        return _mpz(x2), _mpz(y2), _mpz(1)
    p = _P
    Z1Z1 = Z1 * Z1 % p
    U2 = x2 * Z1Z1 % p
    S2 = y2 * Z1 * Z1Z1 % p
    if X1 == U2:
        if Y1 != S2:
            return 0, 1, 0
        return _jac_double(X1, Y1, Z1)
    H = (U2 - X1) % p
    HH = H * H % p
    I = 4 * HH % p
    J = H * I % p
    r = 2 * (S2 - Y1) % p
    V = X1 * I % p
    X3 = (r * r - J - 2 * V) % p
    Y3 = (r * (V - X3) - 2 * Y1 * J) % p
    t = Z1 + H
    Z3 = (t * t - Z1Z1 - HH) % p
    return X3, Y3, Z3


def _to_affine(X, Y, Z):
    if not Z:
        return None
    p = _P
    zi = pow(Z, -1, p)
    zi2 = zi * zi % p
    return int(X * zi2 % p), int(Y * zi2 % p * zi % p)


def _wnaf(k: int, w: int) -> list[int]:
    # least-significant digit first; digits odd in [-(2^w - 1), 2^w - 1] or 0
    digits = []
    mask = (1 << w) - 1
    half = 1 << (w - 1)
    while k:
        if k & 1:
            d = k & mask
            if d >= half:
                d -= 1 << w
            k -= d
        else:
            d = 0
        digits.append(d)
        k >>= 1
    return digits


def _odd_multiples(x, y, count):
    # [P, 3P, 5P, ...] in Jacobian coordinates
    P1 = (_mpz(x), _mpz(y), _mpz(1))
    two = _jac_double(*P1)
    table = [P1]
    for _ in range(count - 1):
        table.append(_jac_add(*table[-1], *two))
    return table


def _mul(k: int, point):
    """k * point for affine `point`; returns affine or None for identity."""
    k %= GROUP_ORDER
    if k == 0 or point is None:
        return None
    table = _odd_multiples(point[0], point[1], 8)
    neg = [(X, -Y % _P, Z) for X, Y, Z in table]
    X, Y, Z = 0, 1, 0
    p = _P
    for d in reversed(_wnaf(k, 4)):
        # inline doubling keeps the hot loop free of call overhead
        if Z and Y:
            A = X * X % p
            B = Y * Y % p
            C = B * B % p
            t = X + B
            D = 2 * (t * t - A - C) % p
            E = 3 * A % p
            X3 = (E * E - 2 * D) % p
            Y3 = (E * (D - X3) - 8 * C) % p
            Z = 2 * Y * Z % p
            X, Y = X3, Y3
        if d:
            if d > 0:
                X, Y, Z = _jac_add(X, Y, Z, *table[d >> 1])
            else:
                X, Y, Z = _jac_add(X, Y, Z, *neg[(-d) >> 1])
    return _to_affine(X, Y, Z)


def _mul2(a: int, pt_a, b: int, pt_b):
    """a * pt_a + b * pt_b with shared doublings; affine result or None."""
    a %= GROUP_ORDER
    b %= GROUP_ORDER
    if a == 0:
        return _mul(b, pt_b)
    if b == 0:
        return _mul(a, pt_a)
    ta = _odd_multiples(pt_a[0], pt_a[1], 8)
    tb = _odd_multiples(pt_b[0], pt_b[1], 8)
    na = [(X, -Y % _P, Z) for X, Y, Z in ta]
    nb = [(X, -Y % _P, Z) for X, Y, Z in tb]
    da = _wnaf(a, 4)
    db = _wnaf(b, 4)
    if len(da) < len(db):
        da += [0] * (len(db) - len(da))
    else:
        db += [0] * (len(da) - len(db))
    X, Y, Z = 0, 1, 0
    p = _P
    for i in range(len(da) - 1, -1, -1):
        if Z and Y:
            A = X * X % p
            B = Y * Y % p
            C = B * B % p
            t = X + B
            D = 2 * (t * t - A - C) % p
            E = 3 * A % p
            X3 = (E * E - 2 * D) % p
            Y3 = (E * (D - X3) - 8 * C) % p
            Z = 2 * Y * Z % p
            X, Y = X3, Y3
        d = da[i]
        if d:
            if d > 0:
                X, Y, Z = _jac_add(X, Y, Z, *ta[d >> 1])
            else:
                X, Y, Z = _jac_add(X, Y, Z, *na[(-d) >> 1])
        d = db[i]
        if d:
            if d > 0:
                X, Y, Z = _jac_add(X, Y, Z, *tb[d >> 1])
            else:
                X, Y, Z = _jac_add(X, Y, Z, *nb[(-d) >> 1])
    return _to_affine(X, Y, Z)


def _build_base_table():
    # 4-bit comb for the generator: table[i][d-1] = (d << 4i) * G, affine
    windows = []
    cur = (_GX, _GY, _mpz(1))
    jac_entries = []
    for _ in range(64):
        row = [cur]
        for _ in range(14):
            row.append(_jac_add(*row[-1], *cur))
        jac_entries.append(row)
        cur = _jac_double(*row[7])  # 16 * base
    # batch inversion for the affine conversion
    flat = [pt for row in jac_entries for pt in row]
    prods = []
    acc = _mpz(1)
    for X, Y, Z in flat:
        prods.append(acc)
        acc = acc * Z % _P
    inv = pow(acc, -1, _P)
    affine = [None] * len(flat)
    for idx in range(len(flat) - 1, -1, -1):
        X, Y, Z = flat[idx]
        zi = inv * prods[idx] % _P
        inv = inv * Z % _P
        zi2 = zi * zi % _P
        affine[idx] = (X * zi2 % _P, Y * zi2 % _P * zi % _P)
    return [affine[i * 15 : (i + 1) * 15] for i in range(64)]


_BASE_TABLE = _build_base_table()


def _mul_g(k: int):
    """k * G via the fixed-base comb; affine result or None."""
    k %= GROUP_ORDER
    if k == 0:
        return None
    X, Y, Z = 0, 1, 0
    for i in range(64):
        d = (k >> (4 * i)) & 0xF
        if d:
            x2, y2 = _BASE_TABLE[i][d - 1]
            X, Y, Z = _jac_add_affine(X, Y, Z, x2, y2)
    return _to_affine(X, Y, Z)


def _on_curve(x: int, y: int) -> bool:
    return 0 <= x < _P and 0 <= y < _P and (y * y - (x * x * x + _B)) % _P == 0


def _sqrt_mod_p(a):
    # p == 3 (mod 4)
    r = pow(a, (_P + 1) >> 2, _P)
    if r * r % _P != a % _P:
        return None
    return r


# ---------------------------------------------------------------------------
# Public value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scalar:
    """Integer modulo the group order, canonically reduced."""

    value: int

    def __post_init__(self):
        if not 0 <= self.value < GROUP_ORDER:
            raise ValueError("scalar out of range")

    def encode(self) -> bytes:
        return self.value.to_bytes(32, "little")

    @classmethod
    def decode(cls, data: bytes) -> "Scalar":
        if len(data) != 32:
            raise WireError("scalar must be 32 bytes")
        v = int.from_bytes(data, "little")
        if v >= GROUP_ORDER:
            raise WireError("scalar not reduced")
        return cls(v)


@dataclass(frozen=True)
class GroupElement:
    """Non-identity point of the prime-order group."""

    x: int
    y: int

    def __post_init__(self):
        if not _on_curve(self.x, self.y):
            raise ValueError("point not on curve")

    def encode(self) -> bytes:
        return bytes([2 + (self.y & 1)]) + self.x.to_bytes(32, "big")

    @classmethod
    def decode(cls, data: bytes) -> "GroupElement":
        if len(data) != 33 or data[0] not in (2, 3):
            raise WireError("bad point encoding")
        x = int.from_bytes(data[1:], "big")
        if x >= _P:
            raise WireError("point x out of range")
        y = _sqrt_mod_p(x * x * x + _B)
        if y is None:
            raise WireError("point not on curve")
        y = int(y)
        if (y & 1) != (data[0] & 1):
            y = int(_P) - y
        return cls(x, y)

    def _tuple(self):
        return (self.x, self.y)


GENERATOR = GroupElement(int(_GX), int(_GY))


@dataclass(frozen=True)
class KeyPair:
    sk: Scalar
    pk: GroupElement


@dataclass(frozen=True)
class KeyImage:
    """Per-key tag: deterministic in the keypair, independent of messages."""

    point: GroupElement

    def encode(self) -> bytes:
        return self.point.encode()

    @classmethod
    def decode(cls, data: bytes) -> "KeyImage":
        return cls(GroupElement.decode(data))


@dataclass(frozen=True)
class Signature:
    commitment: GroupElement
    response: Scalar

    def encode(self) -> bytes:
        return enc_bytes(self.commitment.encode()) + enc_bytes(self.response.encode())

    @classmethod
    def decode(cls, data: bytes) -> "Signature":
        r = Reader(data)
        sig = cls(GroupElement.decode(r.bytes_()), Scalar.decode(r.bytes_()))
        r.expect_end()
        return sig


@dataclass(frozen=True)
class RingSignature:
    key_image: KeyImage
    seed_challenge: Scalar
    responses: tuple[Scalar, ...]

    def encode(self) -> bytes:
        return (
            enc_bytes(self.key_image.encode())
            + enc_bytes(self.seed_challenge.encode())
            + enc_list([s.encode() for s in self.responses])
        )

    @classmethod
    def decode(cls, data: bytes) -> "RingSignature":
        r = Reader(data)
        ki = KeyImage.decode(r.bytes_())
        c0 = Scalar.decode(r.bytes_())
        responses = tuple(Scalar.decode(item) for item in r.list_())
        r.expect_end()
        return cls(ki, c0, responses)


# ---------------------------------------------------------------------------
# Hashing into the scalar field and the group (internal helpers)
# ---------------------------------------------------------------------------


def _hash_to_scalar(tag: bytes, *parts: bytes) -> int:
    ctr = 0
    while True:
        v = int.from_bytes(_sha256(tag, *parts, struct.pack(">I", ctr)), "big") % GROUP_ORDER
        if v:
            return v
        ctr += 1


@lru_cache(maxsize=8192)
def _hash_to_group_cached(data: bytes):
    ctr = 0
    while True:
        x = _mpz(int.from_bytes(_sha256(_TAG_H2G, data, struct.pack(">I", ctr)), "big")) % _P
        y = _sqrt_mod_p(x * x * x + _B)
        if y is not None and x:
            y = int(y)
            if y & 1:
                y = int(_P) - y
            return (int(x), y)
        ctr += 1


def _hash_to_group(data: bytes) -> GroupElement:
    x, y = _hash_to_group_cached(data)
    return GroupElement(x, y)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def derive_keypair(seed: bytes) -> KeyPair:
    """Deterministically derive a keypair from a 32-byte seed."""
    if len(seed) != 32:
        raise ValueError("seed must be 32 bytes")
    sk = _hash_to_scalar(_TAG_KEYGEN, seed)
    pk = _mul_g(sk)
    return KeyPair(Scalar(sk), GroupElement(*pk))


def sign(sk: Scalar, msg: bytes) -> Signature:
    """Sign a challenge message; deterministic per (key, message)."""
    if not msg:
        raise ValueError("empty message")
    pk = _mul_g(sk.value)
    k = _hash_to_scalar(_TAG_NONCE, sk.encode(), msg)
    R = _mul_g(k)
    pk_el = GroupElement(*pk)
    R_el = GroupElement(*R)
    e = _hash_to_scalar(_TAG_SCHNORR, R_el.encode(), pk_el.encode(), msg)
    s = (k + e * sk.value) % GROUP_ORDER
    return Signature(R_el, Scalar(s))


def verify(pk: GroupElement, msg: bytes, sig: Signature) -> bool:
    """Total verification predicate: malformed input yields False, never raises."""
    try:
        e = _hash_to_scalar(_TAG_SCHNORR, sig.commitment.encode(), pk.encode(), msg)
        # s*G - e*pk must equal the commitment
        R = _mul2(sig.response.value, (GENERATOR.x, GENERATOR.y), GROUP_ORDER - e, pk._tuple())
        return R is not None and R == sig.commitment._tuple()
    except Exception:
        return False


def key_image(kp: KeyPair) -> KeyImage:
    """Per-key tag sk * hash_to_group(pk); equal across all rings and messages."""
    base = _hash_to_group(kp.pk.encode())
    pt = _mul(kp.sk.value, base._tuple())
    return KeyImage(GroupElement(*pt))


def _ring_challenge(ring_bytes: bytes, image: bytes, msg: bytes, a_pt, b_pt) -> int:
    a = GroupElement(*a_pt).encode()
    b = GroupElement(*b_pt).encode()
    return _hash_to_scalar(_TAG_RING_CHAL, ring_bytes, image, enc_bytes(msg), a, b)


def ring_sign(
    ring: list[GroupElement], secret_index: int, sk: Scalar, msg: bytes
) -> RingSignature:
    """Sign on behalf of `ring` from `secret_index` without revealing it.

    The embedded key image equals key_image of the signing pair, so reuse
    of one key across rings is publicly linkable.
    """
    m = len(ring)
    if m < 1:
        raise ValueError("empty ring")
    if not 0 <= secret_index < m:
        raise ValueError("secret index out of range")
    pk = _mul_g(sk.value)
    if pk != ring[secret_index]._tuple():
        raise ValueError("secret key does not match ring member")

    bases = [_hash_to_group(p.encode()) for p in ring]
    image_pt = _mul(sk.value, bases[secret_index]._tuple())
    image = KeyImage(GroupElement(*image_pt))
    image_bytes = image.encode()
    ring_bytes = enc_list([p.encode() for p in ring])

    seed = _sha256(_TAG_RING_SEED, sk.encode(), enc_bytes(msg), ring_bytes)
    alpha = _hash_to_scalar(_TAG_NONCE, seed, b"alpha")
    s = [0] * m
    for i in range(m):
        if i != secret_index:
            s[i] = _hash_to_scalar(_TAG_NONCE, seed, b"decoy", struct.pack(">I", i))

    c = [0] * m
    l = secret_index
    c[(l + 1) % m] = _ring_challenge(
        ring_bytes,
        image_bytes,
        msg,
        _mul_g(alpha),
        _mul(alpha, bases[l]._tuple()),
    )
    for step in range(1, m):
        i = (l + step) % m
        a_pt = _mul2(s[i], (GENERATOR.x, GENERATOR.y), c[i], ring[i]._tuple())
        b_pt = _mul2(s[i], bases[i]._tuple(), c[i], image_pt)
        c[(i + 1) % m] = _ring_challenge(ring_bytes, image_bytes, msg, a_pt, b_pt)
    s[l] = (alpha - c[l] * sk.value) % GROUP_ORDER

    return RingSignature(image, Scalar(c[0]), tuple(Scalar(v) for v in s))


def ring_verify(ring: list[GroupElement], msg: bytes, rsig: RingSignature) -> bool:
    """Total verification of a ring signature's closed challenge cycle."""
    try:
        m = len(ring)
        if m < 1 or len(rsig.responses) != m:
            return False
        bases = [_hash_to_group(p.encode()) for p in ring]
        image_pt = rsig.key_image.point._tuple()
        image_bytes = rsig.key_image.encode()
        ring_bytes = enc_list([p.encode() for p in ring])
        c = rsig.seed_challenge.value
        for i in range(m):
            s_i = rsig.responses[i].value
            a_pt = _mul2(s_i, (GENERATOR.x, GENERATOR.y), c, ring[i]._tuple())
            b_pt = _mul2(s_i, bases[i]._tuple(), c, image_pt)
            c = _ring_challenge(ring_bytes, image_bytes, msg, a_pt, b_pt)
        return c == rsig.seed_challenge.value
    except Exception:
        return False
