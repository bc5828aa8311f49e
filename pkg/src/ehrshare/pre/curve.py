"""secp256k1 group arithmetic and fixed-width point/scalar codecs.

The whole engine works in one prime-order elliptic-curve group fixed at
import time. Points serialize as 33-byte compressed SEC1 encodings and
scalars as 32-byte big-endian integers, so every composite object has a
fixed wire width.

Internally the hot path runs in Jacobian coordinates with a 4-bit window,
plus precomputed tables for the two fixed bases (the generator and the
second, independent generator used for fragment commitments). Constant-time
behaviour beyond what Python integers provide is out of scope.
"""

from __future__ import annotations

import hashlib

from .errors import DeserializationError

# secp256k1 domain parameters
FIELD_PRIME = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F
CURVE_B = 7
ORDER = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
_GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
_GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8

SCALAR_SIZE = 32
POINT_SIZE = 33

_P = FIELD_PRIME
_SECOND_GENERATOR_SEED = b"ehrshare/pre/second-generator/v1"


def scalar_to_bytes(value: int) -> bytes:
    if not 0 <= value < ORDER:
        raise ValueError("scalar out of range")
    return value.to_bytes(SCALAR_SIZE, "big")


def scalar_from_bytes(data: bytes) -> int:
    if len(data) != SCALAR_SIZE:
        raise DeserializationError("scalar must be exactly 32 bytes")
    value = int.from_bytes(data, "big")
    if value >= ORDER:
        raise DeserializationError("scalar not canonical (>= group order)")
    return value


# --- Jacobian internals -----------------------------------------------------
# A Jacobian point is (X, Y, Z) with x = X/Z^2, y = Y/Z^3; None is infinity.


def _jac_double(pt):
    if pt is None:
        return None
    x1, y1, z1 = pt
    if y1 == 0:
        return None
    yy = y1 * y1 % _P
    s = 4 * x1 * yy % _P
    m = 3 * x1 * x1 % _P  # curve a-coefficient is zero
    x3 = (m * m - 2 * s) % _P
    y3 = (m * (s - x3) - 8 * yy * yy) % _P
    z3 = 2 * y1 * z1 % _P
    return x3, y3, z3


def _jac_add(p, q):
    if p is None:
        return q
    if q is None:
        return p
    x1, y1, z1 = p
    x2, y2, z2 = q
    z1z1 = z1 * z1 % _P
    z2z2 = z2 * z2 % _P
    u1 = x1 * z2z2 % _P
    u2 = x2 * z1z1 % _P
    s1 = y1 * z2 * z2z2 % _P
    s2 = y2 * z1 * z1z1 % _P
    if u1 == u2:
        if s1 != s2:
            return None
        return _jac_double(p)
    h = (u2 - u1) % _P
    r = (s2 - s1) % _P
    hh = h * h % _P
    hhh = h * hh % _P
    v = u1 * hh % _P
    x3 = (r * r - hhh - 2 * v) % _P
    y3 = (r * (v - x3) - s1 * hhh) % _P
    z3 = z1 * z2 * h % _P
    return x3, y3, z3


def _jac_from_affine(affine):
    if affine is None:
        return None
    return affine[0], affine[1], 1


def _jac_to_affine(pt):
    if pt is None:
        return None
    x, y, z = pt
    z_inv = pow(z, _P - 2, _P)
    z_inv2 = z_inv * z_inv % _P
    return x * z_inv2 % _P, y * z_inv2 * z_inv % _P


def _jac_scalar_mult(k: int, affine):
    """k * point with a per-call 4-bit window; affine in, Jacobian out."""
    k %= ORDER
    if k == 0 or affine is None:
        return None
    base = _jac_from_affine(affine)
    table = [None, base]
    for i in range(2, 16):
        table.append(_jac_add(table[i - 1], base))
    acc = None
    for shift in range((k.bit_length() + 3) // 4 * 4 - 4, -1, -4):
        if acc is not None:
            acc = _jac_double(_jac_double(_jac_double(_jac_double(acc))))
        nibble = (k >> shift) & 0xF
        if nibble:
            acc = _jac_add(acc, table[nibble])
    return acc


def _build_fixed_base_table(affine):
    """table[w][d-1] = (d << 4w) * point for the comb multiplication."""
    table = []
    window_base = _jac_from_affine(affine)
    for _ in range(64):
        row = [window_base]
        for _ in range(14):
            row.append(_jac_add(row[-1], window_base))
        table.append(row)
        window_base = _jac_double(_jac_double(_jac_double(_jac_double(row[0]))))
    return table


def _fixed_base_mult(k: int, table):
    k %= ORDER
    if k == 0:
        return None
    acc = None
    window = 0
    while k:
        nibble = k & 0xF
        if nibble:
            acc = _jac_add(acc, table[window][nibble - 1])
        k >>= 4
        window += 1
    return acc


def _sqrt_mod_p(value: int) -> int | None:
    # p ≡ 3 (mod 4) so a single exponentiation computes the square root.
    root = pow(value, (_P + 1) // 4, _P)
    if root * root % _P != value:
        return None
    return root


# --- Public point type ------------------------------------------------------


class Point:
    """An element of the prime-order group, or the identity.

    Instances are immutable and safe to share between threads. The identity
    has no serialized form: decoding only ever yields non-identity points,
    and ``to_bytes`` on the identity raises ``ValueError``.
    """

    __slots__ = ("_x", "_y", "_table", "_encoded")

    def __init__(self, x: int | None, y: int | None, *, _unchecked: bool = False):
        if x is None or y is None:
            if x is not None or y is not None:
                raise ValueError("identity must have both coordinates unset")
        elif not _unchecked and not _is_on_curve(x, y):
            raise ValueError("coordinates are not on the curve")
        object.__setattr__(self, "_x", x)
        object.__setattr__(self, "_y", y)
        object.__setattr__(self, "_table", None)
        object.__setattr__(self, "_encoded", None)

    def __setattr__(self, name, value):
        raise AttributeError("Point is immutable")

    @property
    def x(self) -> int | None:
        return self._x

    @property
    def y(self) -> int | None:
        return self._y

    @property
    def is_identity(self) -> bool:
        return self._x is None

    def _affine(self):
        if self._x is None:
            return None
        return self._x, self._y

    @classmethod
    def _from_affine(cls, affine) -> "Point":
        if affine is None:
            return IDENTITY
        return cls(affine[0], affine[1], _unchecked=True)

    def __add__(self, other: "Point") -> "Point":
        if not isinstance(other, Point):
            return NotImplemented
        result = _jac_add(_jac_from_affine(self._affine()), _jac_from_affine(other._affine()))
        return Point._from_affine(_jac_to_affine(result))

    def __neg__(self) -> "Point":
        if self._x is None:
            return self
        return Point(self._x, (-self._y) % _P, _unchecked=True)

    def __mul__(self, scalar: int) -> "Point":
        if not isinstance(scalar, int):
            return NotImplemented
        if self._table is not None:
            return Point._from_affine(_jac_to_affine(_fixed_base_mult(scalar, self._table)))
        return Point._from_affine(_jac_to_affine(_jac_scalar_mult(scalar, self._affine())))

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, Point):
            return NotImplemented
        return self._x == other._x and self._y == other._y

    def __hash__(self) -> int:
        return hash((self._x, self._y))

    def __repr__(self) -> str:
        if self.is_identity:
            return "Point(identity)"
        return f"Point(x={self._x:#x})"

    def to_bytes(self) -> bytes:
        if self._x is None:
            raise ValueError("the identity point has no serialized form")
        if self._encoded is None:
            prefix = b"\x03" if self._y & 1 else b"\x02"
            object.__setattr__(self, "_encoded", prefix + self._x.to_bytes(32, "big"))
        return self._encoded

    @classmethod
    def from_bytes(cls, data: bytes) -> "Point":
        if len(data) != POINT_SIZE:
            raise DeserializationError("point must be exactly 33 bytes")
        prefix = data[0]
        if prefix not in (2, 3):
            raise DeserializationError("unsupported point prefix")
        x = int.from_bytes(data[1:], "big")
        if x >= _P:
            raise DeserializationError("point x-coordinate out of field range")
        y = _sqrt_mod_p((pow(x, 3, _P) + CURVE_B) % _P)
        if y is None:
            raise DeserializationError("point is not on the curve")
        if (y & 1) != (prefix & 1):
            y = _P - y
        return cls(x, y, _unchecked=True)

    def _attach_table(self) -> None:
        object.__setattr__(self, "_table", _build_fixed_base_table(self._affine()))


def _is_on_curve(x: int, y: int) -> bool:
    if not (0 <= x < _P and 0 <= y < _P):
        return False
    return (y * y - pow(x, 3, _P) - CURVE_B) % _P == 0


def _derive_second_generator() -> Point:
    """Nothing-up-my-sleeve second base: hash-to-curve by try-and-increment.

    No party knows its discrete log relative to the generator, which the
    fragment-commitment binding relies on.
    """
    counter = 0
    while True:
        digest = hashlib.sha256(_SECOND_GENERATOR_SEED + counter.to_bytes(4, "big")).digest()
        x = int.from_bytes(digest, "big") % _P
        y = _sqrt_mod_p((pow(x, 3, _P) + CURVE_B) % _P)
        if y is not None and (x, y) != (_GX, _GY):
            return Point(x, y if y % 2 == 0 else _P - y, _unchecked=True)
        counter += 1


IDENTITY = Point(None, None)
GENERATOR = Point(_GX, _GY)
SECOND_GENERATOR = _derive_second_generator()

GENERATOR._attach_table()
SECOND_GENERATOR._attach_table()
