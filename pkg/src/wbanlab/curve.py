"""P-256 arithmetic, public-key validation and the password-to-point map.

Points are affine :class:`CurvePoint` values; the point at infinity is the
``INFINITY`` singleton.  Scalar multiplication runs in Jacobian coordinates
and is variable-time.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from wbanlab.rng import RandomSource

# FIPS 186 P-256 domain parameters
_P = 0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF
_A = _P - 3
_B = 0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B
_GX = 0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296
_GY = 0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5
_N = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551

PASSWORD_SHIFT = 32
_WINDOW = 1 << PASSWORD_SHIFT


@dataclass(frozen=True)
class CurvePoint:
    """Affine point; ``x is None`` marks the point at infinity."""

    x: int | None
    y: int | None

    @property
    def is_infinity(self) -> bool:
        return self.x is None

    def __repr__(self) -> str:
        if self.is_infinity:
            return "CurvePoint(O)"
        return f"CurvePoint(x=0x{self.x:064x}, y=0x{self.y:064x})"


INFINITY = CurvePoint(None, None)


@dataclass(frozen=True)
class CurveParams:
    p: int
    a: int
    b: int
    G: CurvePoint
    n: int
    h: int

    def contains(self, P: CurvePoint) -> bool:
        if P.is_infinity:
            return True
        return (P.y * P.y - (P.x * P.x * P.x + self.a * P.x + self.b)) % self.p == 0


P256 = CurveParams(p=_P, a=_A, b=_B, G=CurvePoint(_GX, _GY), n=_N, h=1)
G = P256.G


@dataclass(frozen=True)
class KeyPair:
    sk: int
    pk: CurvePoint


class InvalidPublicKey(ValueError):
    """Raised by :func:`validate_public_key`; ``reason`` says which check failed."""

    INFINITY = "infinity"
    OUT_OF_RANGE = "out_of_range"
    OFF_CURVE = "off_curve"
    WRONG_ORDER = "wrong_order"

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class NoPointInWindow(ValueError):
    pass


def point_negate(P: CurvePoint) -> CurvePoint:
    if P.is_infinity:
        return INFINITY
    return CurvePoint(P.x, (-P.y) % _P)


def point_add(P: CurvePoint, Q: CurvePoint) -> CurvePoint:
    if P.is_infinity:
        return Q
    if Q.is_infinity:
        return P
    if P.x == Q.x:
        if (P.y + Q.y) % _P == 0:
            return INFINITY
        lam = (3 * P.x * P.x + _A) * pow(2 * P.y, -1, _P) % _P
    else:
        lam = (Q.y - P.y) * pow(Q.x - P.x, -1, _P) % _P
    x = (lam * lam - P.x - Q.x) % _P
    y = (lam * (P.x - x) - P.y) % _P
    return CurvePoint(x, y)


def point_sub(P: CurvePoint, Q: CurvePoint) -> CurvePoint:
    return point_add(P, point_negate(Q))


# Jacobian (X, Y, Z) represents (X/Z^2, Y/Z^3); Z == 0 is infinity.

def _jdouble(X, Y, Z):
    if Z == 0 or Y == 0:
        return 1, 1, 0
    YY = Y * Y % _P
    S = 4 * X * YY % _P
    ZZ = Z * Z % _P
    # a = -3
    M = 3 * (X - ZZ) * (X + ZZ) % _P
    X3 = (M * M - 2 * S) % _P
    Y3 = (M * (S - X3) - 8 * YY * YY) % _P
    Z3 = 2 * Y * Z % _P
    return X3, Y3, Z3


def _jadd_affine(X1, Y1, Z1, x2, y2):
    if Z1 == 0:
        return x2, y2, 1
    Z1Z1 = Z1 * Z1 % _P
    U2 = x2 * Z1Z1 % _P
    S2 = y2 * Z1 * Z1Z1 % _P
    H = (U2 - X1) % _P
    r = (S2 - Y1) % _P
    if H == 0:
        if r == 0:
            return _jdouble(X1, Y1, Z1)
        return 1, 1, 0
    HH = H * H % _P
    HHH = H * HH % _P
    V = X1 * HH % _P
    X3 = (r * r - HHH - 2 * V) % _P
    Y3 = (r * (V - X3) - Y1 * HHH) % _P
    Z3 = Z1 * H % _P
    return X3, Y3, Z3


def scalar_mul(k: int, P: CurvePoint) -> CurvePoint:
    if k < 0:
        raise ValueError("scalar must be nonnegative")
    if k == 0 or P.is_infinity:
        return INFINITY
    X, Y, Z = 1, 1, 0
    for bit in bin(k)[2:]:
        X, Y, Z = _jdouble(X, Y, Z)
        if bit == "1":
            X, Y, Z = _jadd_affine(X, Y, Z, P.x, P.y)
    if Z == 0:
        return INFINITY
    zinv = pow(Z, -1, _P)
    zinv2 = zinv * zinv % _P
    return CurvePoint(X * zinv2 % _P, Y * zinv2 * zinv % _P)


def validate_public_key(candidate, *, full: bool = False) -> CurvePoint:
    """Return the candidate as a :class:`CurvePoint` or raise :class:`InvalidPublicKey`.

    ``candidate`` may be a CurvePoint, an ``(x, y)`` pair, ``None`` or the
    token ``"O"``.  The checks are: not infinity, coordinates in ``[0, p)``,
    curve equation.  ``full`` adds ``n * P == O``, which is implied for
    cofactor 1.
    """
    if candidate is None or candidate == "O":
        raise InvalidPublicKey(InvalidPublicKey.INFINITY)
    if isinstance(candidate, CurvePoint):
        if candidate.is_infinity:
            raise InvalidPublicKey(InvalidPublicKey.INFINITY)
        x, y = candidate.x, candidate.y
    else:
        x, y = candidate
    if not (0 <= x < _P and 0 <= y < _P):
        raise InvalidPublicKey(InvalidPublicKey.OUT_OF_RANGE)
    P = CurvePoint(x, y)
    if not P256.contains(P):
        raise InvalidPublicKey(InvalidPublicKey.OFF_CURVE)
    if full and not scalar_mul(_N, P).is_infinity:
        raise InvalidPublicKey(InvalidPublicKey.WRONG_ORDER)
    return P


def is_valid_public_key(candidate, *, full: bool = False) -> bool:
    try:
        validate_public_key(candidate, full=full)
    except InvalidPublicKey:
        return False
    return True


def sqrt_mod_p(v: int) -> int | None:
    """Square root in GF(p) via the p = 3 mod 4 shortcut, or None for a non-residue."""
    r = pow(v, (_P + 1) // 4, _P)
    return r if r * r % _P == v % _P else None


def curve_rhs(x: int) -> int:
    return (x * x * x + _A * x + _B) % _P


def map_password_to_point(pw: int) -> CurvePoint:
    """Map a password integer to Q(PW).

    ``Q_X = 2**32 * pw + m`` for the smallest ``m`` that lands on the curve;
    ``Q_Y`` is the even root.  Since ``m < 2**32``, ``Q_X >> 32 == pw``.
    """
    if pw <= 0 or (pw << PASSWORD_SHIFT) >= _P - _WINDOW:
        raise ValueError("password integer out of range for the point map")
    base = pw << PASSWORD_SHIFT
    for m in range(_WINDOW):
        x = base + m
        y = sqrt_mod_p(curve_rhs(x))
        # y == 0 would not give a positive even coordinate
        if y is None or y == 0:
            continue
        if y & 1:
            y = _P - y
        return CurvePoint(x, y)
    raise NoPointInWindow(pw)


def generate_keypair(rng: RandomSource) -> KeyPair:
    while True:
        sk = int.from_bytes(rng.token_bytes(32), "big")
        if 1 <= sk < _N:
            return KeyPair(sk, scalar_mul(sk, G))


def keypair_from_secret(sk: int) -> KeyPair:
    if not 1 <= sk < _N:
        raise ValueError("private key out of range")
    return KeyPair(sk, scalar_mul(sk, G))


def point_to_hex(P: CurvePoint) -> str | tuple[str, str]:
    if P.is_infinity:
        return "O"
    return f"{P.x:064x}", f"{P.y:064x}"


def point_from_hex(encoded) -> CurvePoint:
    if encoded == "O":
        return INFINITY
    xh, yh = encoded
    return CurvePoint(int(xh, 16), int(yh, 16))


def load_p256_multiples() -> list[tuple[int, CurvePoint]]:
    """Bundled ``(k, k*G)`` reference pairs."""
    text = resources.files("wbanlab.data").joinpath("p256_multiples.txt").read_text()
    out = []
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        k, x, y = (int(f, 16) for f in line.split())
        out.append((k, CurvePoint(x, y)))
    return out
