"""AES-CMAC with truncation, bit-string selectors and password encoding.

The AES block cipher comes from ``cryptography``; subkey generation, padding
and truncation follow NIST SP 800-38B and are done here.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

BLOCK = 16
_RB = 0x87
_ALLOWED_LENGTHS = (16, 64, 128)


@dataclass(frozen=True)
class BitString:
    """Bit sequence of explicit ``length``; ``value`` holds it big-endian."""

    value: int
    length: int

    def __post_init__(self):
        if self.length < 0 or self.value < 0 or self.value >> self.length:
            raise ValueError("value does not fit in the declared length")

    @classmethod
    def from_bytes(cls, data: bytes) -> "BitString":
        return cls(int.from_bytes(data, "big"), 8 * len(data))

    def __bytes__(self) -> bytes:
        if self.length % 8:
            raise ValueError("bit string is not byte-aligned")
        return self.value.to_bytes(self.length // 8, "big")

    def __add__(self, other: "BitString") -> "BitString":
        return BitString((self.value << other.length) | other.value, self.length + other.length)

    def __len__(self) -> int:
        return self.length

    def hex(self) -> str:
        return bytes(self).hex()


def _as_bits(s) -> BitString:
    return s if isinstance(s, BitString) else BitString.from_bytes(bytes(s))


def lmb(s, L: int) -> BitString:
    """Leftmost ``L`` bits."""
    s = _as_bits(s)
    if not 0 <= L <= s.length:
        raise ValueError(f"cannot take {L} bits of a {s.length}-bit string")
    return BitString(s.value >> (s.length - L), L)


def rmb(s, L: int) -> BitString:
    """Rightmost ``L`` bits."""
    s = _as_bits(s)
    if not 0 <= L <= s.length:
        raise ValueError(f"cannot take {L} bits of a {s.length}-bit string")
    return BitString(s.value & ((1 << L) - 1), L)


def bs2di(bs) -> int:
    bs = _as_bits(bs)
    if bs.length == 0:
        raise ValueError("empty bit string")
    return bs.value


def _dbl(block: int) -> int:
    block <<= 1
    if block >> 128:
        block = (block & ((1 << 128) - 1)) ^ _RB
    return block


def _xor(a: bytes, b: bytes) -> bytes:
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(len(a), "big")


def cmac_tag(key: bytes, message: bytes) -> bytes:
    """Full 128-bit AES-CMAC tag."""
    if len(key) != BLOCK:
        raise ValueError("CMAC key must be 128 bits")
    cipher = Cipher(algorithms.AES(key), modes.ECB())
    enc = cipher.encryptor()
    L = int.from_bytes(enc.update(bytes(BLOCK)), "big")
    k1 = _dbl(L)
    k2 = _dbl(k1)

    nblocks = max(1, -(-len(message) // BLOCK))
    head, last = message[: (nblocks - 1) * BLOCK], message[(nblocks - 1) * BLOCK :]
    if len(last) == BLOCK:
        last = _xor(last, k1.to_bytes(BLOCK, "big"))
    else:
        padded = last + b"\x80" + bytes(BLOCK - len(last) - 1)
        last = _xor(padded, k2.to_bytes(BLOCK, "big"))

    # CBC with a zero IV; the tag is the final ciphertext block
    cbc = Cipher(algorithms.AES(key), modes.CBC(bytes(BLOCK))).encryptor()
    out = cbc.update(head + last)
    return out[-BLOCK:]


def cmac(key, message, out_len: int) -> BitString:
    """``out_len``-bit CMAC: the leftmost bits of the 128-bit tag."""
    if out_len not in _ALLOWED_LENGTHS:
        raise ValueError(f"unsupported CMAC output length {out_len}")
    key = _as_bits(key)
    if key.length != 128:
        raise ValueError("CMAC key must be 128 bits")
    message = _as_bits(message)
    if message.length % 8:
        raise ValueError("sub-byte CMAC messages are not supported")
    tag = BitString.from_bytes(cmac_tag(bytes(key), bytes(message)))
    return lmb(tag, out_len)


def password_to_integer(pw: str) -> int:
    """UTF-16BE octets of ``pw`` read as a big-endian integer."""
    if not pw:
        raise ValueError("empty password")
    return int.from_bytes(pw.encode("utf-16-be"), "big")


def load_cmac_vectors() -> list[tuple[bytes, bytes, bytes]]:
    """Bundled reference vectors as ``(key, message, tag)`` triples."""
    text = resources.files("wbanlab.data").joinpath("cmac_vectors.txt").read_text()
    vectors = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        # an empty message is written as "-"
        key, msg, tag = (b"" if f == "-" else bytes.fromhex(f) for f in fields)
        vectors.append((key, msg, tag))
    return vectors
