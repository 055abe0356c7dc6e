"""Bit-exact codec for association frames.

Layout (108 octets)::

    recipient_id  8   big-endian
    sender_id     8   big-endian
    sss           2   control field, see below
    ac            2   control field, see below
    nonce_field  16
    pk_x         32   big-endian
    pk_y         32   big-endian
    mac_field     8

The two control fields use IEEE 802 bit numbering: the first listed subfield
occupies the lowest-order bits, and the 16-bit value is sent low octet first.
So the association sequence number sits in the low nibble of octet 18.
"""

from __future__ import annotations

from dataclasses import dataclass, field

FRAME_LEN = 108
ZERO_MAC = bytes(8)
ZERO_NONCE = bytes(16)

_ID_MAX = 1 << 64
_COORD_MAX = 1 << 256


class FrameError(ValueError):
    """``kind`` is one of ``bad_length``, ``reserved_nonzero``, ``invalid_field``."""

    def __init__(self, kind: str, detail: str = ""):
        super().__init__(f"{kind}: {detail}" if detail else kind)
        self.kind = kind


@dataclass(frozen=True)
class SecuritySuiteSelector:
    protocol_id: int
    security_level: int = 1
    control_frame_auth: int = 0
    cipher_function: int = 0
    reserved: int = 0

    def validate(self):
        """Bit-width and reserved-bit checks; all the codec enforces."""
        if not 0 <= self.protocol_id < 8:
            raise FrameError("invalid_field", f"protocol_id={self.protocol_id}")
        if not 0 <= self.security_level < 4:
            raise FrameError("invalid_field", f"security_level={self.security_level}")
        if self.control_frame_auth not in (0, 1):
            raise FrameError("invalid_field", "control_frame_auth")
        if not 0 <= self.cipher_function < 16:
            raise FrameError("invalid_field", "cipher_function")
        if not 0 <= self.reserved < 64:
            raise FrameError("invalid_field", "reserved")

    def is_well_formed(self) -> bool:
        """Values a protocol run accepts: variant I-IV, security level 0-2, reserved clear."""
        return (
            self.protocol_id in (1, 2, 3, 4)
            and self.security_level in (0, 1, 2)
            and self.reserved == 0
        )

    def encode(self) -> bytes:
        self.validate()
        v = (
            self.protocol_id
            | self.security_level << 3
            | self.control_frame_auth << 5
            | self.cipher_function << 6
            | self.reserved << 10
        )
        return v.to_bytes(2, "little")

    @classmethod
    def decode(cls, raw: bytes) -> "SecuritySuiteSelector":
        v = int.from_bytes(raw, "little")
        sss = cls(
            protocol_id=v & 0x7,
            security_level=(v >> 3) & 0x3,
            control_frame_auth=(v >> 5) & 0x1,
            cipher_function=(v >> 6) & 0xF,
            reserved=v >> 10,
        )
        if sss.reserved:
            raise FrameError("reserved_nonzero", "sss")
        return sss


@dataclass(frozen=True)
class AssociationControl:
    sequence_number: int
    status: int = 0
    reserved: int = 0

    def validate(self):
        if not 0 <= self.sequence_number < 16:
            raise FrameError("invalid_field", "sequence_number")
        if not 0 <= self.status < 16:
            raise FrameError("invalid_field", "status")
        if not 0 <= self.reserved < 256:
            raise FrameError("invalid_field", "reserved")

    def encode(self) -> bytes:
        self.validate()
        v = self.sequence_number | self.status << 4 | self.reserved << 8
        return v.to_bytes(2, "little")

    @classmethod
    def decode(cls, raw: bytes) -> "AssociationControl":
        v = int.from_bytes(raw, "little")
        if v >> 8:
            raise FrameError("reserved_nonzero", "ac")
        return cls(sequence_number=v & 0xF, status=(v >> 4) & 0xF)


@dataclass(frozen=True)
class Frame:
    recipient_id: int
    sender_id: int
    sss: SecuritySuiteSelector
    ac: AssociationControl
    nonce_field: bytes = ZERO_NONCE
    pk_x: int = 0
    pk_y: int = 0
    mac_field: bytes = field(default=ZERO_MAC)

    @property
    def seq(self) -> int:
        return self.ac.sequence_number

    def hex(self) -> str:
        return encode_frame(self).hex()


def encode_frame(f: Frame) -> bytes:
    for name in ("recipient_id", "sender_id"):
        if not 0 <= getattr(f, name) < _ID_MAX:
            raise FrameError("invalid_field", name)
    for name in ("pk_x", "pk_y"):
        if not 0 <= getattr(f, name) < _COORD_MAX:
            raise FrameError("invalid_field", name)
    if len(f.nonce_field) != 16:
        raise FrameError("invalid_field", "nonce_field")
    if len(f.mac_field) != 8:
        raise FrameError("invalid_field", "mac_field")
    return b"".join(
        (
            f.recipient_id.to_bytes(8, "big"),
            f.sender_id.to_bytes(8, "big"),
            f.sss.encode(),
            f.ac.encode(),
            bytes(f.nonce_field),
            f.pk_x.to_bytes(32, "big"),
            f.pk_y.to_bytes(32, "big"),
            bytes(f.mac_field),
        )
    )


def decode_frame(raw: bytes) -> Frame:
    if len(raw) != FRAME_LEN:
        raise FrameError("bad_length", f"{len(raw)} octets")
    return Frame(
        recipient_id=int.from_bytes(raw[0:8], "big"),
        sender_id=int.from_bytes(raw[8:16], "big"),
        sss=SecuritySuiteSelector.decode(raw[16:18]),
        ac=AssociationControl.decode(raw[18:20]),
        nonce_field=bytes(raw[20:36]),
        pk_x=int.from_bytes(raw[36:68], "big"),
        pk_y=int.from_bytes(raw[68:100], "big"),
        mac_field=bytes(raw[100:108]),
    )
