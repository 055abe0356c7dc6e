"""Initiator and responder state machines for association Protocols I-IV.

A session advances only through :func:`step`, which consumes one incoming
frame (or a ``None`` tick when the party has something to send on its own)
and returns the next :class:`SessionState` plus at most one outgoing frame.

Message flow shared by all four variants::

    1  A -> B   N_A | PK_A          (II: zeros, III: PK_A - Q(PW), IV: W_A in the nonce slot)
    2  B -> A   N_B | PK_B
    3  B -> A   N_B | PK_B | T2
    4  A -> B   N_A | PK_A | T3     (II: zeros)

Both ends then derive ``MK = CMAC(LMB128(DH), N_A || N_B, 128)``.  Protocol
IV additionally gates acceptance on a human comparing two 16-bit displays,
modelled by a shared :class:`DisplayPanel`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from wbanlab import curve
from wbanlab.curve import CurvePoint, InvalidPublicKey, KeyPair
from wbanlab.frames import (
    ZERO_MAC,
    AssociationControl,
    Frame,
    FrameError,
    SecuritySuiteSelector,
    decode_frame,
)
from wbanlab.mac_kdf import bs2di, cmac, lmb, password_to_integer, rmb
from wbanlab.rng import RandomSource

VARIANT_NAMES = {1: "I", 2: "II", 3: "III", 4: "IV"}
DEFAULT_ID_A = 0x000000000000A11C
DEFAULT_ID_B = 0x000000000000B0B0

_KEYGEN_ATTEMPTS = 64


def parse_variant(v) -> int:
    if isinstance(v, int) and v in VARIANT_NAMES:
        return v
    for num, name in VARIANT_NAMES.items():
        if str(v).upper() in (name, str(num)):
            return num
    raise ValueError(f"unknown protocol variant {v!r}")


class Role(str, enum.Enum):
    INITIATOR = "initiator"
    RESPONDER = "responder"


class Step(str, enum.Enum):
    FRESH = "fresh"
    SENT1 = "sent1"
    GOT2 = "got2"
    SENT2 = "sent2"
    SENT3 = "sent3"
    AWAITING_DISPLAY = "awaiting_display"
    CONFIRMED = "confirmed"
    HALTED = "halted"


class Halt:
    MAC_MISMATCH = "mac_mismatch"
    COMMITMENT_MISMATCH = "commitment_mismatch"
    INVALID_PUBLIC_KEY = "invalid_public_key"
    BAD_SEQUENCE = "bad_sequence"
    PROTOCOL_MISMATCH = "protocol_mismatch"
    WRONG_ADDRESS = "wrong_address"
    UNEXPECTED_FRAME = "unexpected_frame"
    DISPLAY_MISMATCH = "display_mismatch"
    FIELD_MISMATCH = "field_mismatch"
    MALFORMED_FRAME = "malformed_frame"


class ProtocolError(RuntimeError):
    """Misuse of the state machine (not a protocol-level halt)."""


@dataclass(frozen=True)
class DisplayValue:
    value: int

    def __post_init__(self):
        if not 0 <= self.value <= 0xFFFF:
            raise ValueError("display value out of 16-bit range")

    @property
    def digits(self) -> str:
        return str(self.value)


def confirm_displays(a: DisplayValue, b: DisplayValue) -> bool:
    """The human comparison step: accept iff both displays read the same."""
    return a.value == b.value


class DisplayPanel:
    """Stands in for the user looking at both devices in a Protocol IV run."""

    def __init__(self):
        self.shown: dict[Role, DisplayValue] = {}

    def show(self, role: Role, value: DisplayValue):
        self.shown[role] = value

    def verdict(self) -> bool | None:
        if len(self.shown) < 2:
            return None
        return confirm_displays(self.shown[Role.INITIATOR], self.shown[Role.RESPONDER])


@dataclass(frozen=True)
class PartyConfig:
    role: Role
    my_id: int
    peer_id: int
    static_keys: KeyPair
    variant: int
    sss: SecuritySuiteSelector | None = None
    peer_pk: CurvePoint | None = None
    password: str | None = None
    display: DisplayPanel | None = field(default=None, compare=False)
    full_validation: bool = False

    def __post_init__(self):
        object.__setattr__(self, "variant", parse_variant(self.variant))
        object.__setattr__(self, "role", Role(self.role))
        if self.sss is None:
            object.__setattr__(self, "sss", SecuritySuiteSelector(protocol_id=self.variant))
        if self.sss.protocol_id != self.variant:
            raise ValueError("SSS protocol id does not match the variant")
        if self.variant == 2 and self.role is Role.RESPONDER:
            if self.peer_pk is None:
                raise ValueError("Protocol II responder needs the initiator's public key")
            curve.validate_public_key(self.peer_pk)
        if self.variant == 3:
            if not self.password:
                raise ValueError("Protocol III needs a shared password")
            if self.role is Role.INITIATOR:
                q = password_point(self.password)
                if self.static_keys.pk.x == q.x:
                    raise ValueError("Protocol III initiator key shares its X-coordinate with Q(PW)")

    @property
    def id_a(self) -> int:
        return self.my_id if self.role is Role.INITIATOR else self.peer_id

    @property
    def id_b(self) -> int:
        return self.peer_id if self.role is Role.INITIATOR else self.my_id


@dataclass(frozen=True)
class SessionState:
    role: Role
    variant: int
    step: Step = Step.FRESH
    halt_reason: str | None = None
    halt_detail: str | None = None
    seq: int = 0
    nonce_mine: bytes | None = None
    nonce_peer: bytes | None = None
    peer_pk: CurvePoint | None = None
    dh_key_x: int | None = None
    t1: bytes | None = None
    t2: bytes | None = None
    t3: bytes | None = None
    t4: bytes | None = None
    commitment: bytes | None = None
    display: DisplayValue | None = None
    mk: bytes | None = None

    @property
    def confirmed(self) -> bool:
        return self.step is Step.CONFIRMED

    @property
    def halted(self) -> bool:
        return self.step is Step.HALTED

    @property
    def finished(self) -> bool:
        return self.step in (Step.CONFIRMED, Step.HALTED)

    @property
    def status(self) -> str:
        if self.halted:
            return f"halted({self.halt_reason})"
        return self.step.value

    @property
    def n_a(self) -> bytes | None:
        return self.nonce_mine if self.role is Role.INITIATOR else self.nonce_peer

    @property
    def n_b(self) -> bytes | None:
        return self.nonce_peer if self.role is Role.INITIATOR else self.nonce_mine


def new_session(cfg: PartyConfig) -> SessionState:
    return SessionState(role=cfg.role, variant=cfg.variant)


# --- key schedule ---------------------------------------------------------

def password_point(password: str) -> CurvePoint:
    return curve.map_password_to_point(password_to_integer(password))


def dh_key(sk: int, peer_pk: CurvePoint) -> bytes:
    """X(sk * peer_pk) as 32 octets."""
    shared = curve.scalar_mul(sk, peer_pk)
    if shared.is_infinity:
        raise InvalidPublicKey(InvalidPublicKey.WRONG_ORDER)
    return shared.x.to_bytes(32, "big")


def split_dh(dh: bytes) -> tuple[bytes, bytes]:
    """(T1, T4): the rightmost and leftmost 128 bits of the DH key."""
    return bytes(rmb(dh, 128)), bytes(lmb(dh, 128))


def _ids(id_first: int, id_second: int) -> bytes:
    return id_first.to_bytes(8, "big") + id_second.to_bytes(8, "big")


def tag_t2(t1: bytes, id_a: int, id_b: int, first: bytes, n_b: bytes, sss: SecuritySuiteSelector) -> bytes:
    """``first`` is N_A, or W_A in Protocol IV."""
    return bytes(cmac(t1, _ids(id_a, id_b) + first + n_b + sss.encode(), 64))


def tag_t3(t1: bytes, id_a: int, id_b: int, first: bytes, n_b: bytes, sss: SecuritySuiteSelector) -> bytes:
    return bytes(cmac(t1, _ids(id_b, id_a) + n_b + first + sss.encode(), 64))


def derive_mk(t4: bytes, n_a: bytes, n_b: bytes) -> bytes:
    return bytes(cmac(t4, n_a + n_b, 128))


def mk_from_dh(dh: bytes, n_a: bytes, n_b: bytes) -> bytes:
    return derive_mk(split_dh(dh)[1], n_a, n_b)


def commitment(n_a: bytes, id_a: int, id_b: int, pk: CurvePoint) -> bytes:
    """W_A = CMAC(N_A, ID_A || ID_B || PK_X || PK_Y, 128)."""
    msg = _ids(id_a, id_b) + pk.x.to_bytes(32, "big") + pk.y.to_bytes(32, "big")
    return bytes(cmac(n_a, msg, 128))


def display_value(n_a: bytes, n_b: bytes, t1: bytes) -> DisplayValue:
    # The nominal key N_A || N_B is 256 bits; CMAC takes its leftmost 128, i.e. N_A.
    key = bytes(lmb(n_a + n_b, 128))
    d = cmac(key, n_b + n_a + t1, 16)
    return DisplayValue(bs2di(d))


def compute_display(st: SessionState) -> DisplayValue:
    if st.variant != 4:
        raise ProtocolError("displays exist only in Protocol IV")
    if st.n_a is None or st.n_b is None or st.t1 is None:
        raise ProtocolError("display needs both nonces and T1")
    return display_value(st.n_a, st.n_b, st.t1)


# --- key generation helpers -----------------------------------------------

def protocol3_keypair(password: str, rng: RandomSource) -> KeyPair:
    """Key pair whose X-coordinate differs from Q(PW), so PK - Q(PW) != O."""
    q = password_point(password)
    for _ in range(_KEYGEN_ATTEMPTS):
        kp = curve.generate_keypair(rng)
        if kp.pk.x != q.x:
            return kp
    raise RuntimeError("could not sample a Protocol III key pair")


def make_parties(
    variant,
    rng: RandomSource,
    *,
    password: str | None = None,
    id_a: int = DEFAULT_ID_A,
    id_b: int = DEFAULT_ID_B,
    keys_a: KeyPair | None = None,
    keys_b: KeyPair | None = None,
) -> tuple[PartyConfig, PartyConfig]:
    """Matching initiator/responder configs with freshly sampled static keys."""
    variant = parse_variant(variant)
    if keys_a is None:
        keys_a = protocol3_keypair(password, rng) if variant == 3 else curve.generate_keypair(rng)
    if keys_b is None:
        keys_b = curve.generate_keypair(rng)
    cfg_a = PartyConfig(Role.INITIATOR, id_a, id_b, keys_a, variant, password=password)
    cfg_b = PartyConfig(
        Role.RESPONDER,
        id_b,
        id_a,
        keys_b,
        variant,
        password=password,
        peer_pk=keys_a.pk if variant == 2 else None,
    )
    return cfg_a, cfg_b


# --- the state machine ----------------------------------------------------

_EXPECTED_SEQ = {
    (Role.INITIATOR, Step.SENT1): 2,
    (Role.INITIATOR, Step.GOT2): 3,
    (Role.RESPONDER, Step.FRESH): 1,
    (Role.RESPONDER, Step.SENT3): 4,
}


def needs_tick(st: SessionState) -> bool:
    """True when the party can act without an incoming frame."""
    return (
        (st.role is Role.INITIATOR and st.step is Step.FRESH)
        or (st.role is Role.RESPONDER and st.step is Step.SENT2)
        or st.step is Step.AWAITING_DISPLAY
    )


def _halt(st: SessionState, reason: str, detail: str | None = None):
    return (
        replace(st, step=Step.HALTED, halt_reason=reason, halt_detail=detail, mk=None, display=None),
        None,
    )


def _frame(cfg: PartyConfig, seq: int, nonce: bytes, pk: CurvePoint | None, mac: bytes = ZERO_MAC) -> Frame:
    return Frame(
        recipient_id=cfg.peer_id,
        sender_id=cfg.my_id,
        sss=cfg.sss,
        ac=AssociationControl(sequence_number=seq),
        nonce_field=nonce,
        pk_x=0 if pk is None else pk.x,
        pk_y=0 if pk is None else pk.y,
        mac_field=mac,
    )


def _validate(cfg: PartyConfig, x: int, y: int) -> CurvePoint:
    return curve.validate_public_key((x, y), full=cfg.full_validation)


def step(cfg: PartyConfig, st: SessionState, incoming: Frame | bytes | None, rng: RandomSource):
    """Advance one protocol step; returns ``(new_state, outgoing_frame_or_None)``.

    ``incoming`` is a decoded frame, raw octets off the wire, or ``None`` for
    a tick.  Receipt checks run in this order: sequence number, suite
    selector, addressing and status, public-key validation, the MAC, then
    consistency with values already received.
    """
    if st.finished:
        raise ProtocolError(f"session already {st.status}")
    if incoming is None:
        return _tick(cfg, st, rng)
    if isinstance(incoming, (bytes, bytearray)):
        try:
            incoming = decode_frame(bytes(incoming))
        except FrameError as exc:
            return _halt(st, Halt.MALFORMED_FRAME, exc.kind)

    expected = _EXPECTED_SEQ.get((cfg.role, st.step))
    if expected is None:
        return _halt(st, Halt.UNEXPECTED_FRAME, f"frame {incoming.seq} in state {st.step.value}")
    if incoming.seq != expected or incoming.seq != st.seq + 1:
        return _halt(st, Halt.BAD_SEQUENCE, f"got {incoming.seq}, expected {expected}")
    if incoming.sss != cfg.sss or not incoming.sss.is_well_formed():
        return _halt(st, Halt.PROTOCOL_MISMATCH)
    if incoming.recipient_id != cfg.my_id or incoming.sender_id != cfg.peer_id:
        return _halt(st, Halt.WRONG_ADDRESS)
    if incoming.ac.status != 0:
        return _halt(st, Halt.FIELD_MISMATCH, "association status")
    try:
        if cfg.role is Role.RESPONDER:
            if expected == 1:
                return _responder_frame1(cfg, st, incoming, rng)
            return _responder_frame4(cfg, st, incoming)
        if expected == 2:
            return _initiator_frame2(cfg, st, incoming)
        return _initiator_frame3(cfg, st, incoming)
    except InvalidPublicKey as exc:
        return _halt(st, Halt.INVALID_PUBLIC_KEY, exc.reason)


def _tick(cfg: PartyConfig, st: SessionState, rng: RandomSource):
    if st.step is Step.AWAITING_DISPLAY:
        return _settle_display(cfg, st)
    if cfg.role is Role.INITIATOR and st.step is Step.FRESH:
        return _initiator_start(cfg, st, rng)
    if cfg.role is Role.RESPONDER and st.step is Step.SENT2:
        return _responder_send3(cfg, st)
    raise ProtocolError(f"{cfg.role.value} has nothing to send in state {st.step.value}")


def _initiator_start(cfg, st, rng):
    n_a = rng.token_bytes(16)
    pk = cfg.static_keys.pk
    nonce_slot, w = n_a, None
    if cfg.variant == 2:
        pk = None
    elif cfg.variant == 3:
        pk = curve.point_sub(pk, password_point(cfg.password))
        if pk.is_infinity:
            raise ProtocolError("masked public key is the point at infinity")
    elif cfg.variant == 4:
        w = commitment(n_a, cfg.id_a, cfg.id_b, pk)
        nonce_slot = w
    out = _frame(cfg, 1, nonce_slot, pk)
    return replace(st, step=Step.SENT1, seq=1, nonce_mine=n_a, commitment=w), out


def _responder_frame1(cfg, st, f: Frame, rng):
    if cfg.variant == 2:
        if f.pk_x or f.pk_y:
            return _halt(st, Halt.FIELD_MISMATCH, "public key field must be zero")
        peer_pk = cfg.peer_pk
    elif cfg.variant == 3:
        masked = _validate(cfg, f.pk_x, f.pk_y)
        peer_pk = curve.point_add(masked, password_point(cfg.password))
        peer_pk = curve.validate_public_key(peer_pk, full=cfg.full_validation)
    else:
        peer_pk = _validate(cfg, f.pk_x, f.pk_y)
    if cfg.variant == 4:
        w, n_a = f.nonce_field, None
    else:
        w, n_a = None, f.nonce_field
    n_b = rng.token_bytes(16)
    out = _frame(cfg, 2, n_b, cfg.static_keys.pk)
    st = replace(
        st, step=Step.SENT2, seq=2, nonce_mine=n_b, nonce_peer=n_a, peer_pk=peer_pk, commitment=w
    )
    return st, out


def _first_slot(st: SessionState) -> bytes:
    return st.commitment if st.variant == 4 else st.n_a


def _with_tags(cfg, st, sk: int) -> SessionState:
    dh = dh_key(sk, st.peer_pk)
    t1, t4 = split_dh(dh)
    first = _first_slot(st)
    return replace(
        st,
        dh_key_x=int.from_bytes(dh, "big"),
        t1=t1,
        t4=t4,
        t2=tag_t2(t1, cfg.id_a, cfg.id_b, first, st.n_b, cfg.sss),
        t3=tag_t3(t1, cfg.id_a, cfg.id_b, first, st.n_b, cfg.sss),
    )


def _responder_send3(cfg, st):
    try:
        st = _with_tags(cfg, st, cfg.static_keys.sk)
    except InvalidPublicKey as exc:
        return _halt(st, Halt.INVALID_PUBLIC_KEY, exc.reason)
    out = _frame(cfg, 3, st.nonce_mine, cfg.static_keys.pk, st.t2)
    return replace(st, step=Step.SENT3, seq=3), out


def _initiator_frame2(cfg, st, f: Frame):
    peer_pk = _validate(cfg, f.pk_x, f.pk_y)
    st = replace(st, seq=2, nonce_peer=f.nonce_field, peer_pk=peer_pk)
    st = _with_tags(cfg, st, cfg.static_keys.sk)
    return replace(st, step=Step.GOT2), None


def _initiator_frame3(cfg, st, f: Frame):
    pk_b = _validate(cfg, f.pk_x, f.pk_y)
    if f.mac_field != st.t2:
        return _halt(st, Halt.MAC_MISMATCH, "T2")
    # T2 does not cover PK_B, so a resent key must match frame 2
    if pk_b != st.peer_pk or f.nonce_field != st.nonce_peer:
        return _halt(st, Halt.FIELD_MISMATCH, "frame 3 differs from frame 2")
    pk = None if cfg.variant == 2 else cfg.static_keys.pk
    out = _frame(cfg, 4, st.nonce_mine, pk, st.t3)
    st = replace(st, seq=4)
    return _finish(cfg, st), out


def _responder_frame4(cfg, st, f: Frame):
    pk_a = None
    if cfg.variant == 2:
        if f.pk_x or f.pk_y:
            return _halt(st, Halt.FIELD_MISMATCH, "public key field must be zero")
    else:
        pk_a = _validate(cfg, f.pk_x, f.pk_y)
    if f.mac_field != st.t3:
        return _halt(st, Halt.MAC_MISMATCH, "T3")
    # Protocol IV first reveals N_A here; its PK_A is bound by the commitment instead
    if cfg.variant != 4 and (f.nonce_field != st.nonce_peer or (pk_a is not None and pk_a != st.peer_pk)):
        return _halt(st, Halt.FIELD_MISMATCH, "frame 4 differs from frame 1")
    st = replace(st, seq=4)
    if cfg.variant == 4:
        n_a = f.nonce_field
        if commitment(n_a, cfg.id_a, cfg.id_b, pk_a) != st.commitment:
            return _halt(st, Halt.COMMITMENT_MISMATCH)
        st = replace(st, nonce_peer=n_a)
    return _finish(cfg, st), None


def _finish(cfg, st) -> SessionState:
    if cfg.variant != 4:
        return replace(st, step=Step.CONFIRMED, mk=derive_mk(st.t4, st.n_a, st.n_b))
    shown = compute_display(st)
    st = replace(st, display=shown, step=Step.AWAITING_DISPLAY)
    if cfg.display is not None:
        cfg.display.show(cfg.role, shown)
    state, _ = _settle_display(cfg, st)
    return state


def _settle_display(cfg, st):
    if cfg.display is None:
        raise ProtocolError("Protocol IV party has no display panel")
    verdict = cfg.display.verdict()
    if verdict is None:
        return st, None
    if not verdict:
        return _halt(st, Halt.DISPLAY_MISMATCH)
    return replace(st, step=Step.CONFIRMED, mk=derive_mk(st.t4, st.n_a, st.n_b)), None
