"""Attacks on the four association protocols.

Every attack drives the *unmodified* honest state machine of the victim
through :func:`wbanlab.harness.drive`; the adversary is a separate endpoint
(``label = "M"``) that builds its frames from the public key-schedule
helpers in :mod:`wbanlab.protocols`.  Success is mechanical: the adversary's
master key equals the victim's bit for bit, or the recovered password is the
one the victim used.

The impersonation entry points accept a victim in either role.  Passing the
responder makes M pose as the node A; passing the initiator is the mirrored
scenario where M poses as the hub B.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from wbanlab import curve
from wbanlab.curve import CurvePoint, KeyPair
from wbanlab.frames import ZERO_MAC, AssociationControl, Frame, SecuritySuiteSelector
from wbanlab.harness import AdversaryHooks, Party, Transcript, drive
from wbanlab.mac_kdf import password_to_integer
from wbanlab.protocols import (
    VARIANT_NAMES,
    DisplayPanel,
    PartyConfig,
    Role,
    commitment,
    derive_mk,
    dh_key,
    display_value,
    mk_from_dh,
    parse_variant,
    password_point,
    split_dh,
    tag_t2,
    tag_t3,
)
from wbanlab.rng import RandomSource

_RESAMPLE_LIMIT = 64


class IncompleteTranscript(ValueError):
    pass


class NotInDictionary(LookupError):
    pass


class UnsupportedCombination(ValueError):
    pass


@dataclass
class AttackOutcome:
    scenario: str
    succeeded: bool
    adversary_mk: bytes | None = None
    honest_mk: bytes | None = None
    recovered_secret: str | int | None = None
    transcript: Transcript = field(default_factory=Transcript)
    victim_status: str | None = None
    displays: tuple[int, int] | None = None
    elapsed_s: float = 0.0

    def to_record(self, *, timing: bool = False) -> dict:
        rec = {
            "scenario": self.scenario,
            "succeeded": self.succeeded,
            "adversary_mk": self.adversary_mk.hex() if self.adversary_mk else None,
            "honest_mk": self.honest_mk.hex() if self.honest_mk else None,
            "recovered_secret": self.recovered_secret,
            "victim_status": self.victim_status,
            "frames": len(self.transcript),
        }
        if self.displays is not None:
            rec["displays"] = list(self.displays)
        if timing:
            rec["wall_time_s"] = round(self.elapsed_s, 6)
        return rec


@dataclass(frozen=True)
class _Context:
    variant: int
    id_a: int
    id_b: int
    sss: SecuritySuiteSelector

    @classmethod
    def of(cls, cfg: PartyConfig) -> "_Context":
        return cls(cfg.variant, cfg.id_a, cfg.id_b, cfg.sss)

    def frame(self, to_b: bool, seq: int, nonce: bytes, pk: CurvePoint | None, mac=ZERO_MAC) -> Frame:
        return Frame(
            recipient_id=self.id_b if to_b else self.id_a,
            sender_id=self.id_a if to_b else self.id_b,
            sss=self.sss,
            ac=AssociationControl(sequence_number=seq),
            nonce_field=nonce,
            pk_x=0 if pk is None else pk.x,
            pk_y=0 if pk is None else pk.y,
            mac_field=mac,
        )


class _Adversary:
    """Shared endpoint plumbing; ``state`` is a plain string."""

    label = "M"

    def __init__(self):
        self.state = "fresh"
        self.mk: bytes | None = None

    @property
    def finished(self) -> bool:
        return self.state in ("done", "failed")

    @property
    def halted(self) -> bool:
        return self.state == "failed"

    @property
    def status(self) -> str:
        return self.state


class ForgedInitiator(_Adversary):
    """M in the node's seat, with a key pair of its own choosing.

    ``mask`` is subtracted from the advertised key in frame 1 (Protocol III,
    where M uses the recovered Q' in place of Q(PW)).  In Protocol IV the
    nonce slot carries M's commitment W_M and frame 4 reveals N_M.
    """

    def __init__(self, ctx: _Context, rng: RandomSource, *, mask: CurvePoint | None = None,
                 display: DisplayPanel | None = None):
        super().__init__()
        self.ctx, self.rng, self.mask, self.display = ctx, rng, mask, display
        self.keys: KeyPair | None = None

    @property
    def wants_tick(self) -> bool:
        return self.state == "fresh"

    def handle(self, frame: Frame | None) -> Frame | None:
        ctx = self.ctx
        if frame is None:
            self.keys, advertised = self._pick_keys()
            self.n_m = self.rng.token_bytes(16)
            slot = self.n_m
            if ctx.variant == 4:
                self.w_m = commitment(self.n_m, ctx.id_a, ctx.id_b, self.keys.pk)
                slot = self.w_m
            self.state = "sent1"
            return ctx.frame(True, 1, slot, advertised)
        if frame.seq == 2:
            self.n_b = frame.nonce_field
            pk_b = CurvePoint(frame.pk_x, frame.pk_y)
            self.dh = dh_key(self.keys.sk, pk_b)
            self.t1, self.t4 = split_dh(self.dh)
            first = self.w_m if ctx.variant == 4 else self.n_m
            self.t2 = tag_t2(self.t1, ctx.id_a, ctx.id_b, first, self.n_b, ctx.sss)
            self.t3 = tag_t3(self.t1, ctx.id_a, ctx.id_b, first, self.n_b, ctx.sss)
            return None
        if frame.seq == 3:
            # a bad T2 means M's key is wrong, but sending frame 4 costs nothing;
            # success is judged by the victim's MK
            self.t2_ok = frame.mac_field == self.t2
            self.mk = derive_mk(self.t4, self.n_m, self.n_b)
            if ctx.variant == 4 and self.display is not None:
                self.display.show(Role.INITIATOR, display_value(self.n_m, self.n_b, self.t1))
            self.state = "done"
            return ctx.frame(True, 4, self.n_m, self.keys.pk, self.t3)
        return None

    def _pick_keys(self):
        for _ in range(_RESAMPLE_LIMIT):
            keys = curve.generate_keypair(self.rng)
            if self.mask is None:
                return keys, keys.pk
            advertised = curve.point_sub(keys.pk, self.mask)
            if not advertised.is_infinity:
                return keys, advertised
        raise RuntimeError("could not find a key pair with a finite masked key")


class ForgedResponder(_Adversary):
    """M in the hub's seat.

    ``advertised`` is the public key M sends in frames 2 and 3.  ``secret``
    is the scalar M multiplies with ``dh_point`` to get the DH key; when
    ``dh_point`` is None the initiator's (possibly unmasked) key is used.
    """

    def __init__(self, ctx: _Context, rng: RandomSource, *, advertised: CurvePoint, secret: int,
                 dh_point: CurvePoint | None = None, unmask: CurvePoint | None = None,
                 display: DisplayPanel | None = None):
        super().__init__()
        self.ctx, self.rng, self.display = ctx, rng, display
        self.advertised, self.secret = advertised, secret
        self.dh_point, self.unmask = dh_point, unmask

    @property
    def wants_tick(self) -> bool:
        return self.state == "sent2"

    def handle(self, frame: Frame | None) -> Frame | None:
        ctx = self.ctx
        if frame is None:
            first = self.w_a if ctx.variant == 4 else self.n_a
            self.t2 = tag_t2(self.t1, ctx.id_a, ctx.id_b, first, self.n_m, ctx.sss)
            self.t3 = tag_t3(self.t1, ctx.id_a, ctx.id_b, first, self.n_m, ctx.sss)
            self.state = "sent3"
            return ctx.frame(False, 3, self.n_m, self.advertised, self.t2)
        if frame.seq == 1:
            if ctx.variant == 4:
                self.w_a, self.n_a = frame.nonce_field, None
            else:
                self.n_a = frame.nonce_field
            point = self.dh_point
            if point is None:
                point = CurvePoint(frame.pk_x, frame.pk_y)
                if self.unmask is not None:
                    point = curve.point_add(point, self.unmask)
            self.dh = dh_key(self.secret, point)
            self.t1, self.t4 = split_dh(self.dh)
            self.n_m = self.rng.token_bytes(16)
            self.state = "sent2"
            return ctx.frame(False, 2, self.n_m, self.advertised)
        if frame.seq == 4:
            if frame.mac_field != self.t3:
                self.state = "failed"
                return None
            n_a = frame.nonce_field if ctx.variant == 4 else self.n_a
            self.mk = derive_mk(self.t4, n_a, self.n_m)
            if ctx.variant == 4 and self.display is not None:
                self.display.show(Role.RESPONDER, display_value(n_a, self.n_m, self.t1))
            self.state = "done"
        return None


def _run(scenario: str, victim_cfg: PartyConfig, make_adversary, rng, hooks) -> AttackOutcome:
    start = time.perf_counter()
    panel = None
    if victim_cfg.variant == 4:
        panel = DisplayPanel()
        victim_cfg = replace(victim_cfg, display=panel)
    adversary = make_adversary(_Context.of(victim_cfg), panel)
    if victim_cfg.role is Role.RESPONDER:
        victim = Party(victim_cfg, rng, "B")
        transcript = drive(adversary, victim, hooks)
    else:
        victim = Party(victim_cfg, rng, "A")
        transcript = drive(victim, adversary, hooks)
    displays = None
    if panel is not None and len(panel.shown) == 2:
        displays = (panel.shown[Role.INITIATOR].value, panel.shown[Role.RESPONDER].value)
    return AttackOutcome(
        scenario=scenario,
        succeeded=adversary.mk is not None and adversary.mk == victim.mk,
        adversary_mk=adversary.mk,
        honest_mk=victim.mk,
        transcript=transcript,
        victim_status=victim.status,
        displays=displays,
        elapsed_s=time.perf_counter() - start,
    )


def _impersonate(scenario, victim: PartyConfig, rng, *, q_prime=None, hooks=None):
    def make(ctx, panel):
        if victim.role is Role.RESPONDER:
            return ForgedInitiator(ctx, rng, mask=q_prime, display=panel)
        keys = curve.generate_keypair(rng)
        return ForgedResponder(ctx, rng, advertised=keys.pk, secret=keys.sk, unmask=q_prime, display=panel)

    return _run(scenario, victim, make, rng, hooks)


def impersonate_p1(victim: PartyConfig, rng: RandomSource, *, hooks: AdversaryHooks | None = None) -> AttackOutcome:
    """M completes Protocol I with the victim using nothing but public identities."""
    if victim.variant != 1:
        raise ValueError("victim does not run Protocol I")
    return _impersonate("impersonate_p1", victim, rng, hooks=hooks)


def impersonate_p3(q_prime: CurvePoint, victim: PartyConfig, rng: RandomSource, *,
                   hooks: AdversaryHooks | None = None) -> AttackOutcome:
    """M masks (or unmasks) with the recovered Q' instead of the unknown password."""
    if victim.variant != 3:
        raise ValueError("victim does not run Protocol III")
    return _impersonate("impersonate_p3", victim, rng, q_prime=q_prime, hooks=hooks)


def impersonate_p4(victim: PartyConfig, rng: RandomSource, *, hooks: AdversaryHooks | None = None) -> AttackOutcome:
    """M commits to its own key and nonce; both displays then show the same number."""
    if victim.variant != 4:
        raise ValueError("victim does not run Protocol IV")
    return _impersonate("impersonate_p4", victim, rng, hooks=hooks)


def kci_p2(compromised_sk_a: int, known_pk_b: CurvePoint, victim_a: PartyConfig, rng: RandomSource, *,
           dh_pk_b: CurvePoint | None = None, hooks: AdversaryHooks | None = None) -> AttackOutcome:
    """Key-compromise impersonation of the hub toward node A in Protocol II.

    M advertises ``known_pk_b`` and computes ``X(SK_A * PK_B)``, the value A
    itself will compute.  ``dh_pk_b`` lets a test feed M a different point
    for its own computation than the one it advertises.
    """
    if victim_a.variant != 2 or victim_a.role is not Role.INITIATOR:
        raise ValueError("victim must be a Protocol II initiator")

    def make(ctx, panel):
        return ForgedResponder(
            ctx, rng, advertised=known_pk_b, secret=compromised_sk_a,
            dh_point=dh_pk_b if dh_pk_b is not None else known_pk_b,
        )

    return _run("kci_p2", victim_a, make, rng, hooks)


def _association_frames(t: Transcript, variant: int) -> dict[int, Frame]:
    frames = {}
    for seq in (1, 2, 3, 4):
        f = t.find(seq)
        if f is None:
            raise IncompleteTranscript(f"frame {seq} missing")
        if f.sss.protocol_id != variant:
            raise IncompleteTranscript(f"frame {seq} is not a Protocol {VARIANT_NAMES[variant]} frame")
        frames[seq] = f
    return frames


def recover_q_prime(t: Transcript) -> CurvePoint:
    """Q' = PK_A - PK'_A from frames 1 and 4 of an eavesdropped Protocol III run."""
    frames = _association_frames(t, 3)
    masked = CurvePoint(frames[1].pk_x, frames[1].pk_y)
    clear = CurvePoint(frames[4].pk_x, frames[4].pk_y)
    return curve.point_sub(clear, masked)


def dictionary_p3(t: Transcript, dictionary, *, verify_points: bool = False) -> AttackOutcome:
    """Offline dictionary attack on one Protocol III transcript.

    The verifier is ``Q_X >> 32``, which equals the password integer because
    the point map only searches the low 32 bits.  ``verify_points`` also
    recomputes the full point for the match as a cross-check.
    """
    start = time.perf_counter()
    q = recover_q_prime(t)
    target = q.x >> curve.PASSWORD_SHIFT
    for candidate in dictionary:
        if not candidate:
            continue
        if password_to_integer(candidate) != target:
            continue
        if verify_points and curve.map_password_to_point(target) != q:
            continue
        return AttackOutcome(
            scenario="dictionary_p3",
            succeeded=True,
            recovered_secret=candidate,
            transcript=t,
            elapsed_s=time.perf_counter() - start,
        )
    raise NotInDictionary("no dictionary word maps to the recovered point")


def break_forward_secrecy(variant, t: Transcript, compromised_sk: int, whose: str, *,
                          password: str | None = None, session_mk: bytes | None = None) -> AttackOutcome:
    """Recompute a past session's MK from its transcript and one static key.

    Success is judged against ``session_mk`` when given; otherwise by
    recomputing T2 from the recovered DH key and matching it against the T2
    carried in frame 3 of the transcript.
    """
    start = time.perf_counter()
    variant = parse_variant(variant)
    whose = whose.upper()
    if whose not in ("A", "B"):
        raise ValueError("whose must be 'A' or 'B'")
    if variant == 2 and whose == "B":
        raise UnsupportedCombination("Protocol II never puts PK_A on the wire")
    f = _association_frames(t, variant)
    n_a, n_b = f[4].nonce_field, f[2].nonce_field
    if whose == "A":
        peer = CurvePoint(f[2].pk_x, f[2].pk_y)
    elif variant == 3:
        # frame 4 carries PK_A unmasked; a known password lets us cross-check via frame 1
        peer = CurvePoint(f[4].pk_x, f[4].pk_y)
        if password is not None:
            unmasked = curve.point_add(CurvePoint(f[1].pk_x, f[1].pk_y), password_point(password))
            if unmasked != peer:
                raise ValueError("password does not unmask frame 1 to the frame 4 key")
    else:
        peer = CurvePoint(f[1].pk_x, f[1].pk_y)
    dh = dh_key(compromised_sk, peer)
    mk = mk_from_dh(dh, n_a, n_b)
    if session_mk is not None:
        ok = mk == session_mk
    else:
        t1, _ = split_dh(dh)
        first = f[1].nonce_field if variant == 4 else n_a
        ok = tag_t2(t1, f[1].sender_id, f[1].recipient_id, first, n_b, f[1].sss) == f[3].mac_field
    return AttackOutcome(
        scenario=f"forward_secrecy_{VARIANT_NAMES[variant]}_{whose}",
        succeeded=ok,
        adversary_mk=mk,
        honest_mk=session_mk,
        transcript=t,
        elapsed_s=time.perf_counter() - start,
    )


def load_dictionary(path) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    return [w for w in (line.rstrip("\r\n") for line in text.splitlines()) if w]


def synthetic_dictionary(size: int, rng: RandomSource, *, min_len: int = 5, max_len: int = 10) -> list[str]:
    """``size`` distinct lowercase words, deterministic for a seeded rng."""
    alphabet = "abcdefghijklmnopqrstuvwxyz0123456789"
    seen: set[str] = set()
    words = []
    while len(words) < size:
        n = min_len + rng.randbelow(max_len - min_len + 1)
        w = "".join(alphabet[rng.randbelow(len(alphabet))] for _ in range(n))
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words
