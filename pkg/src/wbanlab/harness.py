"""In-process channel between two endpoints, with adversary interception.

An endpoint is anything with ``label``, ``state``, ``finished``, ``halted``,
``wants_tick`` and ``handle(frame_or_None) -> frame_or_None``.  Honest
parties are :class:`Party`; the adversaries in :mod:`wbanlab.attacks`
implement the same surface.
"""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable

from wbanlab.frames import Frame, FrameError, decode_frame, encode_frame
from wbanlab.protocols import (
    VARIANT_NAMES,
    DisplayPanel,
    PartyConfig,
    SessionState,
    needs_tick,
    new_session,
    step,
)
from wbanlab.rng import RandomSource, SystemRng

FRAME_BUDGET = 16

DELIVERED = "delivered"
DROPPED = "dropped"
REPLACED = "replaced"


class BudgetExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class TranscriptEntry:
    """One frame seen on the channel, kept as the octets that were sent."""

    marker: str
    raw: bytes
    note: str = DELIVERED

    @property
    def frame(self) -> Frame:
        return decode_frame(self.raw)

    @property
    def decodes(self) -> bool:
        try:
            decode_frame(self.raw)
        except FrameError:
            return False
        return True

    @property
    def sender(self) -> str:
        return self.marker.split("→")[0]

    @property
    def receiver(self) -> str:
        return self.marker.split("→")[1]


_LINE = re.compile(r"^(?P<marker>\w+→\w+)(?: \[(?P<note>\w+)\])?:\s*(?P<hex>[0-9a-fA-F]+)$")


@dataclass
class Transcript:
    entries: list[TranscriptEntry] = field(default_factory=list)

    def record(self, marker: str, frame: Frame | bytes, note: str = DELIVERED):
        raw = bytes(frame) if isinstance(frame, (bytes, bytearray)) else encode_frame(frame)
        self.entries.append(TranscriptEntry(marker, raw, note))

    def delivered(self) -> list[Frame]:
        """Decodable frames as their receivers saw them."""
        return [e.frame for e in self.entries if e.note == DELIVERED and e.decodes]

    def find(self, seq: int) -> Frame | None:
        """First delivered frame carrying association sequence number ``seq``."""
        for f in self.delivered():
            if f.seq == seq:
                return f
        return None

    def __len__(self) -> int:
        return len(self.entries)

    def to_text(self) -> str:
        lines = []
        for e in self.entries:
            tag = "" if e.note == DELIVERED else f" [{e.note}]"
            lines.append(f"{e.marker}{tag}: {e.raw.hex()}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> "Transcript":
        t = cls()
        for n, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            m = _LINE.match(line)
            if m is None:
                raise ValueError(f"line {n}: not a transcript entry")
            t.record(m["marker"], bytes.fromhex(m["hex"]), m["note"] or DELIVERED)
        return t

    def to_records(self) -> list[dict]:
        return [
            {"direction": e.marker, "status": e.note, "frame": e.raw.hex()}
            for e in self.entries
        ]

    @classmethod
    def from_records(cls, records) -> "Transcript":
        t = cls()
        for r in records:
            t.record(r["direction"], bytes.fromhex(r["frame"]), r.get("status", DELIVERED))
        return t

    def to_json(self) -> str:
        return json.dumps(self.to_records(), indent=2)


FrameHook = Callable[[str, Frame], "Frame | bytes | list[Frame | bytes] | None"]


@dataclass
class AdversaryHooks:
    """What the adversary does with each frame on the wire.

    ``on_frame(direction, frame)`` returns ``None`` to deliver as-is, a Frame
    (or raw octets) to replace it, or a list of these to deliver instead;
    an empty list drops it, and the original may appear in the list
    alongside injected extras.  In passive mode the return value is ignored.
    """

    mode: str = "passive"
    on_frame: FrameHook | None = None


class Party:
    """Honest endpoint driving :func:`wbanlab.protocols.step`."""

    def __init__(self, cfg: PartyConfig, rng: RandomSource, label: str):
        self.cfg = cfg
        self.rng = rng
        self.label = label
        self.state: SessionState = new_session(cfg)

    @property
    def finished(self) -> bool:
        return self.state.finished

    @property
    def halted(self) -> bool:
        return self.state.halted

    @property
    def wants_tick(self) -> bool:
        return needs_tick(self.state)

    @property
    def mk(self) -> bytes | None:
        return self.state.mk

    @property
    def status(self) -> str:
        return self.state.status

    def handle(self, frame: Frame | bytes | None) -> Frame | None:
        self.state, out = step(self.cfg, self.state, frame, self.rng)
        return out


def _route(hooks: AdversaryHooks | None, marker: str, frame: Frame, transcript: Transcript) -> list[Frame]:
    receiver = marker.split("→")[1]
    if hooks is None or hooks.on_frame is None:
        transcript.record(marker, frame)
        return [frame]
    verdict = hooks.on_frame(marker, frame)
    if hooks.mode == "passive" or verdict is None:
        transcript.record(marker, frame)
        return [frame]
    if isinstance(verdict, (Frame, bytes, bytearray)):
        verdict = [verdict]
    out = []
    original_sent = False
    if not any(f is frame for f in verdict):
        transcript.record(marker, frame, REPLACED if verdict else DROPPED)
    for f in verdict:
        # a second copy of the original is an injection like any other
        if f is frame and not original_sent:
            transcript.record(marker, f)
            original_sent = True
        else:
            transcript.record(f"M→{receiver}", f)
        out.append(f)
    return out


def drive(a, b, hooks: AdversaryHooks | None = None, budget: int = FRAME_BUDGET) -> Transcript:
    """Alternate A then B until both finish, either halts, or nothing moves."""
    transcript = Transcript()
    inbox = {id(a): deque(), id(b): deque()}
    sent = 0
    while not (a.finished and b.finished) and not (a.halted or b.halted):
        progressed = False
        for me, peer in ((a, b), (b, a)):
            if me.finished:
                inbox[id(me)].clear()
                continue
            if inbox[id(me)]:
                frame = inbox[id(me)].popleft()
            elif me.wants_tick:
                frame = None
            else:
                continue
            before = me.state
            out = me.handle(frame)
            if frame is not None or out is not None or me.state != before:
                progressed = True
            if me.halted:
                return transcript
            if out is None:
                continue
            sent += 1
            if sent > budget:
                raise BudgetExhausted(f"more than {budget} frames sent")
            inbox[id(peer)].extend(_route(hooks, f"{me.label}→{peer.label}", out, transcript))
        if not progressed:
            break
    return transcript


@dataclass
class SessionOutcome:
    variant: int
    status_a: str
    status_b: str
    mk_a: bytes | None
    mk_b: bytes | None
    transcript: Transcript
    state_a: object = None
    state_b: object = None

    @property
    def agreed(self) -> bool:
        return self.mk_a is not None and self.mk_a == self.mk_b

    def summary(self) -> dict:
        return {
            "variant": VARIANT_NAMES[self.variant],
            "status_A": self.status_a,
            "status_B": self.status_b,
            "mk_A": self.mk_a.hex() if self.mk_a else None,
            "mk_B": self.mk_b.hex() if self.mk_b else None,
            "agreed": self.agreed,
            "frames": len(self.transcript),
        }


def with_shared_display(cfg_a: PartyConfig, cfg_b: PartyConfig):
    """Give a Protocol IV pair one fresh display panel, leaving other variants alone."""
    if cfg_a.variant != 4:
        return cfg_a, cfg_b
    panel = DisplayPanel()
    return replace(cfg_a, display=panel), replace(cfg_b, display=panel)


def run_session(
    cfg_a: PartyConfig,
    cfg_b: PartyConfig,
    adv: AdversaryHooks | None = None,
    rng: RandomSource | None = None,
    budget: int = FRAME_BUDGET,
) -> SessionOutcome:
    if cfg_a.variant != cfg_b.variant or cfg_a.sss != cfg_b.sss:
        raise ValueError("parties disagree on the protocol variant or suite")
    rng = rng if rng is not None else SystemRng()
    cfg_a, cfg_b = with_shared_display(cfg_a, cfg_b)
    a, b = Party(cfg_a, rng, "A"), Party(cfg_b, rng, "B")
    transcript = drive(a, b, adv, budget)
    return SessionOutcome(
        variant=cfg_a.variant,
        status_a=a.status,
        status_b=b.status,
        mk_a=a.mk,
        mk_b=b.mk,
        transcript=transcript,
        state_a=a.state,
        state_b=b.state,
    )
