from __future__ import annotations

import json
from dataclasses import replace

import pytest
from oracles import PASSWORD, manual_run

from wbanlab.curve import P256
from wbanlab.frames import encode_frame
from wbanlab.harness import (
    AdversaryHooks,
    BudgetExhausted,
    Party,
    Transcript,
    drive,
    run_session,
)
from wbanlab.protocols import make_parties
from wbanlab.rng import DeterministicRng


def honest(variant, seed, adv=None):
    rng = DeterministicRng(seed)
    cfg_a, cfg_b = make_parties(variant, rng, password=PASSWORD if variant == 3 else None)
    return run_session(cfg_a, cfg_b, adv, rng=rng)


@pytest.mark.parametrize("variant", [1, 2, 3, 4])
def test_passive_adversary_changes_nothing(variant):
    seen = []
    passive = AdversaryHooks("passive", lambda d, f: seen.append(d) or [])
    plain, watched = honest(variant, "passive"), honest(variant, "passive", passive)
    assert plain.agreed and watched.agreed
    assert plain.mk_a == watched.mk_a
    assert plain.transcript.to_text() == watched.transcript.to_text()
    assert seen == ["A→B", "B→A", "B→A", "A→B"]


@pytest.mark.parametrize("variant", [1, 2, 3, 4])
def test_harness_matches_direct_steps(variant):
    # manual_run and run_session consume the rng in the same order
    direct = manual_run(variant, f"direct-{variant}")
    out = honest(variant, f"direct-{variant}")
    assert out.mk_a == direct.final_a.mk
    assert [e.raw for e in out.transcript.entries] == [encode_frame(direct.frames[i]) for i in (1, 2, 3, 4)]


def test_drop_frame3():
    drop3 = AdversaryHooks("active", lambda d, f: [] if f.seq == 3 else None)
    out = honest(1, "drop", drop3)
    assert out.mk_a is None and out.mk_b is None
    assert out.status_a == "got2" and out.status_b == "sent3"
    assert [e.note for e in out.transcript.entries] == ["delivered", "delivered", "dropped"]


def test_off_curve_pk_b_rejected():
    def perturb(direction, frame):
        if frame.seq == 2:
            bad = replace(frame, pk_y=(frame.pk_y + 1) % P256.p)
            assert (bad.pk_y ** 2 - (bad.pk_x ** 3 - 3 * bad.pk_x + P256.b)) % P256.p != 0
            return bad
        return None

    out = honest(1, "off-curve", AdversaryHooks("active", perturb))
    assert out.status_a == "halted(invalid_public_key)"
    assert out.state_a.halt_detail == "off_curve"
    assert out.mk_a is None and out.mk_b is None
    assert [e.marker for e in out.transcript.entries] == ["A→B", "B→A", "M→A"]
    assert out.transcript.entries[1].note == "replaced"


def test_raw_octets_on_the_wire():
    garbage = AdversaryHooks("active", lambda d, f: encode_frame(f)[:100] if f.seq == 2 else None)
    out = honest(1, "raw", garbage)
    assert out.status_a == "halted(malformed_frame)"
    t = out.transcript
    assert len(t.entries[-1].raw) == 100 and not t.entries[-1].decodes
    assert len(t.delivered()) == 1
    assert Transcript.from_text(t.to_text()).to_text() == t.to_text()


def test_injected_duplicate_is_rejected():
    dup = AdversaryHooks("active", lambda d, f: [f, f] if f.seq == 1 else None)
    out = honest(1, "dup", dup)
    assert out.status_b == "halted(unexpected_frame)"
    assert [e.marker for e in out.transcript.entries[:2]] == ["A→B", "M→B"]


@pytest.mark.parametrize("variant", [1, 3, 4])
def test_transcript_roundtrip(variant):
    t = honest(variant, "roundtrip").transcript
    text = t.to_text()
    assert text.splitlines()[0].startswith("A→B: ")
    assert Transcript.from_text(text).to_text() == text
    records = json.loads(t.to_json())
    assert [r["direction"] for r in records] == ["A→B", "B→A", "B→A", "A→B"]
    assert Transcript.from_records(records).to_text() == text
    assert t.find(3).seq == 3 and t.find(9) is None


def test_from_text_rejects_junk():
    with pytest.raises(ValueError):
        Transcript.from_text("hello\n")


def test_budget_exhaustion():
    f1 = honest(1, "chatter").transcript.find(1)

    class Chatterbox:
        label = "M"
        state = 0
        finished = halted = False
        wants_tick = True

        def handle(self, frame):
            self.state += 1
            return f1

    with pytest.raises(BudgetExhausted):
        drive(Chatterbox(), Chatterbox(), budget=16)


def test_halt_stops_the_run():
    rng = DeterministicRng("halt-stop")
    cfg_a, cfg_b = make_parties(1, rng)
    a, b = Party(cfg_a, rng, "A"), Party(cfg_b, rng, "B")
    t = drive(a, b, AdversaryHooks("active", lambda d, f: replace(f, mac_field=bytes(8)) if f.seq == 3 else None))
    assert a.status == "halted(mac_mismatch)" and b.status == "sent3"
    assert len(t) == 4


def test_mismatched_configs_rejected():
    rng = DeterministicRng("mismatch")
    cfg_a, _ = make_parties(1, rng)
    _, cfg_b = make_parties(4, rng)
    with pytest.raises(ValueError):
        run_session(cfg_a, cfg_b, rng=rng)


def test_summary_record():
    s = honest(2, "summary").summary()
    assert s["variant"] == "II" and s["agreed"] and s["frames"] == 4
    assert s["mk_A"] == s["mk_B"] and len(s["mk_A"]) == 32
    json.dumps(s)
