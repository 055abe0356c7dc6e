"""End-to-end scenarios: an honest run followed by the attack that exploits it.

Each runner takes a seed and returns an :class:`AttackOutcome`; the CLI and
the report generator share them.
"""

from __future__ import annotations

from dataclasses import dataclass

from wbanlab import attacks
from wbanlab.curve import CurvePoint
from wbanlab.harness import run_session
from wbanlab.protocols import make_parties, parse_variant
from wbanlab.rng import DeterministicRng, RandomSource, SystemRng

DEFAULT_PASSWORD = "hunter2"

# (variant, compromised party) pairs for which a forward-secrecy break exists
FORWARD_SECRECY_CASES = [(1, "A"), (1, "B"), (2, "A"), (3, "A"), (3, "B"), (4, "A"), (4, "B")]


@dataclass
class ScenarioArgs:
    seed: int | None = None
    variant: int | None = None
    password: str | None = None
    dictionary: list[str] | None = None
    whose: str | None = None
    mirror: bool = False


def make_rng(seed: int | None) -> RandomSource:
    return SystemRng() if seed is None else DeterministicRng(seed)


def impersonate_p1(a: ScenarioArgs):
    rng = make_rng(a.seed)
    cfg_a, cfg_b = make_parties(1, rng)
    return attacks.impersonate_p1(cfg_a if a.mirror else cfg_b, rng)


def kci_p2(a: ScenarioArgs):
    rng = make_rng(a.seed)
    cfg_a, cfg_b = make_parties(2, rng)
    earlier = run_session(cfg_a, cfg_b, rng=rng)
    f2 = earlier.transcript.find(2)
    pk_b = CurvePoint(f2.pk_x, f2.pk_y)
    return attacks.kci_p2(cfg_a.static_keys.sk, pk_b, cfg_a, rng)


def impersonate_p3(a: ScenarioArgs):
    rng = make_rng(a.seed)
    cfg_a, cfg_b = make_parties(3, rng, password=a.password or DEFAULT_PASSWORD)
    earlier = run_session(cfg_a, cfg_b, rng=rng)
    q = attacks.recover_q_prime(earlier.transcript)
    return attacks.impersonate_p3(q, cfg_a if a.mirror else cfg_b, rng)


def dictionary_p3(a: ScenarioArgs):
    rng = make_rng(a.seed)
    cfg_a, cfg_b = make_parties(3, rng, password=a.password or DEFAULT_PASSWORD)
    earlier = run_session(cfg_a, cfg_b, rng=rng)
    return attacks.dictionary_p3(earlier.transcript, a.dictionary or [])


def impersonate_p4(a: ScenarioArgs):
    rng = make_rng(a.seed)
    cfg_a, cfg_b = make_parties(4, rng)
    return attacks.impersonate_p4(cfg_a if a.mirror else cfg_b, rng)


def forward_secrecy(a: ScenarioArgs):
    variant = parse_variant(a.variant)
    whose = (a.whose or "A").upper()
    rng = make_rng(a.seed)
    password = (a.password or DEFAULT_PASSWORD) if variant == 3 else None
    cfg_a, cfg_b = make_parties(variant, rng, password=password)
    earlier = run_session(cfg_a, cfg_b, rng=rng)
    sk = (cfg_a if whose == "A" else cfg_b).static_keys.sk
    return attacks.break_forward_secrecy(variant, earlier.transcript, sk, whose, session_mk=earlier.mk_a)


RUNNERS = {
    "impersonate_p1": impersonate_p1,
    "kci_p2": kci_p2,
    "impersonate_p3": impersonate_p3,
    "dictionary_p3": dictionary_p3,
    "impersonate_p4": impersonate_p4,
    "forward_secrecy": forward_secrecy,
}
