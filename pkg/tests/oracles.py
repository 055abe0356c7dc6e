"""Independent reference computations and a hand-driven session for tests."""

from __future__ import annotations

from dataclasses import dataclass, replace

from cryptography.hazmat.primitives import cmac as crypto_cmac
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.ciphers import algorithms

from wbanlab.frames import Frame, encode_frame
from wbanlab.protocols import DisplayPanel, PartyConfig, Role, SessionState, make_parties, new_session, step
from wbanlab.rng import DeterministicRng

PASSWORD = "tr0ub4dor"


def reference_cmac(key: bytes, msg: bytes) -> bytes:
    c = crypto_cmac.CMAC(algorithms.AES(key))
    c.update(msg)
    return c.finalize()


def openssl_shared_x(sk_a: int, sk_b: int) -> bytes:
    """X(sk_a * sk_b * G) via OpenSSL ECDH."""
    priv = ec.derive_private_key(sk_a, ec.SECP256R1())
    peer = ec.derive_private_key(sk_b, ec.SECP256R1()).public_key()
    return priv.exchange(ec.ECDH(), peer)


def oracle_mk(sk_a: int, sk_b: int, n_a: bytes, n_b: bytes) -> bytes:
    return reference_cmac(openssl_shared_x(sk_a, sk_b)[:16], n_a + n_b)


def flip_bit(raw: bytes, bit: int) -> bytes:
    out = bytearray(raw)
    out[bit // 8] ^= 0x80 >> (bit % 8)
    return bytes(out)


@dataclass
class ManualRun:
    """Every frame and every intermediate state of one honest session."""

    cfg_a: PartyConfig
    cfg_b: PartyConfig
    frames: dict[int, Frame]
    before: dict[str, SessionState]
    final_a: SessionState
    final_b: SessionState
    rng: DeterministicRng

    def fresh_panel_cfgs(self):
        """Copies of the configs sharing a new panel already showing A's display."""
        if self.cfg_a.variant != 4:
            return self.cfg_a, self.cfg_b
        panel = DisplayPanel()
        panel.show(Role.INITIATOR, self.cfg_a.display.shown[Role.INITIATOR])
        return replace(self.cfg_a, display=panel), replace(self.cfg_b, display=panel)


def manual_run(variant: int, seed, password: str | None = PASSWORD) -> ManualRun:
    rng = DeterministicRng(seed)
    cfg_a, cfg_b = make_parties(variant, rng, password=password if variant == 3 else None)
    if variant == 4:
        panel = DisplayPanel()
        cfg_a, cfg_b = replace(cfg_a, display=panel), replace(cfg_b, display=panel)
    a, b = new_session(cfg_a), new_session(cfg_b)
    frames, before = {}, {}
    a, frames[1] = step(cfg_a, a, None, rng)
    b, frames[2] = step(cfg_b, b, frames[1], rng)
    a, _ = step(cfg_a, a, frames[2], rng)
    b, frames[3] = step(cfg_b, b, None, rng)
    before["A3"] = a
    a, frames[4] = step(cfg_a, a, frames[3], rng)
    before["B4"] = b
    b, _ = step(cfg_b, b, frames[4], rng)
    if variant == 4 and not a.finished:
        a, _ = step(cfg_a, a, None, rng)
    return ManualRun(cfg_a, cfg_b, frames, before, a, b, rng)


def tampered_outcomes(run: ManualRun, which: int):
    """Resulting receiver state for every single-bit flip of frame ``which``."""
    raw = encode_frame(run.frames[which])
    for bit in range(8 * len(raw)):
        cfg_a, cfg_b = run.fresh_panel_cfgs()
        if which == 3:
            st, _ = step(cfg_a, run.before["A3"], flip_bit(raw, bit), run.rng)
        else:
            st, _ = step(cfg_b, run.before["B4"], flip_bit(raw, bit), run.rng)
        yield bit, st
