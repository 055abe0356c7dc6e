"""Executable laboratory for the IEEE 802.15.6 security association protocols.

The four elliptic-curve key agreement protocols are modelled frame by frame
(:mod:`wbanlab.protocols`), wired together through an interceptable channel
(:mod:`wbanlab.harness`), and attacked by the adversaries in
:mod:`wbanlab.attacks`.
"""

from wbanlab.curve import G, INFINITY, P256, CurvePoint, KeyPair
from wbanlab.rng import DeterministicRng, SystemRng

__all__ = [
    "G",
    "INFINITY",
    "P256",
    "CurvePoint",
    "KeyPair",
    "DeterministicRng",
    "SystemRng",
]

__version__ = "0.1.0"
