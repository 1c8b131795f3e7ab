"""Named derivation of per-component RNG streams from one master seed.

Every random choice in a run flows from (seed, label, index) through
SHA-256, so components cannot perturb each other's streams and a
transcript is a pure function of its configuration.
"""

from __future__ import annotations

import hashlib
import random

_DOMAIN = b"ivxvsim/seed-v1"


def derive_seed(seed: int, label: str, index: int = 0) -> int:
    material = b"%b|%d|%b|%d" % (_DOMAIN, seed, label.encode(), index)
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")


def rng_for(seed: int, label: str, index: int = 0) -> random.Random:
    return random.Random(derive_seed(seed, label, index))
