"""Prime-order Schnorr subgroups of Z_p* with pinned parameter presets.

Two presets are provided: "toy" (p=23, q=11) for fast deterministic tests
and demos, and "standard", the 2048-bit safe-prime MODP group from RFC 3526
in which g=2 generates the order-q subgroup of quadratic residues.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

# RFC 3526, 2048-bit MODP group. p is a safe prime, q = (p-1)/2 is prime,
# and 2 has order exactly q (2^q = 1 mod p, checked in the test suite).
_MODP_2048_P = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF",
    16,
)

MAX_CANDIDATE_BOUND = 2**16


class UnknownPreset(ValueError):
    pass


@dataclass(frozen=True)
class GroupParams:
    """Ambient modulus p, prime subgroup order q, generator g, and the
    exclusive upper bound on encodable candidate indices."""

    p: int
    q: int
    g: int
    candidate_bound: int

    def is_element(self, x: int) -> bool:
        """Membership test for the order-q subgroup."""
        return 0 < x < self.p and pow(x, self.q, self.p) == 1

    def random_scalar(self, rng) -> int:
        return rng.randrange(self.q)


_PRESETS = {
    "toy": (23, 11, 2),
    "standard": (_MODP_2048_P, (_MODP_2048_P - 1) // 2, 2),
}


def setup(preset: str, candidate_bound: int) -> GroupParams:
    """Return the pinned group parameters for a named preset.

    candidate_bound must satisfy 1 <= candidate_bound <= min(q, 2^16):
    plaintexts are encoded in the exponent, so the message space cannot
    exceed the subgroup order.
    """
    if preset not in _PRESETS:
        raise UnknownPreset(f"unknown group preset: {preset!r}")
    p, q, g = _PRESETS[preset]
    if candidate_bound < 1:
        raise ValueError("candidateBound must be positive")
    if candidate_bound > MAX_CANDIDATE_BOUND:
        raise ValueError(f"candidateBound must satisfy C <= {MAX_CANDIDATE_BOUND}")
    if candidate_bound > q:
        raise ValueError("candidateBound must satisfy C <= q")
    return GroupParams(p=p, q=q, g=g, candidate_bound=candidate_bound)


def hash_to_element(params: GroupParams, tag: bytes, index: int) -> int:
    """Derive a subgroup element of order q from a domain tag, with no
    known discrete log relative to g or to other derived elements.

    Candidates x are hashed from (tag, index, counter) and mapped into the
    subgroup via x^((p-1)/q); the counter advances past the identity.
    """
    cofactor = (params.p - 1) // params.q
    counter = 0
    while True:
        material = b"ivxvsim/group|%b|%d|%d" % (tag, index, counter)
        x = int.from_bytes(hashlib.sha256(material).digest(), "big") % params.p
        if x > 1:
            candidate = pow(x, cofactor, params.p)
            if candidate != 1:
                return candidate
        counter += 1
