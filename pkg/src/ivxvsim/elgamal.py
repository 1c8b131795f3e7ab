"""Lifted ElGamal over a Schnorr group: re-randomizable, and extractable
given the encryption randomness (the cast-as-intended primitive).

Messages are candidate indices m < candidate_bound, encoded as g^m and
recovered by a small linear scan of the exponent range.
"""

from __future__ import annotations

from typing import NamedTuple

from .groups import GroupParams


class NotACandidate(ValueError):
    """Ciphertext does not decrypt to any candidate index below the bound."""


class RandomnessMismatch(ValueError):
    """Claimed encryption randomness does not reproduce the ciphertext."""


class PublicKey(NamedTuple):
    params: GroupParams
    h: int


class SecretKey(NamedTuple):
    params: GroupParams
    sk: int


class Ciphertext(NamedTuple):
    c1: int
    c2: int


def keygen(params: GroupParams, rng) -> tuple[PublicKey, SecretKey]:
    """Sample sk uniform in [1, q) and return (pk, sk) with h = g^sk."""
    sk = rng.randrange(1, params.q)
    return make_keypair(params, sk)


def make_keypair(params: GroupParams, sk: int) -> tuple[PublicKey, SecretKey]:
    if not 1 <= sk < params.q:
        raise ValueError("secret key out of range")
    h = pow(params.g, sk, params.p)
    return PublicKey(params, h), SecretKey(params, sk)


def encrypt(pk: PublicKey, m: int, r: int) -> Ciphertext:
    """(g^r, g^m * h^r) for a candidate index m < candidate_bound."""
    params = pk.params
    if not 0 <= m < params.candidate_bound:
        raise ValueError(f"message {m} outside candidate range [0, {params.candidate_bound})")
    r %= params.q
    c1 = pow(params.g, r, params.p)
    c2 = pow(params.g, m, params.p) * pow(pk.h, r, params.p) % params.p
    return Ciphertext(c1, c2)


def _scan_dlog(params: GroupParams, target: int) -> int:
    # linear scan over [0, candidate_bound); the bound is capped at 2^16
    acc = 1
    for m in range(params.candidate_bound):
        if acc == target:
            return m
        acc = acc * params.g % params.p
    raise NotACandidate("no candidate index matches the decrypted element")


def decrypt(sk: SecretKey, ct: Ciphertext) -> int:
    """Recover m from c2 / c1^sk = g^m."""
    params = sk.params
    lifted = ct.c2 * pow(ct.c1, params.q - sk.sk % params.q, params.p) % params.p
    return _scan_dlog(params, lifted)


def rerandomize(pk: PublicKey, ct: Ciphertext, r: int) -> Ciphertext:
    """Multiply in a fresh encryption of zero; the plaintext is unchanged."""
    params = pk.params
    r %= params.q
    return Ciphertext(
        ct.c1 * pow(params.g, r, params.p) % params.p,
        ct.c2 * pow(pk.h, r, params.p) % params.p,
    )


def trapdoor_decrypt(pk: PublicKey, ct: Ciphertext, r: int) -> int:
    """Extract the plaintext from the claimed encryption randomness.

    Checks c1 = g^r and, if so, scans c2 / h^r = g^m.  This needs no secret
    key, which is what lets an audit device verify a recorded ballot
    against the voter's intent.
    """
    params = pk.params
    r %= params.q
    if pow(params.g, r, params.p) != ct.c1:
        raise RandomnessMismatch("c1 does not match g^r for the claimed randomness")
    lifted = ct.c2 * pow(pow(pk.h, r, params.p), -1, params.p) % params.p
    return _scan_dlog(params, lifted)
