"""Trusted in-process components the protocol runs against: bulletin
board, certification registry, key generation, threshold decryption,
the voter-side devices, and the behavior emulator.

Each is a single-threaded object addressed by an election identifier;
"ideal" means the component itself is incorruptible, while its callers
(devices, authority) may misbehave.
"""

from __future__ import annotations

from typing import Callable, NamedTuple, Optional

from .behavior import BehaviorDistribution
from .elgamal import (Ciphertext, NotACandidate, PublicKey, RandomnessMismatch,
                      SecretKey, decrypt, encrypt, keygen, trapdoor_decrypt)
from .shamir import SecretShare, deal, reconstruct

ROLE_EA = "EA"
ROLE_AUDITOR = "auditor"
ROLE_VOTER = "voter"
ROLE_TRUSTEE = "trustee"

# Tally marker for a shuffled ciphertext that decrypts outside the
# candidate range.
REJECTED_PLAINTEXT = -1


class NotReady(Exception):
    """Public key queried before every trustee signaled ready."""


class ThresholdNotMet(Exception):
    """Decryption triggered with too few trustee key submissions."""


class MissingShuffle(Exception):
    """Decryption triggered before any shuffled list was posted."""


class UnknownSsid(Exception):
    """Check against a ballot submission that was never recorded."""


def cipher_bytes(c: Ciphertext) -> bytes:
    """Canonical byte encoding of a ciphertext, the message that gets
    certified."""
    return b"%d|%d" % (c.c1, c.c2)


class Ballot(NamedTuple):
    ssid: tuple          # (voter_id, nonce)
    c: Ciphertext
    sigma: str


class VerificationToken(NamedTuple):
    ssid: tuple
    r: int               # encryption randomness, the trapdoor
    intent: int          # candidate the device claims it encrypted


class BulletinBoard:
    """Append-only two-part board.  Everyone reads the public part; the
    private part is readable by the authority and the auditor only.
    Sequence numbers are global across both parts."""

    def __init__(self, sid):
        self.sid = sid
        self._pub: list = []
        self._priv: list = []
        self._seq = 0
        # optional callback(board, seq, entry) for transcript recording
        self.observer: Optional[Callable] = None

    def _check_sid(self, sid):
        if sid != self.sid:
            raise ValueError(f"unknown sid {sid!r}")

    def _append(self, store: list, name: str, entry) -> int:
        self._seq += 1
        store.append((self._seq, entry))
        if self.observer is not None:
            self.observer(name, self._seq, entry)
        return self._seq

    def pub_post(self, sid, entry) -> int:
        self._check_sid(sid)
        return self._append(self._pub, "pub", entry)

    def priv_post(self, sid, entry) -> int:
        self._check_sid(sid)
        return self._append(self._priv, "priv", entry)

    def read(self, sid, role: str):
        """Snapshot of (pub, priv); priv comes back None for roles
        without private access."""
        self._check_sid(sid)
        pub = tuple(self._pub)
        if role in (ROLE_EA, ROLE_AUDITOR):
            return pub, tuple(self._priv)
        return pub, None

    def snapshot(self):
        # ungated view for the trusted components themselves
        return tuple(self._pub), tuple(self._priv)


class CertRegistry:
    """Ideal certification: a handle verifies iff it was issued for
    exactly that (sid, ssid, message) tuple.  No key material exists to
    steal, so forgery is impossible by construction."""

    def __init__(self):
        self._issued: dict[tuple, set] = {}

    def sign(self, sid, ssid, message: bytes, rng, issuer) -> str:
        if issuer != ssid[0]:
            raise PermissionError(f"{issuer!r} cannot certify for {ssid[0]!r}")
        sigma = f"{rng.getrandbits(128):032x}"
        self._issued.setdefault((sid, tuple(ssid), bytes(message)), set()).add(sigma)
        return sigma

    def verify(self, sid, ssid, message: bytes, sigma) -> int:
        return int(sigma in self._issued.get((sid, tuple(ssid), bytes(message)), ()))

    def dump(self) -> list:
        """Issued tuples in a JSON-friendly shape, for transcripts."""
        return sorted(
            [list(ssid), message.decode(), sorted(sigmas)]
            for (_sid, ssid, message), sigmas in self._issued.items()
        )

    @classmethod
    def from_dump(cls, sid, rows) -> "CertRegistry":
        reg = cls()
        for ssid, message, sigmas in rows:
            key = (sid, tuple(ssid), message.encode())
            reg._issued[key] = set(sigmas)
        return reg


class KeyGenService:
    """Generates the election key pair once all k trustees report in,
    and deals the secret key into (t, k) shares, one per trustee."""

    def __init__(self, sid, params, t: int, k: int, rng):
        if not 1 <= t <= k:
            raise ValueError("need 1 <= t <= k")
        self.sid = sid
        self.params = params
        self.t = t
        self.k = k
        self._rng = rng
        self._ready: set = set()
        self._pk: Optional[PublicKey] = None
        self._shares: dict[int, SecretShare] = {}

    def ready(self, trustee_id: int) -> None:
        if not 1 <= trustee_id <= self.k:
            raise ValueError(f"unknown trustee {trustee_id}")
        self._ready.add(trustee_id)

    def pubkey(self) -> PublicKey:
        if len(self._ready) < self.k:
            raise NotReady(f"not-ready: {len(self._ready)} of {self.k} trustees")
        if self._pk is None:
            pk, sk = keygen(self.params, self._rng)
            shares = deal(sk.sk, self.t, self.k, self.params.q, self._rng)
            self._pk = pk
            self._shares = {s.index: s for s in shares}
        return self._pk

    def share_for(self, trustee_id: int) -> SecretShare:
        self.pubkey()  # ensure dealt
        return self._shares[trustee_id]


class DecryptionService:
    """Threshold decryption over the shuffled list on the board.

    Trustees submit their key shares; once enough are in, the service
    reconstructs the secret, decrypts the posted shuffled ciphertexts,
    and publishes the plaintexts.  Its audit hook re-decrypts and
    compares against what was published."""

    def __init__(self, sid, board: BulletinBoard, keygen_service: KeyGenService,
                 t: int, strict: bool = False, corrupt_output_fn=None):
        self.sid = sid
        self.board = board
        self.keygen_service = keygen_service
        self.t = t
        # strict: require strictly more than t submissions
        self.strict = strict
        # test/tamper hook applied to the plaintext list before posting
        self.corrupt_output_fn = corrupt_output_fn
        self._submitted: dict[int, SecretShare] = {}

    def submit_key(self, trustee_id: int) -> None:
        self._submitted[trustee_id] = self.keygen_service.share_for(trustee_id)

    def _quorum(self) -> bool:
        count = len(self._submitted)
        return count > self.t if self.strict else count >= self.t

    def _secret(self) -> int:
        shares = list(self._submitted.values())[: self.t]
        return reconstruct(shares, self.t, self.keygen_service.params.q)

    def _posted_shuffle(self):
        _pub, priv = self.board.snapshot()
        for _seq, entry in reversed(priv):
            if isinstance(entry, dict) and entry.get("kind") == "shuffle":
                return entry
        return None

    def _decrypt_list(self, ciphertexts) -> list[int]:
        sk = SecretKey(self.keygen_service.params, self._secret())
        out = []
        for c1, c2 in ciphertexts:
            try:
                out.append(decrypt(sk, Ciphertext(c1, c2)))
            except NotACandidate:
                out.append(REJECTED_PLAINTEXT)
        return out

    def decrypt_and_post(self) -> None:
        if not self._quorum():
            need = self.t + 1 if self.strict else self.t
            raise ThresholdNotMet(f"threshold-not-met: {len(self._submitted)} < {need}")
        entry = self._posted_shuffle()
        if entry is None:
            raise MissingShuffle("missing-shuffle: no shuffled list on the board")
        values = self._decrypt_list(entry["outputs"])
        if self.corrupt_output_fn is not None:
            values = list(self.corrupt_output_fn(values))
        self.board.pub_post(self.sid, {"kind": "plaintexts", "values": values})

    def audit(self) -> bool:
        entry = self._posted_shuffle()
        if entry is None or not self._quorum():
            return False
        pub, _priv = self.board.snapshot()
        posted = None
        for _seq, e in reversed(pub):
            if isinstance(e, dict) and e.get("kind") == "plaintexts":
                posted = e["values"]
                break
        if posted is None:
            return False
        return list(posted) == self._decrypt_list(entry["outputs"])


class VotingDevice:
    """The voter's casting device.  Honest devices encrypt the voter's
    intent; a corrupted one consults its policy on the voter's history
    and may encrypt a shifted candidate instead, while the token it
    hands back still claims the intent."""

    def __init__(self, sid, voter_id, registry: CertRegistry, rng,
                 policy=None, offset: int = 1):
        self.sid = sid
        self.voter_id = voter_id
        self.registry = registry
        self.rng = rng
        self.policy = policy
        self.offset = offset
        self._nonce = 0
        # bookkeeping for reports: nonce -> (encrypted value, manipulated?)
        self.cast_log: dict[int, tuple[int, bool]] = {}

    def cast(self, pk: PublicKey, intent: int, history: str = ""):
        self._nonce += 1
        ssid = (self.voter_id, self._nonce)
        manipulate = self.policy is not None and self.policy.decide(history)
        value = (intent + self.offset) % pk.params.candidate_bound if manipulate else intent
        r = pk.params.random_scalar(self.rng)
        c = encrypt(pk, value, r)
        sigma = self.registry.sign(self.sid, ssid, cipher_bytes(c), self.rng,
                                   issuer=self.voter_id)
        self.cast_log[self._nonce] = (value, manipulate)
        return Ballot(ssid, c, sigma), VerificationToken(ssid, r, intent)


class AuditDevice:
    """The voter's checking device: fetches the ciphertext the board
    actually recorded for the token's submission (never trusting the
    casting device) and opens it with the token's randomness."""

    def __init__(self, sid, board: BulletinBoard, pk: PublicKey):
        self.sid = sid
        self.board = board
        self.pk = pk

    def check(self, token: VerificationToken):
        _pub, priv = self.board.snapshot()
        recorded = None
        for _seq, entry in reversed(priv):
            if (isinstance(entry, dict) and entry.get("kind") == "ballot"
                    and tuple(entry["ssid"]) == tuple(token.ssid)):
                recorded = Ciphertext(*entry["c"])
                break
        if recorded is None:
            raise UnknownSsid(f"unknown-ssid: {token.ssid}")
        try:
            observed = trapdoor_decrypt(self.pk, recorded, token.r)
        except (RandomnessMismatch, NotACandidate):
            return 0, None
        return int(observed == token.intent), observed


def vemu_sample(sid, distribution: BehaviorDistribution, rng) -> str:
    """Draw one voter's action script."""
    return distribution.sample(rng)
