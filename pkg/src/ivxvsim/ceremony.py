"""One full election run: preparation, voting, tally, audit.

The run is a pure function of its configuration.  Every component draws
from its own seeded stream, voters execute their scripts in id order,
and everything observable lands in an append-only transcript that can
be re-audited offline.

Tamper modes exist to exercise the audit: each one makes a single
authority-side modification that exactly one audit check must catch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .behavior import BehaviorDistribution, default_distribution, validate_pattern
from .elgamal import Ciphertext, NotACandidate, PublicKey, SecretKey, decrypt, encrypt, rerandomize
from .groups import setup
from .functionalities import (AuditDevice, BulletinBoard, CertRegistry,
                              DecryptionService, KeyGenService, ROLE_AUDITOR,
                              REJECTED_PLAINTEXT, VotingDevice, cipher_bytes,
                              vemu_sample)
from .seeding import rng_for
from .shamir import reconstruct
from .shuffle import (ShuffleStatement, ShuffleWitness, prove_shuffle,
                      serialize_proof, verify_shuffle)

TOOL_VERSION = "0.1.0"

TAMPER_MODES = ("forge-signature", "mix-non-last", "tamper-shuffle-output",
                "tamper-plaintext")

AUDIT_REASONS = ("bad-signature", "last-ballot-mismatch", "shuffle-proof",
                 "decryption", "complaint")


class CeremonyError(Exception):
    """A run aborted with a diagnostic."""


class ReplayError(Exception):
    """Transcript too damaged to re-audit."""


class AuditVerdict(NamedTuple):
    valid: bool
    reason: Optional[str] = None


class ElectionResult(NamedTuple):
    transcript: "ElectionTranscript"
    tally: dict
    verdict: AuditVerdict


@dataclass(frozen=True)
class ElectionConfig:
    n_voters: int
    n_trustees: int
    threshold: int
    candidate_bound: int = 2
    group_preset: str = "toy"
    seed: int = 0
    distribution: Optional[BehaviorDistribution] = None  # None = shipped default
    corrupted: tuple = ()          # voter ids with a corrupted casting device
    policy: object = None          # decide(history) -> bool, for corrupted devices
    manipulation_offset: int = 1
    intents: Optional[tuple] = None    # None = drawn from the seed
    scripts: Optional[dict] = None     # per-voter forced scripts, else sampled
    threshold_strict: bool = False     # require strictly more than t key shares
    ea_strict_halt: bool = False       # abort the run on a bad certification
    tamper: Optional[str] = None
    sid: str = "election-1"

    def __post_init__(self):
        if self.n_voters < 1:
            raise ValueError("need at least one voter")
        if not 1 <= self.threshold <= self.n_trustees:
            raise ValueError("need 1 <= threshold <= n_trustees")
        corrupted = tuple(sorted(set(self.corrupted)))
        if any(not 1 <= v <= self.n_voters for v in corrupted):
            raise ValueError("corrupted ids must be voter ids")
        object.__setattr__(self, "corrupted", corrupted)
        if corrupted and self.policy is None:
            raise ValueError("corrupted voters need a manipulation policy")
        if corrupted and self.candidate_bound < 2:
            raise ValueError("manipulation needs at least two candidates")
        if self.intents is not None:
            intents = tuple(int(x) for x in self.intents)
            if len(intents) != self.n_voters:
                raise ValueError("need one intent per voter")
            if any(not 0 <= x < self.candidate_bound for x in intents):
                raise ValueError("intent out of candidate range")
            object.__setattr__(self, "intents", intents)
        if self.scripts is not None:
            scripts = {}
            for voter_id, script in self.scripts.items():
                voter_id = int(voter_id)
                if not 1 <= voter_id <= self.n_voters:
                    raise ValueError(f"script for unknown voter {voter_id}")
                scripts[voter_id] = validate_pattern(script)
            object.__setattr__(self, "scripts", scripts)
        if self.tamper is not None and self.tamper not in TAMPER_MODES:
            raise ValueError(f"unknown tamper mode {self.tamper!r}")
        if self.tamper == "tamper-plaintext" and self.candidate_bound < 2:
            raise ValueError("tamper-plaintext needs at least two candidates")


class ElectionTranscript:
    """Ordered event log plus the manifest that determines it."""

    def __init__(self, manifest: dict):
        self.manifest = dict(manifest)
        self.events: list = []

    def record(self, phase: str, actor: str, kind: str, payload) -> dict:
        event = {"seq": len(self.events) + 1, "phase": phase, "actor": actor,
                 "kind": kind, "payload": payload}
        self.events.append(event)
        return event

    def events_of(self, kind: str) -> list:
        return [e for e in self.events if e["kind"] == kind]

    def to_jsonl(self) -> str:
        dump = lambda obj: json.dumps(obj, sort_keys=True, separators=(",", ":"))
        lines = [dump({"manifest": self.manifest})]
        lines.extend(dump(e) for e in self.events)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "ElectionTranscript":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ReplayError("empty transcript")
        try:
            head = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise ReplayError(f"bad manifest line: {exc}") from None
        if not isinstance(head, dict) or "manifest" not in head:
            raise ReplayError("first line is not a manifest")
        transcript = cls(head["manifest"])
        prev_seq = 0
        for ln in lines[1:]:
            try:
                event = json.loads(ln)
            except json.JSONDecodeError as exc:
                raise ReplayError(f"bad event line: {exc}") from None
            if not isinstance(event, dict) or not {"seq", "phase", "actor", "kind", "payload"} <= set(event):
                raise ReplayError("event missing required fields")
            if not isinstance(event["seq"], int) or event["seq"] <= prev_seq:
                raise ReplayError("event sequence not strictly increasing")
            prev_seq = event["seq"]
            transcript.events.append(event)
        return transcript


def tally_alg(plaintexts, candidate_bound: Optional[int] = None) -> dict:
    """Histogram of decrypted values; anything outside the candidate
    range lands in the reject bucket."""
    counts: dict[int, int] = {}
    for m in plaintexts:
        m = int(m)
        if m < 0 or (candidate_bound is not None and m >= candidate_bound):
            m = REJECTED_PLAINTEXT
        counts[m] = counts.get(m, 0) + 1
    return dict(sorted(counts.items()))


def voter_vote_loop(script: str, sid, voter_id: int, intent: int, pk: PublicKey,
                    device: VotingDevice, checker: AuditDevice, ea_accept):
    """Run one voter's action script.

    Each V casts via the device and submits to the authority; each C
    checks the latest token and, on mismatch, complains and stops.
    Returns (events, complained)."""
    validate_pattern(script)
    events = []
    history = ""
    token = None
    for action in script:
        if action == "V":
            ballot, token = device.cast(pk, intent, history)
            _value, manipulated = device.cast_log[ballot.ssid[1]]
            accepted = ea_accept(ballot)
            events.append({"kind": "cast", "ssid": list(ballot.ssid),
                           "manipulated": manipulated, "accepted": accepted})
        else:
            matches, observed = checker.check(token)
            events.append({"kind": "check", "ssid": list(token.ssid),
                           "matches": matches, "observed": observed})
            if not matches:
                events.append({"kind": "complaint", "ssid": list(token.ssid)})
                return events, True
        history += action
    return events, False


def ea_accept_ballot(sid, registry: CertRegistry, board: BulletinBoard,
                     ledger: dict, ballot, strict: bool = False,
                     transform=None) -> bool:
    """Authority-side ballot intake: certification check, then ledger
    update and private-board post.  A rejected ballot leaves both
    untouched (or aborts the run when strict).

    transform, when given, maps the verified ciphertext to what actually
    gets recorded; the honest authority passes None."""
    if not registry.verify(sid, ballot.ssid, cipher_bytes(ballot.c), ballot.sigma):
        if strict:
            raise CeremonyError("authority halt: ballot failed certification")
        return False
    c_posted = ballot.c if transform is None else transform(ballot.c)
    ledger[ballot.ssid[0]] = c_posted
    board.priv_post(sid, {"kind": "ballot", "ssid": list(ballot.ssid),
                          "c": [c_posted.c1, c_posted.c2], "sigma": ballot.sigma})
    return True


def _audit_core(sid, registry: CertRegistry, pk: PublicKey, priv_entries,
                n_voters: int, dec_ok: bool, has_complaint: bool) -> AuditVerdict:
    """The auditor's checks over a private-board snapshot, in fixed
    order; the first failure names the verdict's reason."""
    ballots = [e for _seq, e in priv_entries
               if isinstance(e, dict) and e.get("kind") == "ballot"]
    for e in ballots:
        ct = Ciphertext(int(e["c"][0]), int(e["c"][1]))
        if not registry.verify(sid, tuple(e["ssid"]), cipher_bytes(ct), e["sigma"]):
            return AuditVerdict(False, "bad-signature")

    shuffle_entry = None
    for _seq, e in reversed(tuple(priv_entries)):
        if isinstance(e, dict) and e.get("kind") == "shuffle":
            shuffle_entry = e
            break
    if shuffle_entry is None:
        return AuditVerdict(False, "shuffle-proof")

    last: dict[int, list] = {}
    for e in ballots:  # board order, so later entries overwrite
        last[int(e["ssid"][0])] = [int(e["c"][0]), int(e["c"][1])]
    expected = [last.get(i) for i in range(1, n_voters + 1)]
    posted_inputs = [[int(a), int(b)] for a, b in shuffle_entry["inputs"]]
    if None in expected or expected != posted_inputs:
        return AuditVerdict(False, "last-ballot-mismatch")

    statement = ShuffleStatement(
        pk=pk,
        inputs=tuple(Ciphertext(int(a), int(b)) for a, b in shuffle_entry["inputs"]),
        outputs=tuple(Ciphertext(int(a), int(b)) for a, b in shuffle_entry["outputs"]),
    )
    try:
        proof_blob = bytes.fromhex(shuffle_entry["proof"])
    except (ValueError, TypeError):
        return AuditVerdict(False, "shuffle-proof")
    if not verify_shuffle(statement, proof_blob):
        return AuditVerdict(False, "shuffle-proof")

    if not dec_ok:
        return AuditVerdict(False, "decryption")
    if has_complaint:
        return AuditVerdict(False, "complaint")
    return AuditVerdict(True, None)


def run_election(config: ElectionConfig) -> ElectionResult:
    params = setup(config.group_preset, config.candidate_bound)
    dist = config.distribution if config.distribution is not None else default_distribution()
    sid = config.sid
    seed = config.seed
    n, k, t = config.n_voters, config.n_trustees, config.threshold

    if config.intents is not None:
        intents = config.intents
    else:
        intent_rng = rng_for(seed, "intents")
        intents = tuple(intent_rng.randrange(config.candidate_bound) for _ in range(n))

    policy = config.policy
    policy_desc = None
    if policy is not None:
        policy_desc = policy.describe() if hasattr(policy, "describe") else str(policy)
    manifest = {
        "version": TOOL_VERSION,
        "sid": sid,
        "seed": seed,
        "n_voters": n,
        "n_trustees": k,
        "threshold": t,
        "candidate_bound": config.candidate_bound,
        "group_preset": config.group_preset,
        "threshold_strict": config.threshold_strict,
        "ea_strict_halt": config.ea_strict_halt,
        "tamper": config.tamper,
        "corrupted": list(config.corrupted),
        "manipulation_offset": config.manipulation_offset,
        "policy": policy_desc,
        "distribution": [[pat, prob] for pat, prob in dist.items()],
        "intents": list(intents),
        "scripts": {str(v): s for v, s in (config.scripts or {}).items()},
    }
    transcript = ElectionTranscript(manifest)
    phase_box = ["preparation"]

    board = BulletinBoard(sid)
    board.observer = lambda name, bseq, entry: transcript.record(
        phase_box[0], f"{name}-board", f"{name}-post",
        {"board_seq": bseq, "entry": entry})
    registry = CertRegistry()
    kg = KeyGenService(sid, params, t, k, rng_for(seed, "keygen"))

    corrupt_fn = None
    if config.tamper == "tamper-plaintext":
        bound = config.candidate_bound
        corrupt_fn = lambda values: [(values[0] + 1) % bound] + list(values[1:])
    dec = DecryptionService(sid, board, kg, t, strict=config.threshold_strict,
                            corrupt_output_fn=corrupt_fn)

    # Preparation: trustees report in, the key comes up, the authority
    # publishes it and opens an empty ledger.
    for trustee_id in range(1, k + 1):
        kg.ready(trustee_id)
        transcript.record("preparation", f"trustee-{trustee_id}", "ready", {})
    pk = kg.pubkey()
    board.pub_post(sid, {"kind": "pubkey", "h": pk.h})
    ledger: dict[int, Ciphertext] = {}
    first_ballot: dict[int, Ciphertext] = {}
    accepted_counts: dict[int, int] = {}

    forge_pending = [config.tamper == "forge-signature"]

    def ea_accept(ballot) -> bool:
        transform = None
        if forge_pending[0]:
            # authority-side tamper: record a modified ciphertext under
            # the original certification handle
            transform = lambda c: Ciphertext(c.c1, c.c2 * params.g % params.p)
        ok = ea_accept_ballot(sid, registry, board, ledger, ballot,
                              strict=config.ea_strict_halt, transform=transform)
        if not ok:
            transcript.record(phase_box[0], "EA", "ballot-rejected",
                              {"ssid": list(ballot.ssid)})
            return False
        if transform is not None:
            forge_pending[0] = False
        voter_id = ballot.ssid[0]
        first_ballot.setdefault(voter_id, ledger[voter_id])
        accepted_counts[voter_id] = accepted_counts.get(voter_id, 0) + 1
        return True

    # Voting: each voter runs their script to completion, in id order.
    phase_box[0] = "voting"
    transcript.record("voting", "EA", "phase-open", {})
    checker = AuditDevice(sid, board, pk)
    complaints = []
    for i in range(1, n + 1):
        device = VotingDevice(sid, i, registry, rng_for(seed, "vsd", i),
                              policy=policy if i in config.corrupted else None,
                              offset=config.manipulation_offset)
        if config.scripts and i in config.scripts:
            script = config.scripts[i]
        else:
            script = vemu_sample(sid, dist, rng_for(seed, "vemu", i))
        transcript.record("voting", f"voter-{i}", "script", {"script": script})
        events, complained = voter_vote_loop(script, sid, i, intents[i - 1], pk,
                                             device, checker, ea_accept)
        for ev in events:
            transcript.record("voting", f"voter-{i}", ev["kind"],
                              {key: val for key, val in ev.items() if key != "kind"})
        if complained:
            complaints.append({"voter": i})

    # Tally: close, mix with proof, threshold-decrypt, count.
    phase_box[0] = "tally"
    missing = [i for i in range(1, n + 1) if i not in ledger]
    if missing:
        raise CeremonyError(f"voters {missing} have no accepted ballot to mix")

    mix_inputs = dict(ledger)
    if config.tamper == "mix-non-last":
        revoters = [i for i in range(1, n + 1) if accepted_counts.get(i, 0) >= 2]
        if not revoters:
            raise CeremonyError("mix-non-last tamper needs a voter with two ballots")
        # prefer a voter whose first and last ballots differ as ciphertexts;
        # in the tiny group they can collide, in which case shifting the
        # first ballot still yields a valid encryption that is not the
        # recorded last one
        revoter = next((i for i in revoters if first_ballot[i] != ledger[i]), revoters[0])
        substituted = first_ballot[revoter]
        if substituted == ledger[revoter]:
            substituted = rerandomize(pk, substituted, 1)
        mix_inputs[revoter] = substituted

    inputs = tuple(mix_inputs[i] for i in range(1, n + 1))
    mix_rng = rng_for(seed, "ea.mix")
    perm = list(range(n))
    mix_rng.shuffle(perm)
    rands = tuple(params.random_scalar(mix_rng) for _ in range(n))
    outputs = tuple(rerandomize(pk, inputs[perm[i]], rands[i]) for i in range(n))
    statement = ShuffleStatement(pk=pk, inputs=inputs, outputs=outputs)
    proof = prove_shuffle(statement, ShuffleWitness(perm=tuple(perm), rands=rands),
                          rng_for(seed, "ea.proof"))

    posted_outputs = list(outputs)
    if config.tamper == "tamper-shuffle-output":
        trng = rng_for(seed, "tamper")
        while True:
            fake = encrypt(pk, trng.randrange(config.candidate_bound),
                           params.random_scalar(trng))
            if fake != outputs[0]:
                break
        posted_outputs[0] = fake
    board.priv_post(sid, {
        "kind": "shuffle",
        "inputs": [[c.c1, c.c2] for c in inputs],
        "outputs": [[c.c1, c.c2] for c in posted_outputs],
        "proof": serialize_proof(proof).hex(),
    })
    transcript.record("tally", "EA", "mix", {"ballots": n})

    for trustee_id in range(1, k + 1):
        dec.submit_key(trustee_id)
        transcript.record("tally", f"trustee-{trustee_id}", "key-submit", {})
    dec.decrypt_and_post()

    pub_snap, _ = board.read(sid, ROLE_AUDITOR)
    plaintexts = None
    for _seq, entry in reversed(pub_snap):
        if isinstance(entry, dict) and entry.get("kind") == "plaintexts":
            plaintexts = entry["values"]
            break
    tally = tally_alg(plaintexts, config.candidate_bound)
    board.pub_post(sid, {"kind": "tally", "counts": {str(c): v for c, v in tally.items()}})

    # Audit: the five checks, then the verdict.
    phase_box[0] = "audit"
    dec_ok = dec.audit()
    _pub, priv_snap = board.read(sid, ROLE_AUDITOR)
    verdict = _audit_core(sid, registry, pk, priv_snap, n, dec_ok, bool(complaints))

    sk_value = reconstruct([kg.share_for(j) for j in range(1, t + 1)], t, params.q)
    transcript.record("audit", "simulator", "registry-dump", {"rows": registry.dump()})
    transcript.record("audit", "simulator", "election-key", {"sk": sk_value})
    transcript.record("audit", "auditor", "verdict",
                      {"valid": verdict.valid, "reason": verdict.reason})
    return ElectionResult(transcript, tally, verdict)


def _replay_board(transcript: ElectionTranscript, which: str):
    entries = []
    for e in transcript.events_of(f"{which}-post"):
        payload = e["payload"]
        entries.append((payload["board_seq"], payload["entry"]))
    return entries


def _replay_dec_ok(params, sk_value: int, priv_entries, pub_entries) -> bool:
    shuffle_entry = None
    for _seq, e in reversed(priv_entries):
        if isinstance(e, dict) and e.get("kind") == "shuffle":
            shuffle_entry = e
            break
    posted = None
    for _seq, e in reversed(pub_entries):
        if isinstance(e, dict) and e.get("kind") == "plaintexts":
            posted = e["values"]
            break
    if shuffle_entry is None or posted is None:
        return False
    sk = SecretKey(params, int(sk_value))
    recomputed = []
    for a, b in shuffle_entry["outputs"]:
        try:
            recomputed.append(decrypt(sk, Ciphertext(int(a), int(b))))
        except NotACandidate:
            recomputed.append(REJECTED_PLAINTEXT)
    return [int(v) for v in posted] == recomputed


def audit_transcript(transcript: ElectionTranscript):
    """Re-run the audit from a stored transcript.

    Returns (recomputed verdict, recorded verdict); raises ReplayError
    when the transcript lacks the pieces the audit needs."""
    man = transcript.manifest
    needed = {"sid", "n_voters", "candidate_bound", "group_preset"}
    if not needed <= set(man):
        raise ReplayError(f"manifest missing {sorted(needed - set(man))}")
    params = setup(man["group_preset"], man["candidate_bound"])
    sid = man["sid"]

    pub_entries = _replay_board(transcript, "pub")
    priv_entries = _replay_board(transcript, "priv")

    pk_h = None
    for _seq, e in pub_entries:
        if isinstance(e, dict) and e.get("kind") == "pubkey":
            pk_h = int(e["h"])
            break
    if pk_h is None:
        raise ReplayError("no public key on the recorded board")
    pk = PublicKey(params, pk_h)

    dumps = transcript.events_of("registry-dump")
    keys = transcript.events_of("election-key")
    verdicts = transcript.events_of("verdict")
    if not dumps or not keys or not verdicts:
        raise ReplayError("transcript is missing audit material")
    registry = CertRegistry.from_dump(sid, dumps[-1]["payload"]["rows"])
    sk_value = keys[-1]["payload"]["sk"]
    recorded = AuditVerdict(bool(verdicts[-1]["payload"]["valid"]),
                            verdicts[-1]["payload"]["reason"])

    has_complaint = bool(transcript.events_of("complaint"))
    dec_ok = _replay_dec_ok(params, sk_value, priv_entries, pub_entries)
    recomputed = _audit_core(sid, registry, pk, priv_entries,
                             int(man["n_voters"]), dec_ok, has_complaint)
    return recomputed, recorded
