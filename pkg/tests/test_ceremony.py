"""End-to-end election runs, the audit chain, and transcript replay."""

import json
import random
from collections import Counter

import pytest

from ivxvsim.adversary import ManipulationPolicy
from ivxvsim.ceremony import (
    TAMPER_MODES,
    AuditVerdict,
    CeremonyError,
    ElectionConfig,
    ElectionTranscript,
    ReplayError,
    audit_transcript,
    ea_accept_ballot,
    run_election,
    tally_alg,
)
from ivxvsim.functionalities import (
    REJECTED_PLAINTEXT,
    Ballot,
    BulletinBoard,
    CertRegistry,
    KeyGenService,
    VotingDevice,
)
from ivxvsim.groups import setup

SID = "election-1"


def honest_config(**kw):
    base = dict(n_voters=6, n_trustees=3, threshold=2, candidate_bound=3, seed=5)
    base.update(kw)
    return ElectionConfig(**base)


def corrupted_config(**kw):
    base = dict(
        n_voters=6, n_trustees=3, threshold=2, candidate_bound=3, seed=5,
        corrupted=(1,), policy=ManipulationPolicy.always(),
    )
    base.update(kw)
    return ElectionConfig(**base)


# ------------------------------------------------------------- tally_alg

def test_tally_alg_counts_plaintexts():
    assert tally_alg([0, 1, 1, 2]) == {0: 1, 1: 2, 2: 1}
    assert tally_alg([]) == {}


def test_tally_alg_is_order_invariant():
    rng = random.Random(0)
    votes = [rng.randrange(5) for _ in range(40)]
    shuffled = votes[:]
    rng.shuffle(shuffled)
    assert tally_alg(votes) == tally_alg(shuffled)


def test_tally_alg_buckets_rejected_values():
    got = tally_alg([0, -1, 2, 9], candidate_bound=3)
    assert got == {REJECTED_PLAINTEXT: 2, 0: 1, 2: 1}


# --------------------------------------------------------- honest elections

def test_honest_election_is_valid_and_tally_matches_intents():
    result = run_election(honest_config())
    assert result.verdict == AuditVerdict(True, None)
    intents = result.transcript.manifest["intents"]
    assert result.tally == dict(Counter(intents))


def test_honest_election_many_seeds():
    for seed in range(12):
        result = run_election(honest_config(seed=seed, n_voters=4))
        assert result.verdict.valid, seed
        intents = result.transcript.manifest["intents"]
        assert result.tally == dict(Counter(intents)), seed


def test_fixed_intents_are_respected():
    result = run_election(honest_config(n_voters=3, intents=(2, 2, 0)))
    assert result.tally == {0: 1, 2: 2}


def test_transcripts_are_seed_deterministic():
    a = run_election(honest_config()).transcript.to_jsonl()
    b = run_election(honest_config()).transcript.to_jsonl()
    assert a == b


def test_transcripts_differ_across_seeds():
    a = run_election(honest_config(seed=1)).transcript.to_jsonl()
    b = run_election(honest_config(seed=2)).transcript.to_jsonl()
    assert a.splitlines()[1:] != b.splitlines()[1:]


def test_event_phases_progress_in_order():
    result = run_election(honest_config())
    order = {"preparation": 0, "voting": 1, "tally": 2, "audit": 3}
    phases = [order[e["phase"]] for e in result.transcript.events]
    assert phases == sorted(phases)
    assert set(phases) == {0, 1, 2, 3}


def test_standard_group_election():
    cfg = honest_config(n_voters=2, group_preset="standard", seed=3)
    result = run_election(cfg)
    assert result.verdict.valid
    intents = result.transcript.manifest["intents"]
    assert result.tally == dict(Counter(intents))


# ------------------------------------------------------------ vote scripts

def events_for_voter(transcript, voter_id, kinds):
    actor = f"voter-{voter_id}"
    return [e for e in transcript.events
            if e["actor"] == actor and e["kind"] in kinds]


def test_revote_script_casts_twice():
    result = run_election(honest_config(scripts={1: "VV"}))
    casts = events_for_voter(result.transcript, 1, {"cast"})
    assert len(casts) == 2
    assert result.verdict.valid


def test_honest_check_passes_without_complaint():
    result = run_election(honest_config(scripts={2: "VC"}))
    checks = events_for_voter(result.transcript, 2, {"check"})
    assert len(checks) == 1
    assert checks[0]["payload"]["matches"] == 1
    assert not events_for_voter(result.transcript, 2, {"complaint"})
    assert result.verdict.valid


def test_last_ballot_is_the_counted_one_honest_first_cast_bad():
    # Policy manipulates the first cast only; the re-vote repairs it.
    policy = ManipulationPolicy.from_table({"": True, "V": False})
    cfg = honest_config(n_voters=3, intents=(1, 0, 2), corrupted=(1,),
                        policy=policy, scripts={1: "VV"})
    result = run_election(cfg)
    assert result.verdict.valid
    assert result.tally == {0: 1, 1: 1, 2: 1}


def test_last_ballot_is_the_counted_one_final_cast_bad():
    # Honest first cast, manipulated re-vote: the tally shifts by the offset.
    policy = ManipulationPolicy.from_table({"": False, "V": True})
    cfg = honest_config(n_voters=3, intents=(1, 0, 2), corrupted=(1,),
                        policy=policy, scripts={1: "VV"})
    result = run_election(cfg)
    assert result.tally == {0: 1, 2: 2}  # voter 1 counted as (1+1) % 3


def test_manipulated_check_complains_and_halts():
    cfg = corrupted_config(scripts={1: "VCV"})
    result = run_election(cfg)
    assert result.verdict == AuditVerdict(False, "complaint")
    casts = events_for_voter(result.transcript, 1, {"cast"})
    assert len(casts) == 1  # the trailing V never happens after the complaint
    complaints = events_for_voter(result.transcript, 1, {"complaint"})
    assert len(complaints) == 1


def test_detection_implies_invalid_across_seeds():
    for seed in range(20):
        cfg = corrupted_config(seed=seed, scripts={1: "VC"})
        result = run_election(cfg)
        assert result.verdict == AuditVerdict(False, "complaint"), seed


def test_silent_manipulation_passes_the_audit():
    # Nobody checks, so the tampered tally sails through: the gap the
    # detection math quantifies.
    cfg = corrupted_config(n_voters=3, intents=(1, 0, 2), scripts={1: "V"})
    result = run_election(cfg)
    assert result.verdict.valid
    assert result.tally == {0: 1, 2: 2}


# ------------------------------------------------------------ EA behaviors

def test_ea_accept_ballot_records_and_overwrites():
    params = setup("toy", 3)
    board = BulletinBoard(SID)
    reg = CertRegistry()
    kg = KeyGenService(SID, params, 2, 3, random.Random(0))
    for j in (1, 2, 3):
        kg.ready(j)
    pk = kg.pubkey()
    dev = VotingDevice(SID, 1, reg, random.Random(1))
    ledger = {}
    b1, _ = dev.cast(pk, 0)
    b2, _ = dev.cast(pk, 2)
    assert ea_accept_ballot(SID, reg, board, ledger, b1)
    assert ea_accept_ballot(SID, reg, board, ledger, b2)
    assert ledger[1] == b2.c  # the ledger tracks the latest accepted ballot
    assert len(board.snapshot()[1]) == 2


def test_ea_accept_ballot_rejects_forged_signature():
    params = setup("toy", 3)
    board = BulletinBoard(SID)
    reg = CertRegistry()
    kg = KeyGenService(SID, params, 2, 3, random.Random(0))
    for j in (1, 2, 3):
        kg.ready(j)
    pk = kg.pubkey()
    dev = VotingDevice(SID, 1, reg, random.Random(1))
    ballot, _ = dev.cast(pk, 0)
    forged = Ballot(ballot.ssid, ballot.c, "f" * 32)
    ledger = {}
    assert not ea_accept_ballot(SID, reg, board, ledger, forged)
    assert ledger == {}
    assert board.snapshot()[1] == ()
    with pytest.raises(CeremonyError):
        ea_accept_ballot(SID, reg, board, ledger, forged, strict=True)


# ------------------------------------------------------------- tampering

TAMPER_REASONS = {
    "forge-signature": "bad-signature",
    "mix-non-last": "last-ballot-mismatch",
    "tamper-shuffle-output": "shuffle-proof",
    "tamper-plaintext": "decryption",
}


def tamper_config(mode, **kw):
    # Substituting a non-final ballot requires someone to have re-voted.
    if mode == "mix-non-last":
        kw.setdefault("scripts", {1: "VV"})
    return honest_config(tamper=mode, **kw)


@pytest.mark.parametrize("mode", TAMPER_MODES)
def test_tamper_modes_flip_the_verdict(mode):
    for seed in range(10):
        result = run_election(tamper_config(mode, seed=seed))
        assert result.verdict == AuditVerdict(False, TAMPER_REASONS[mode]), seed


def test_unknown_tamper_mode_rejected():
    with pytest.raises(ValueError):
        honest_config(tamper="melt-the-urn")


# ---------------------------------------------------------------- replay

def test_replay_agrees_with_recorded_verdict():
    result = run_election(honest_config())
    recomputed, recorded = audit_transcript(result.transcript)
    assert recomputed == recorded == result.verdict


@pytest.mark.parametrize("mode", TAMPER_MODES)
def test_replay_agrees_on_tampered_runs(mode):
    result = run_election(tamper_config(mode))
    recomputed, recorded = audit_transcript(result.transcript)
    assert recomputed == recorded
    assert not recomputed.valid


def test_replay_detects_transcript_edits():
    result = run_election(honest_config())
    text = result.transcript.to_jsonl()
    lines = text.splitlines()
    edited = []
    done = False
    for line in lines:
        obj = json.loads(line)
        if not done and obj.get("kind") == "priv-post" \
                and obj["payload"]["entry"].get("kind") == "ballot":
            obj["payload"]["entry"]["c"][1] ^= 1  # flip one ciphertext bit
            done = True
        edited.append(json.dumps(obj, sort_keys=True, separators=(",", ":")))
    assert done
    transcript = ElectionTranscript.from_jsonl("\n".join(edited) + "\n")
    recomputed, recorded = audit_transcript(transcript)
    assert recorded.valid
    assert not recomputed.valid


def test_transcript_jsonl_roundtrip():
    result = run_election(honest_config())
    text = result.transcript.to_jsonl()
    back = ElectionTranscript.from_jsonl(text)
    assert back.to_jsonl() == text
    assert back.manifest == result.transcript.manifest


def test_from_jsonl_rejects_malformed_input():
    result = run_election(honest_config(n_voters=2))
    lines = result.transcript.to_jsonl().splitlines()
    with pytest.raises(ReplayError):
        ElectionTranscript.from_jsonl("")
    with pytest.raises(ReplayError):
        ElectionTranscript.from_jsonl("not json\n")
    with pytest.raises(ReplayError):
        # events out of order
        ElectionTranscript.from_jsonl(
            "\n".join([lines[0]] + lines[2:3] + lines[1:2]) + "\n")
    broken = json.loads(lines[1])
    del broken["seq"]
    with pytest.raises(ReplayError):
        ElectionTranscript.from_jsonl(
            lines[0] + "\n" + json.dumps(broken) + "\n")


def test_replay_needs_audit_material():
    result = run_election(honest_config(n_voters=2))
    lines = [l for l in result.transcript.to_jsonl().splitlines()
             if '"election-key"' not in l]
    transcript = ElectionTranscript.from_jsonl("\n".join(lines) + "\n")
    with pytest.raises(ReplayError):
        audit_transcript(transcript)


# ---------------------------------------------------------- configuration

def test_config_validation_errors():
    with pytest.raises(ValueError):
        honest_config(threshold=4)  # above trustee count
    with pytest.raises(ValueError):
        honest_config(n_voters=0)
    with pytest.raises(ValueError):
        honest_config(corrupted=(9,), policy=ManipulationPolicy.always())
    with pytest.raises(ValueError):
        honest_config(corrupted=(1,))  # corrupted voters need a policy
    with pytest.raises(ValueError):
        honest_config(intents=(0, 1))  # wrong length
    with pytest.raises(ValueError):
        honest_config(n_voters=2, intents=(0, 5))  # out of range
    with pytest.raises(ValueError):
        honest_config(scripts={7: "V"})  # unknown voter
    with pytest.raises(ValueError):
        honest_config(scripts={1: "CV"})  # malformed pattern


def test_threshold_strict_election_runs():
    cfg = honest_config(threshold_strict=True)
    assert run_election(cfg).verdict.valid
