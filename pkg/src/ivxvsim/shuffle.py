"""Non-interactive proof that one ciphertext list is a permuted
re-randomization of another.

The argument commits to a permutation matrix and proves, against a
hash-derived challenge vector u, that the committed matrix maps u to a
hidden vector u~ with the same product (a chain of Pedersen-style
commitments carries the running product), and that the same hidden u~
links the aggregated input and output ciphertexts.  All verifier
challenges are replaced by hash-to-scalar over a canonical transcript
serialization.

Soundness of a single repetition degrades with the group order, so the
whole argument is repeated `security_rounds(q)` times with independent
challenges; the 2048-bit preset needs one round, the toy group twenty.

Commitment generators are derived by hashing into the group, so no
trusted setup is involved.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache

from .elgamal import Ciphertext, PublicKey, rerandomize
from .groups import GroupParams, hash_to_element

FS_DOMAIN = b"ivxvsim/shuffle-v1"
PROOF_MAGIC = b"IVXVSHF1"

# Target grinding resistance of ~2^80 across repetitions.
_ROUND_TARGET_BITS = 80


class BadWitness(ValueError):
    """Witness does not reproduce the statement's outputs from its inputs."""


def security_rounds(q: int) -> int:
    """Number of parallel repetitions needed for challenge space q."""
    return max(1, -(-_ROUND_TARGET_BITS // q.bit_length()))


def fs_challenge(transcript: bytes, q: int, tag: bytes = FS_DOMAIN) -> int:
    """Deterministic, domain-separated hash of a transcript to a scalar mod q.

    The digest is expanded with a counter until it exceeds the order by
    128 bits, keeping the reduction bias negligible.
    """
    need = (q.bit_length() + 128 + 7) // 8
    out = b""
    counter = 0
    while len(out) < need:
        out += hashlib.sha256(tag + b"|" + counter.to_bytes(4, "big") + b"|" + transcript).digest()
        counter += 1
    return int.from_bytes(out[:need], "big") % q


def _int_bytes(x: int) -> bytes:
    raw = x.to_bytes((x.bit_length() + 7) // 8 or 1, "big")
    return len(raw).to_bytes(4, "big") + raw


def _read_int(blob: bytes, pos: int) -> tuple[int, int]:
    if pos + 4 > len(blob):
        raise ValueError("truncated serialization")
    size = int.from_bytes(blob[pos : pos + 4], "big")
    pos += 4
    if size == 0 or pos + size > len(blob):
        raise ValueError("truncated serialization")
    return int.from_bytes(blob[pos : pos + size], "big"), pos + size


@dataclass(frozen=True)
class ShuffleStatement:
    pk: PublicKey
    inputs: tuple[Ciphertext, ...]
    outputs: tuple[Ciphertext, ...]

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(Ciphertext(*c) for c in self.inputs))
        object.__setattr__(self, "outputs", tuple(Ciphertext(*c) for c in self.outputs))
        if not self.inputs or len(self.inputs) != len(self.outputs):
            raise ValueError("statement needs equal, non-empty input and output lists")

    def to_bytes(self) -> bytes:
        params = self.pk.params
        parts = [b"stmt", _int_bytes(params.p), _int_bytes(params.q), _int_bytes(params.g),
                 _int_bytes(self.pk.h), len(self.inputs).to_bytes(4, "big")]
        for ct in self.inputs + self.outputs:
            parts.append(_int_bytes(ct.c1))
            parts.append(_int_bytes(ct.c2))
        return b"".join(parts)


@dataclass(frozen=True)
class ShuffleWitness:
    perm: tuple[int, ...]     # outputs[i] re-randomizes inputs[perm[i]]
    rands: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "perm", tuple(self.perm))
        object.__setattr__(self, "rands", tuple(self.rands))
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError("perm is not a permutation of range(n)")
        if len(self.rands) != len(self.perm):
            raise ValueError("rands length must match perm length")


@dataclass(frozen=True)
class ProofRound:
    perm_commits: tuple[int, ...]
    chain_commits: tuple[int, ...]
    t1: int
    t2: int
    t3: int
    t4a: int
    t4b: int
    t_hat: tuple[int, ...]
    s_bar: int
    s_dot: int
    s_tld: int
    s_r: int
    s_hat: tuple[int, ...]
    s_prm: tuple[int, ...]


@dataclass(frozen=True)
class ShuffleProof:
    n: int
    rounds: tuple[ProofRound, ...]


@lru_cache(maxsize=None)
def _generators(p: int, q: int, g: int, n: int) -> tuple[int, tuple[int, ...]]:
    params = GroupParams(p=p, q=q, g=g, candidate_bound=1)
    base = hash_to_element(params, b"commit-base", 0)
    gens = tuple(hash_to_element(params, b"commit-gen", i) for i in range(n))
    return base, gens


def _challenge_vector(stmt_digest: bytes, rnd: int, perm_commits, q: int) -> list[int]:
    prefix = stmt_digest + rnd.to_bytes(4, "big") + b"".join(_int_bytes(c) for c in perm_commits)
    return [fs_challenge(b"u|" + prefix + i.to_bytes(4, "big"), q) for i in range(len(perm_commits))]


def _round_gamma(stmt_digest: bytes, rnd: int, r: ProofRound, q: int) -> int:
    parts = [stmt_digest, rnd.to_bytes(4, "big")]
    for group in (r.perm_commits, r.chain_commits, (r.t1, r.t2, r.t3, r.t4a, r.t4b), r.t_hat):
        parts.extend(_int_bytes(x) for x in group)
    return fs_challenge(b"gamma|" + b"".join(parts), q)


def prove_shuffle(statement: ShuffleStatement, witness: ShuffleWitness, rng) -> ShuffleProof:
    """Produce a proof accepted by verify_shuffle; O(n) exponentiations
    per repetition."""
    pk = statement.pk
    params = pk.params
    p, q, g, y = params.p, params.q, params.g, pk.h
    n = len(statement.inputs)
    perm, rands = witness.perm, witness.rands
    if len(perm) != n:
        raise ValueError("witness length does not match statement")
    for i in range(n):
        if rerandomize(pk, statement.inputs[perm[i]], rands[i]) != statement.outputs[i]:
            raise BadWitness(f"output {i} is not a re-randomization of input {perm[i]}")

    base, gens = _generators(p, q, g, n)
    stmt_digest = hashlib.sha256(statement.to_bytes()).digest()
    rounds = []
    for rnd in range(security_rounds(q)):
        rho = [rng.randrange(q) for _ in range(n)]
        commits = [0] * n
        for i in range(n):
            commits[perm[i]] = pow(g, rho[perm[i]], p) * gens[i] % p
        u = _challenge_vector(stmt_digest, rnd, commits, q)
        u_tld = [u[perm[i]] for i in range(n)]

        rho_hat = [rng.randrange(q) for _ in range(n)]
        chain = []
        prev = base
        for i in range(n):
            prev = pow(g, rho_hat[i], p) * pow(prev, u_tld[i], p) % p
            chain.append(prev)

        rho_bar = sum(rho) % q
        rho_dot = 0
        for i in range(n):
            rho_dot = (rho_hat[i] + u_tld[i] * rho_dot) % q
        rho_tld = sum(r_j * u_j for r_j, u_j in zip(rho, u)) % q
        r_tld = sum(rands[i] * u_tld[i] for i in range(n)) % q

        w_bar, w_dot, w_tld, w_r = (rng.randrange(q) for _ in range(4))
        w_hat = [rng.randrange(q) for _ in range(n)]
        w_prm = [rng.randrange(q) for _ in range(n)]

        t1 = pow(g, w_bar, p)
        t2 = pow(g, w_dot, p)
        t3 = pow(g, w_tld, p)
        t4a = pow(g, -w_r % q, p)
        t4b = pow(y, -w_r % q, p)
        for i in range(n):
            t3 = t3 * pow(gens[i], w_prm[i], p) % p
            t4a = t4a * pow(statement.outputs[i].c1, w_prm[i], p) % p
            t4b = t4b * pow(statement.outputs[i].c2, w_prm[i], p) % p
        t_hat = []
        prev = base
        for i in range(n):
            t_hat.append(pow(g, w_hat[i], p) * pow(prev, w_prm[i], p) % p)
            prev = chain[i]

        partial = ProofRound(
            perm_commits=tuple(commits), chain_commits=tuple(chain),
            t1=t1, t2=t2, t3=t3, t4a=t4a, t4b=t4b, t_hat=tuple(t_hat),
            s_bar=0, s_dot=0, s_tld=0, s_r=0, s_hat=(), s_prm=(),
        )
        gamma = _round_gamma(stmt_digest, rnd, partial, q)

        rounds.append(ProofRound(
            perm_commits=tuple(commits),
            chain_commits=tuple(chain),
            t1=t1, t2=t2, t3=t3, t4a=t4a, t4b=t4b, t_hat=tuple(t_hat),
            s_bar=(w_bar + gamma * rho_bar) % q,
            s_dot=(w_dot + gamma * rho_dot) % q,
            s_tld=(w_tld + gamma * rho_tld) % q,
            s_r=(w_r + gamma * r_tld) % q,
            s_hat=tuple((w_hat[i] + gamma * rho_hat[i]) % q for i in range(n)),
            s_prm=tuple((w_prm[i] + gamma * u_tld[i]) % q for i in range(n)),
        ))
    return ShuffleProof(n=n, rounds=tuple(rounds))


def _verify_round(statement: ShuffleStatement, stmt_digest: bytes, rnd: int, pr: ProofRound) -> bool:
    pk = statement.pk
    params = pk.params
    p, q, g, y = params.p, params.q, params.g, pk.h
    n = len(statement.inputs)
    base, gens = _generators(p, q, g, n)

    if not (len(pr.perm_commits) == len(pr.chain_commits) == len(pr.t_hat)
            == len(pr.s_hat) == len(pr.s_prm) == n):
        return False
    elements = (*pr.perm_commits, *pr.chain_commits, pr.t1, pr.t2, pr.t3, pr.t4a, pr.t4b, *pr.t_hat)
    if not all(params.is_element(x) for x in elements):
        return False
    if not all(0 <= s < q for s in (pr.s_bar, pr.s_dot, pr.s_tld, pr.s_r, *pr.s_hat, *pr.s_prm)):
        return False

    u = _challenge_vector(stmt_digest, rnd, pr.perm_commits, q)
    gamma = _round_gamma(stmt_digest, rnd, pr, q)

    prod_u = 1
    for u_j in u:
        prod_u = prod_u * u_j % q

    c_bar = 1
    for c_j in pr.perm_commits:
        c_bar = c_bar * c_j % p
    for h_j in gens:
        c_bar = c_bar * pow(h_j, -1, p) % p
    if pow(g, pr.s_bar, p) != pr.t1 * pow(c_bar, gamma, p) % p:
        return False

    c_dot = pr.chain_commits[-1] * pow(pow(base, prod_u, p), -1, p) % p
    if pow(g, pr.s_dot, p) != pr.t2 * pow(c_dot, gamma, p) % p:
        return False

    c_tld = 1
    for c_j, u_j in zip(pr.perm_commits, u):
        c_tld = c_tld * pow(c_j, u_j, p) % p
    lhs = pow(g, pr.s_tld, p)
    for h_i, s_i in zip(gens, pr.s_prm):
        lhs = lhs * pow(h_i, s_i, p) % p
    if lhs != pr.t3 * pow(c_tld, gamma, p) % p:
        return False

    agg_a = agg_b = 1
    for ct, u_j in zip(statement.inputs, u):
        agg_a = agg_a * pow(ct.c1, u_j, p) % p
        agg_b = agg_b * pow(ct.c2, u_j, p) % p
    lhs_a = pow(g, -pr.s_r % q, p)
    lhs_b = pow(y, -pr.s_r % q, p)
    for ct, s_i in zip(statement.outputs, pr.s_prm):
        lhs_a = lhs_a * pow(ct.c1, s_i, p) % p
        lhs_b = lhs_b * pow(ct.c2, s_i, p) % p
    if lhs_a != pr.t4a * pow(agg_a, gamma, p) % p:
        return False
    if lhs_b != pr.t4b * pow(agg_b, gamma, p) % p:
        return False

    prev = base
    for i in range(n):
        lhs = pow(g, pr.s_hat[i], p) * pow(prev, pr.s_prm[i], p) % p
        if lhs != pr.t_hat[i] * pow(pr.chain_commits[i], gamma, p) % p:
            return False
        prev = pr.chain_commits[i]
    return True


def verify_shuffle(statement: ShuffleStatement, proof) -> bool:
    """Check a proof against a statement.  Accepts either a ShuffleProof
    or its byte serialization; anything malformed is a reject, not an
    error."""
    if isinstance(proof, (bytes, bytearray)):
        try:
            proof = deserialize_proof(bytes(proof))
        except ValueError:
            return False
    params = statement.pk.params
    n = len(statement.inputs)
    if proof.n != n or len(proof.rounds) != security_rounds(params.q):
        return False
    if not all(params.is_element(x) for ct in statement.inputs + statement.outputs for x in ct):
        return False
    stmt_digest = hashlib.sha256(statement.to_bytes()).digest()
    return all(_verify_round(statement, stmt_digest, rnd, pr)
               for rnd, pr in enumerate(proof.rounds))


def serialize_proof(proof: ShuffleProof) -> bytes:
    parts = [PROOF_MAGIC, proof.n.to_bytes(4, "big"), len(proof.rounds).to_bytes(4, "big")]
    for pr in proof.rounds:
        for group in (pr.perm_commits, pr.chain_commits,
                      (pr.t1, pr.t2, pr.t3, pr.t4a, pr.t4b),
                      pr.t_hat, (pr.s_bar, pr.s_dot, pr.s_tld, pr.s_r),
                      pr.s_hat, pr.s_prm):
            parts.extend(_int_bytes(x) for x in group)
    return b"".join(parts)


def deserialize_proof(blob: bytes) -> ShuffleProof:
    if blob[: len(PROOF_MAGIC)] != PROOF_MAGIC:
        raise ValueError("bad proof header")
    pos = len(PROOF_MAGIC)
    if pos + 8 > len(blob):
        raise ValueError("truncated serialization")
    n = int.from_bytes(blob[pos : pos + 4], "big")
    n_rounds = int.from_bytes(blob[pos + 4 : pos + 8], "big")
    pos += 8
    if n == 0 or n > 2**20 or n_rounds == 0 or n_rounds > 2**10:
        raise ValueError("implausible proof dimensions")

    def take(count):
        nonlocal pos
        vals = []
        for _ in range(count):
            v, pos = _read_int(blob, pos)
            vals.append(v)
        return vals

    rounds = []
    for _ in range(n_rounds):
        perm_commits = take(n)
        chain_commits = take(n)
        t1, t2, t3, t4a, t4b = take(5)
        t_hat = take(n)
        s_bar, s_dot, s_tld, s_r = take(4)
        s_hat = take(n)
        s_prm = take(n)
        rounds.append(ProofRound(
            perm_commits=tuple(perm_commits), chain_commits=tuple(chain_commits),
            t1=t1, t2=t2, t3=t3, t4a=t4a, t4b=t4b, t_hat=tuple(t_hat),
            s_bar=s_bar, s_dot=s_dot, s_tld=s_tld, s_r=s_r,
            s_hat=tuple(s_hat), s_prm=tuple(s_prm),
        ))
    if pos != len(blob):
        raise ValueError("trailing bytes after proof")
    return ShuffleProof(n=n, rounds=tuple(rounds))
