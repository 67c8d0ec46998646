"""Keys, attached signatures, and the nested-signature proof of solving.

The scheme in one breath: a challenge's flag is stretched through scrypt
with a public per-challenge salt, and the 32-byte output seeds a
deterministic Ed25519 key pair (sk_c, pk_c).  Only pk_c is published, so
holding sk_c is equivalent to knowing the flag.  A team proves it solved
challenge c by signing c's identifier with its team key and then signing
that signed message with the challenge key:

    proof = sign(challenge_secret, sign(team_secret, challenge_id))

Anyone can verify with the two public keys alone; peeling both layers must
recover exactly the challenge identifier.  The proof binds team and
challenge together: it cannot be replayed by another team, and it reveals
nothing about the flag beyond the fact that someone derived its key.

Signatures use the attached framing `signature || message`, so one layer's
output is the next layer's message.  Verification failure is the value
INVALID, never an exception; exceptions are reserved for malformed inputs.
"""

from __future__ import annotations

import base64
import hashlib
from dataclasses import dataclass

from . import ed25519

SEED_LEN = 32
SALT_LEN = 16
SIGNATURE_LEN = 64

ASCII_WHITESPACE = " \t\r\n\v\f"

# scrypt memory ceiling accepted by hashlib/OpenSSL
_MAXMEM_CAP = 2**31 - 1


class _Invalid:
    """Distinguished verification-failure outcome (falsy singleton)."""

    __slots__ = ()

    def __bool__(self) -> bool:
        return False

    def __repr__(self) -> str:
        return "INVALID"


INVALID = _Invalid()


@dataclass(frozen=True, slots=True)
class KeyPair:
    """secret is the 32-byte signing seed; public the verification key."""

    secret: bytes
    public: bytes

    def __post_init__(self) -> None:
        if len(self.secret) != SEED_LEN or len(self.public) != SEED_LEN:
            raise ValueError("keys must be exactly 32 bytes each")


@dataclass(frozen=True, slots=True)
class KdfParams:
    """scrypt cost parameters recorded alongside every challenge.

    They travel with the challenge descriptor so that verifiers never have
    to guess how a flag was stretched.  cost_n is the CPU/memory cost (a
    power of two), block_r the block-size factor, parallel_p the
    parallelization factor; out_len is fixed to the seed length.
    """

    cost_n: int
    block_r: int = 8
    parallel_p: int = 1
    out_len: int = SEED_LEN

    def __post_init__(self) -> None:
        if self.cost_n < 2 or self.cost_n & (self.cost_n - 1):
            raise ValueError("cost_n must be a power of two >= 2")
        if self.block_r < 1 or self.parallel_p < 1:
            raise ValueError("block_r and parallel_p must be >= 1")
        if self.out_len != SEED_LEN:
            raise ValueError(f"out_len must be {SEED_LEN}")
        if self.maxmem() > _MAXMEM_CAP:
            raise ValueError("cost parameters exceed the supported memory budget")

    def maxmem(self) -> int:
        return 128 * self.block_r * (self.cost_n + self.parallel_p) + (1 << 20)

    def to_json_dict(self) -> dict:
        return {
            "cost_n": self.cost_n,
            "block_r": self.block_r,
            "parallel_p": self.parallel_p,
            "out_len": self.out_len,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "KdfParams":
        if not isinstance(obj, dict) or set(obj) != {
            "cost_n",
            "block_r",
            "parallel_p",
            "out_len",
        }:
            raise ValueError("malformed KDF parameter record")
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in obj.values()):
            raise ValueError("KDF parameters must be integers")
        return cls(
            cost_n=obj["cost_n"],
            block_r=obj["block_r"],
            parallel_p=obj["parallel_p"],
            out_len=obj["out_len"],
        )

    @classmethod
    def competition(cls) -> "KdfParams":
        """Production profile: slow enough to make offline flag search
        unattractive for the duration of an event."""
        return cls(cost_n=2**15)

    @classmethod
    def test(cls) -> "KdfParams":
        """Cheap profile for test suites and local experiments."""
        return cls(cost_n=2**4)


PROFILES = {"competition": KdfParams.competition, "test": KdfParams.test}


@dataclass(frozen=True, slots=True)
class SignedMessage:
    """Attached signature: serializes as signature || message."""

    signature: bytes
    message: bytes

    def __post_init__(self) -> None:
        if len(self.signature) != SIGNATURE_LEN:
            raise ValueError("signature must be exactly 64 bytes")

    def serialize(self) -> bytes:
        return self.signature + self.message

    @classmethod
    def parse(cls, raw: bytes) -> "SignedMessage":
        if len(raw) < SIGNATURE_LEN:
            raise ValueError("signed message shorter than one signature")
        return cls(signature=raw[:SIGNATURE_LEN], message=raw[SIGNATURE_LEN:])


@dataclass(frozen=True, slots=True)
class Proof:
    """Nested proof of solving: outer_sig || inner_sig || challenge_id.

    The inner signature is the team key over the challenge identifier; the
    outer signature is the challenge key over the whole inner layer.
    """

    outer_sig: bytes
    inner_sig: bytes
    challenge_id: bytes

    def __post_init__(self) -> None:
        if len(self.outer_sig) != SIGNATURE_LEN or len(self.inner_sig) != SIGNATURE_LEN:
            raise ValueError("proof signatures must be exactly 64 bytes each")

    def serialize(self) -> bytes:
        return self.outer_sig + self.inner_sig + self.challenge_id

    @classmethod
    def parse(cls, raw: bytes) -> "Proof":
        if len(raw) < 2 * SIGNATURE_LEN:
            raise ValueError("proof shorter than two signatures")
        return cls(
            outer_sig=raw[:SIGNATURE_LEN],
            inner_sig=raw[SIGNATURE_LEN : 2 * SIGNATURE_LEN],
            challenge_id=raw[2 * SIGNATURE_LEN :],
        )

    def to_base64(self) -> str:
        return base64.b64encode(self.serialize()).decode("ascii")

    @classmethod
    def from_base64(cls, text: str) -> "Proof":
        raw = base64.b64decode(text.encode("ascii"), validate=True)
        return cls.parse(raw)


def keypair_from_seed(seed: bytes) -> KeyPair:
    """Deterministic key pair for a 32-byte seed (the seed is the secret)."""
    if len(seed) != SEED_LEN:
        raise ValueError("seed must be exactly 32 bytes")
    return KeyPair(secret=seed, public=ed25519.public_key(seed))


def normalize_flag(flag: str) -> bytes:
    """Strip leading/trailing ASCII whitespace, encode UTF-8; no case folding."""
    return flag.strip(ASCII_WHITESPACE).encode("utf-8")


def scrypt_kdf(
    password: bytes,
    salt: bytes,
    cost_n: int,
    block_r: int,
    parallel_p: int,
    out_len: int,
) -> bytes:
    """Raw scrypt (RFC 7914 parameter semantics), no length conventions."""
    maxmem = min(128 * block_r * (cost_n + parallel_p) + (1 << 20), _MAXMEM_CAP)
    return hashlib.scrypt(
        password,
        salt=salt,
        n=cost_n,
        r=block_r,
        p=parallel_p,
        maxmem=maxmem,
        dklen=out_len,
    )


def scrypt_seed(flag_bytes: bytes, salt: bytes, params: KdfParams) -> bytes:
    if len(salt) != SALT_LEN:
        raise ValueError(f"salt must be exactly {SALT_LEN} bytes")
    return scrypt_kdf(
        flag_bytes,
        salt,
        params.cost_n,
        params.block_r,
        params.parallel_p,
        params.out_len,
    )


def derive_challenge_keys(flag: str, salt: bytes, params: KdfParams) -> KeyPair:
    """Stretch the flag into the challenge key pair (deterministic)."""
    flag_bytes = normalize_flag(flag)
    if not flag_bytes:
        raise ValueError("flag is empty after normalization")
    return keypair_from_seed(scrypt_seed(flag_bytes, salt, params))


def sign(secret: bytes, message: bytes) -> SignedMessage:
    return SignedMessage(signature=ed25519.sign(secret, message), message=message)


def open_signed(public: bytes, signed: SignedMessage | bytes) -> bytes | _Invalid:
    """Return the message if the signature verifies, else INVALID.

    A raw byte string is parsed first; anything shorter than one signature
    raises (malformed input, not a verification failure).
    """
    if isinstance(signed, bytes):
        signed = SignedMessage.parse(signed)
    if ed25519.verify(public, signed.signature, signed.message):
        return signed.message
    return INVALID


def prove(team: KeyPair, challenge_secret: bytes, challenge_id: bytes) -> Proof:
    """Build the nested proof that this team solved this challenge."""
    if not challenge_id:
        raise ValueError("challenge_id must not be empty")
    inner = sign(team.secret, challenge_id)
    outer = sign(challenge_secret, inner.serialize())
    return Proof(
        outer_sig=outer.signature,
        inner_sig=inner.signature,
        challenge_id=challenge_id,
    )


def verify_proof(
    team_public: bytes,
    challenge_public: bytes,
    challenge_id: bytes,
    proof: Proof | bytes,
) -> bool:
    """Accept iff peeling both signature layers yields challenge_id.

    Needs only public values.  Structurally malformed proofs are rejected,
    never raised on.
    """
    if isinstance(proof, bytes):
        try:
            proof = Proof.parse(proof)
        except ValueError:
            return False
    outer = SignedMessage(
        signature=proof.outer_sig,
        message=proof.inner_sig + proof.challenge_id,
    )
    inner_raw = open_signed(challenge_public, outer)
    if inner_raw is INVALID:
        return False
    message = open_signed(team_public, SignedMessage.parse(inner_raw))
    if message is INVALID:
        return False
    return message == challenge_id


def check_flag(
    flag: str,
    salt: bytes,
    params: KdfParams,
    expected_public: bytes,
) -> bool:
    """True iff the flag derives the challenge's published public key."""
    if not normalize_flag(flag):
        return False
    return derive_challenge_keys(flag, salt, params).public == expected_public
