"""Competition domain on top of the ledger's file conventions.

State is nothing but files in the replayed ledger:

    meta/organizer.pub                 organizer verification key (genesis)
    meta/competition.json              free-form competition metadata
    challenges/<id>.json               public challenge descriptor
    teams/<team_id>/team.json          public team record
    submissions/<team_id>/<id>.json    accepted proof of solving

Descriptors carry everything a solver needs to derive the challenge key
(salt, KDF cost parameters, public key) and nothing the organizer must
keep secret: the flag and the challenge signing key are discarded the
moment a challenge is created.  The scoreboard and the full audit are pure
functions of the chain, so any replica can recompute both.
"""

from __future__ import annotations

import json
import re
import secrets
import unicodedata
from dataclasses import dataclass
from random import Random

from .canonical import canonical_bytes, from_b64, from_hex, to_hex
from .ledger import (
    Changeset,
    FileChange,
    LedgerEntry,
    LedgerState,
    organizer_key,
    verify_chain,
)
from . import sigproof
from ._ed25519_core import decompress
from .sigproof import KdfParams, KeyPair, Proof

SLUG_RE = re.compile(r"\A[a-z0-9-]{1,64}\Z")

CHALLENGE_PREFIX = "challenges/"
TEAM_PREFIX = "teams/"
SUBMISSION_PREFIX = "submissions/"

_TEAM_PATH_RE = re.compile(r"\Ateams/([a-z0-9-]{1,64})/team\.json\Z")
_SUBMISSION_PATH_RE = re.compile(
    r"\Asubmissions/([a-z0-9-]{1,64})/([a-z0-9-]{1,64})\.json\Z"
)
_CHALLENGE_PATH_RE = re.compile(r"\Achallenges/([a-z0-9-]{1,64})\.json\Z")


class FlagMismatch(Exception):
    """The supplied flag does not derive the challenge's public key."""


class AuditError(ValueError):
    """A ledger references records that do not exist in its own state."""


def slugify(name: str) -> str:
    """Team/display name -> path-safe identifier.

    Accents are transliterated, anything outside [a-z0-9] collapses to a
    single hyphen: "Team Épico" and "team-epico" intentionally map to the
    same slug.
    """
    ascii_name = (
        unicodedata.normalize("NFKD", name).encode("ascii", "ignore").decode("ascii")
    )
    return re.sub(r"[^a-z0-9]+", "-", ascii_name.lower()).strip("-")


def valid_slug(slug: str) -> bool:
    return isinstance(slug, str) and bool(SLUG_RE.match(slug))


def challenge_path(challenge_id: str) -> str:
    return f"{CHALLENGE_PREFIX}{challenge_id}.json"


def team_path(team_id: str) -> str:
    return f"{TEAM_PREFIX}{team_id}/team.json"


def submission_path(team_id: str, challenge_id: str) -> str:
    return f"{SUBMISSION_PREFIX}{team_id}/{challenge_id}.json"


@dataclass(frozen=True, slots=True)
class ChallengeDescriptor:
    id: str
    title: str
    description: str
    categories: tuple[str, ...]
    points: int
    salt: bytes
    public_key: bytes
    kdf: KdfParams

    def __post_init__(self) -> None:
        object.__setattr__(self, "categories", tuple(self.categories))
        if not valid_slug(self.id):
            raise ValueError(f"challenge id is not a valid slug: {self.id!r}")
        if not isinstance(self.points, int) or isinstance(self.points, bool) or self.points < 1:
            raise ValueError("points must be a positive integer")
        if len(self.salt) != sigproof.SALT_LEN:
            raise ValueError("salt must be 16 bytes")
        if len(self.public_key) != 32 or decompress(self.public_key) is None:
            raise ValueError("public_key is not a valid point encoding")
        if not isinstance(self.title, str) or not isinstance(self.description, str):
            raise ValueError("title and description must be strings")
        if not all(isinstance(c, str) for c in self.categories):
            raise ValueError("categories must be strings")

    def to_json_dict(self) -> dict:
        return {
            "categories": list(self.categories),
            "description": self.description,
            "id": self.id,
            "kdf": self.kdf.to_json_dict(),
            "points": self.points,
            "public_key": to_hex(self.public_key),
            "salt": to_hex(self.salt),
            "title": self.title,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ChallengeDescriptor":
        keys = {
            "categories",
            "description",
            "id",
            "kdf",
            "points",
            "public_key",
            "salt",
            "title",
        }
        if not isinstance(obj, dict) or set(obj) != keys:
            raise ValueError("malformed challenge descriptor")
        if not isinstance(obj["categories"], list):
            raise ValueError("categories must be a list")
        return cls(
            id=obj["id"],
            title=obj["title"],
            description=obj["description"],
            categories=tuple(obj["categories"]),
            points=obj["points"],
            salt=from_hex(obj["salt"]),
            public_key=from_hex(obj["public_key"]),
            kdf=KdfParams.from_json_dict(obj["kdf"]),
        )

    def serialize(self) -> bytes:
        return canonical_bytes(self.to_json_dict())


@dataclass(frozen=True, slots=True)
class TeamRecord:
    id: str
    name: str
    public_key: bytes

    def __post_init__(self) -> None:
        if not valid_slug(self.id):
            raise ValueError(f"team id is not a valid slug: {self.id!r}")
        if not isinstance(self.name, str) or not (1 <= len(self.name) <= 64):
            raise ValueError("team name must be 1-64 characters")
        if not self.name.isprintable():
            raise ValueError("team name must be printable")
        if len(self.public_key) != 32 or decompress(self.public_key) is None:
            raise ValueError("public_key is not a valid point encoding")

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "public_key": to_hex(self.public_key),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "TeamRecord":
        if not isinstance(obj, dict) or set(obj) != {"id", "name", "public_key"}:
            raise ValueError("malformed team record")
        return cls(
            id=obj["id"], name=obj["name"], public_key=from_hex(obj["public_key"])
        )

    def serialize(self) -> bytes:
        return canonical_bytes(self.to_json_dict())


@dataclass(frozen=True, slots=True)
class TeamSecret:
    """The team's signing seed; kept by the team, never in the ledger."""

    team_id: str
    seed: bytes

    @property
    def secret_key(self) -> bytes:
        return self.seed

    def keypair(self) -> KeyPair:
        return sigproof.keypair_from_seed(self.seed)

    def to_json_dict(self) -> dict:
        return {
            "id": self.team_id,
            "public_key": to_hex(self.keypair().public),
            "seed": to_hex(self.seed),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "TeamSecret":
        if not isinstance(obj, dict) or set(obj) != {"id", "public_key", "seed"}:
            raise ValueError("malformed secret key file")
        secret = cls(team_id=obj["id"], seed=from_hex(obj["seed"]))
        if to_hex(secret.keypair().public) != obj["public_key"]:
            raise ValueError("secret key file is inconsistent")
        return secret


@dataclass(frozen=True, slots=True)
class SubmissionRecord:
    team_id: str
    challenge_id: str
    proof: Proof

    def __post_init__(self) -> None:
        if not valid_slug(self.team_id) or not valid_slug(self.challenge_id):
            raise ValueError("submission ids must be valid slugs")

    def to_json_dict(self) -> dict:
        return {
            "challenge_id": self.challenge_id,
            "proof": self.proof.to_base64(),
            "team_id": self.team_id,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SubmissionRecord":
        if not isinstance(obj, dict) or set(obj) != {"challenge_id", "proof", "team_id"}:
            raise ValueError("malformed submission record")
        return cls(
            team_id=obj["team_id"],
            challenge_id=obj["challenge_id"],
            proof=Proof.parse(from_b64(obj["proof"])),
        )

    def serialize(self) -> bytes:
        return canonical_bytes(self.to_json_dict())


@dataclass(frozen=True, slots=True)
class ScoreboardRow:
    rank: int
    team_id: str
    points: int
    solves: int
    last_solve_index: int | None

    def to_json_dict(self) -> dict:
        return {
            "last_solve_index": self.last_solve_index,
            "points": self.points,
            "rank": self.rank,
            "solves": self.solves,
            "team_id": self.team_id,
        }


def _rand_bytes(rng: Random | None, n: int) -> bytes:
    if rng is None:
        return secrets.token_bytes(n)
    return rng.randbytes(n)


def new_challenge(
    challenge_id: str,
    flag: str,
    title: str,
    points: int,
    kdf: KdfParams,
    description: str = "",
    categories: tuple[str, ...] = (),
    rng: Random | None = None,
) -> ChallengeDescriptor:
    """Derive and publish the challenge key; the flag and the secret key
    are dropped on the floor, never stored."""
    if not valid_slug(challenge_id):
        raise ValueError(f"challenge id is not a valid slug: {challenge_id!r}")
    if not sigproof.normalize_flag(flag):
        raise ValueError("flag is empty after normalization")
    salt = _rand_bytes(rng, sigproof.SALT_LEN)
    keys = sigproof.derive_challenge_keys(flag, salt, kdf)
    return ChallengeDescriptor(
        id=challenge_id,
        title=title,
        description=description,
        categories=tuple(categories),
        points=points,
        salt=salt,
        public_key=keys.public,
        kdf=kdf,
    )


def challenge_changeset(descriptor: ChallengeDescriptor) -> Changeset:
    return Changeset(
        changes=(FileChange(path=challenge_path(descriptor.id), content=descriptor.serialize()),),
        author="organizer",
    )


def register_team(
    name: str, rng: Random | None = None
) -> tuple[TeamRecord, TeamSecret, Changeset]:
    """Fresh team identity: the record goes to the ledger, the seed stays
    with the caller."""
    team_id = slugify(name)
    if not team_id:
        raise ValueError(f"name does not slugify to an identifier: {name!r}")
    seed = _rand_bytes(rng, sigproof.SEED_LEN)
    keys = sigproof.keypair_from_seed(seed)
    record = TeamRecord(id=team_id, name=name, public_key=keys.public)
    secret = TeamSecret(team_id=team_id, seed=seed)
    changeset = Changeset(
        changes=(FileChange(path=team_path(team_id), content=record.serialize()),),
        author=team_id,
    )
    return record, secret, changeset


def build_submission(
    secret: TeamSecret, descriptor: ChallengeDescriptor, flag: str
) -> tuple[SubmissionRecord, Changeset]:
    """Check the flag locally, then build the proof and its changeset.

    Refuses to emit anything when the flag is wrong, so a typo never
    leaves the solver's machine.
    """
    if not sigproof.check_flag(flag, descriptor.salt, descriptor.kdf, descriptor.public_key):
        raise FlagMismatch(f"flag does not match challenge {descriptor.id!r}")
    challenge_keys = sigproof.derive_challenge_keys(flag, descriptor.salt, descriptor.kdf)
    proof = sigproof.prove(
        secret.keypair(), challenge_keys.secret, descriptor.id.encode("ascii")
    )
    record = SubmissionRecord(
        team_id=secret.team_id, challenge_id=descriptor.id, proof=proof
    )
    changeset = Changeset(
        changes=(
            FileChange(
                path=submission_path(secret.team_id, descriptor.id),
                content=record.serialize(),
            ),
        ),
        author=secret.team_id,
    )
    return record, changeset


def _parse_json(content: bytes) -> dict:
    try:
        return json.loads(content.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ValueError(f"invalid JSON: {exc}") from exc


def teams_in(state: LedgerState) -> dict[str, TeamRecord]:
    """Well-formed team records in the state.

    Content that does not parse is skipped, not raised on: it cannot enter
    a validator-accepted chain, and in forged chains the audit flags the
    entry that wrote it.
    """
    teams: dict[str, TeamRecord] = {}
    for path in state.paths(TEAM_PREFIX):
        match = _TEAM_PATH_RE.match(path)
        if not match:
            continue
        try:
            record = TeamRecord.from_json_dict(_parse_json(state.files[path]))
        except ValueError:
            continue
        teams[match.group(1)] = record
    return teams


def challenges_in(state: LedgerState) -> dict[str, ChallengeDescriptor]:
    """Well-formed challenge descriptors in the state (see teams_in)."""
    challenges: dict[str, ChallengeDescriptor] = {}
    for path in state.paths(CHALLENGE_PREFIX):
        match = _CHALLENGE_PATH_RE.match(path)
        if not match:
            continue
        try:
            descriptor = ChallengeDescriptor.from_json_dict(
                _parse_json(state.files[path])
            )
        except ValueError:
            continue
        challenges[match.group(1)] = descriptor
    return challenges


def solves_in(chain: list[LedgerEntry]) -> dict[tuple[str, str], int]:
    """(team_id, challenge_id) -> ledger index of the first accepted
    submission; later duplicates never double-count."""
    solves: dict[tuple[str, str], int] = {}
    for entry in chain:
        for change in entry.changeset.changes:
            match = _SUBMISSION_PATH_RE.match(change.path)
            if match:
                solves.setdefault((match.group(1), match.group(2)), entry.index)
    return solves


def compute_scoreboard(
    state: LedgerState, chain: list[LedgerEntry]
) -> list[ScoreboardRow]:
    """Rank teams by points; ties go to the earlier last solve (ledger
    order, not claimed wall clocks), then team id."""
    teams = teams_in(state)
    challenges = challenges_in(state)
    points: dict[str, int] = {team_id: 0 for team_id in teams}
    solves: dict[str, int] = {team_id: 0 for team_id in teams}
    last: dict[str, int | None] = {team_id: None for team_id in teams}
    for (team_id, challenge_id), index in solves_in(chain).items():
        if team_id not in teams:
            raise AuditError(f"submission for unknown team {team_id!r} at entry {index}")
        if challenge_id not in challenges:
            raise AuditError(
                f"submission for unknown challenge {challenge_id!r} at entry {index}"
            )
        points[team_id] += challenges[challenge_id].points
        solves[team_id] += 1
        prev = last[team_id]
        last[team_id] = index if prev is None else max(prev, index)

    def sort_key(team_id: str):
        last_index = last[team_id]
        return (
            -points[team_id],
            last_index if last_index is not None else float("inf"),
            team_id,
        )

    ordered = sorted(teams, key=sort_key)
    return [
        ScoreboardRow(
            rank=rank,
            team_id=team_id,
            points=points[team_id],
            solves=solves[team_id],
            last_solve_index=last[team_id],
        )
        for rank, team_id in enumerate(ordered, start=1)
    ]


def scoreboard_bytes(rows: list[ScoreboardRow]) -> bytes:
    return canonical_bytes([row.to_json_dict() for row in rows])


@dataclass(frozen=True, slots=True)
class AuditFinding:
    index: int
    code: str
    message: str


@dataclass(slots=True)
class AuditReport:
    findings: list[AuditFinding]
    scoreboard: list[ScoreboardRow]
    entries: int

    @property
    def ok(self) -> bool:
        return not self.findings

    def to_json_dict(self) -> dict:
        return {
            "entries": self.entries,
            "findings": [
                {"code": f.code, "index": f.index, "message": f.message}
                for f in self.findings
            ],
            "ok": self.ok,
            "scoreboard": [row.to_json_dict() for row in self.scoreboard],
        }


def audit_all(chain: list[LedgerEntry]) -> AuditReport:
    """Re-derive everything from public data alone.

    Checks the hash chain, replays validator rules over every
    team-originated entry, re-verifies every proof, confines privileged
    entries to organizer paths, and recomputes the scoreboard.  Requires
    no secrets: any holder of the ledger file gets the same report.
    """
    from .validator import validate_changeset  # local import breaks the cycle

    findings: list[AuditFinding] = []
    verdict = verify_chain(chain)
    if not verdict:
        findings.append(
            AuditFinding(index=verdict.index, code="CHAIN", message=verdict.reason)
        )
        return AuditReport(findings=findings, scoreboard=[], entries=len(chain))
    if not chain:
        return AuditReport(findings=[], scoreboard=[], entries=0)

    state = LedgerState()
    for entry in chain:
        if entry.index == 0:
            for change in entry.changeset.changes:
                if not change.path.startswith("meta/"):
                    findings.append(
                        AuditFinding(0, "GENESIS_SCOPE", f"unexpected path {change.path!r}")
                    )
            if organizer_key(chain) is None:
                findings.append(
                    AuditFinding(0, "GENESIS_KEY", "missing or invalid organizer key")
                )
        elif entry.org_sig is not None:
            # privileged entry: signature already checked by verify_chain
            for change in entry.changeset.changes:
                if not (
                    change.path.startswith(CHALLENGE_PREFIX)
                    or change.path.startswith("meta/")
                ):
                    findings.append(
                        AuditFinding(
                            entry.index,
                            "ORG_SCOPE",
                            f"privileged entry writes {change.path!r}",
                        )
                    )
                    continue
                if change.path.startswith(CHALLENGE_PREFIX):
                    match = _CHALLENGE_PATH_RE.match(change.path)
                    if not match:
                        findings.append(
                            AuditFinding(
                                entry.index, "BAD_DESCRIPTOR", f"bad path {change.path!r}"
                            )
                        )
                        continue
                    try:
                        descriptor = ChallengeDescriptor.from_json_dict(
                            _parse_json(change.content)
                        )
                        if descriptor.id != match.group(1):
                            raise ValueError("descriptor id does not match its path")
                    except ValueError as exc:
                        findings.append(
                            AuditFinding(entry.index, "BAD_DESCRIPTOR", str(exc))
                        )
        else:
            team_verdict = validate_changeset(state, entry.changeset)
            if not team_verdict.accepted:
                findings.append(
                    AuditFinding(
                        entry.index,
                        team_verdict.code.name,
                        team_verdict.message,
                    )
                )
        state.apply(entry.changeset)

    try:
        scoreboard = compute_scoreboard(state, chain)
    except AuditError as exc:
        findings.append(AuditFinding(len(chain) - 1, "SCOREBOARD", str(exc)))
        scoreboard = []
    return AuditReport(findings=findings, scoreboard=scoreboard, entries=len(chain))
