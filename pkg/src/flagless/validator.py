"""Gatekeeper for team-originated changesets.

Plays the role of the continuous-integration hook that merges or denies
pull requests: a changeset is accepted only if it is exactly one team
registration or exactly one proof submission, checked against the current
replayed state.  Validation needs no privileged information whatsoever —
an independent auditor running the same rules over a replica must reach
the same verdicts, and the test suite holds us to that.

Possession of a valid proof is the only authentication there is.  Nobody
needs an account to submit for team t, because only holders of t's
signing key can produce the inner signature layer.
"""

from __future__ import annotations

import enum
import threading
import time
from dataclasses import dataclass

from . import competition, ledger, sigproof
from .competition import (
    ChallengeDescriptor,
    ScoreboardRow,
    SubmissionRecord,
    TeamRecord,
    _SUBMISSION_PATH_RE,
    _TEAM_PATH_RE,
    challenges_in,
    slugify,
    teams_in,
)
from .ledger import Changeset, LedgerEntry, LedgerState


class ReasonCode(enum.Enum):
    IMMUTABLE_PATH = "a committed path can never be rewritten"
    BAD_PATH = "path is outside the shapes teams may write"
    UNKNOWN_CHALLENGE = "no such challenge in the ledger state"
    UNKNOWN_TEAM = "no such team in the ledger state"
    INVALID_PROOF = "proof does not verify for this team and challenge"
    DUPLICATE_SUBMISSION = "this team already solved this challenge"
    DUPLICATE_TEAM = "team id or public key already registered"
    MALFORMED_RECORD = "record does not parse or contradicts its path"
    MIXED_CONCERNS = "one changeset must carry exactly one action"


@dataclass(frozen=True, slots=True)
class ValidationVerdict:
    accepted: bool
    code: ReasonCode | None = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.accepted

    @classmethod
    def accept(cls) -> "ValidationVerdict":
        return cls(accepted=True)

    @classmethod
    def reject(cls, code: ReasonCode, message: str = "") -> "ValidationVerdict":
        return cls(accepted=False, code=code, message=message or code.value)


ACCEPT = ValidationVerdict.accept()


def _validate_registration(
    state: LedgerState, path: str, content: bytes, team_id: str
) -> ValidationVerdict:
    try:
        record = TeamRecord.from_json_dict(competition._parse_json(content))
    except ValueError as exc:
        return ValidationVerdict.reject(ReasonCode.MALFORMED_RECORD, str(exc))
    if record.id != team_id:
        return ValidationVerdict.reject(
            ReasonCode.MALFORMED_RECORD, f"record id {record.id!r} does not match path"
        )
    if record.id != slugify(record.name):
        return ValidationVerdict.reject(
            ReasonCode.MALFORMED_RECORD,
            f"id {record.id!r} is not the slug of name {record.name!r}",
        )
    for existing in teams_in(state).values():
        if existing.public_key == record.public_key:
            return ValidationVerdict.reject(
                ReasonCode.DUPLICATE_TEAM,
                f"public key already registered to {existing.id!r}",
            )
    return ACCEPT


def _validate_submission(
    state: LedgerState, path: str, content: bytes, team_id: str, challenge_id: str
) -> ValidationVerdict:
    teams = teams_in(state)
    if team_id not in teams:
        return ValidationVerdict.reject(ReasonCode.UNKNOWN_TEAM, f"team {team_id!r}")
    challenges = challenges_in(state)
    if challenge_id not in challenges:
        return ValidationVerdict.reject(
            ReasonCode.UNKNOWN_CHALLENGE, f"challenge {challenge_id!r}"
        )
    try:
        record = SubmissionRecord.from_json_dict(competition._parse_json(content))
    except ValueError as exc:
        return ValidationVerdict.reject(ReasonCode.MALFORMED_RECORD, str(exc))
    if record.team_id != team_id or record.challenge_id != challenge_id:
        return ValidationVerdict.reject(
            ReasonCode.MALFORMED_RECORD, "record ids do not match the path"
        )
    if not sigproof.verify_proof(
        teams[team_id].public_key,
        challenges[challenge_id].public_key,
        challenge_id.encode("ascii"),
        record.proof,
    ):
        return ValidationVerdict.reject(ReasonCode.INVALID_PROOF)
    return ACCEPT


def validate_changeset(state: LedgerState, changeset: Changeset) -> ValidationVerdict:
    """Decide whether a team-originated changeset may be appended.

    Every outcome is a verdict; nothing here raises on untrusted input.
    """
    classified: list[tuple[str, tuple]] = []
    for change in changeset.changes:
        team_match = _TEAM_PATH_RE.match(change.path)
        sub_match = _SUBMISSION_PATH_RE.match(change.path)
        if change.path in state:
            if sub_match:
                return ValidationVerdict.reject(
                    ReasonCode.DUPLICATE_SUBMISSION,
                    f"{sub_match.group(1)!r} already solved {sub_match.group(2)!r}",
                )
            if team_match:
                return ValidationVerdict.reject(
                    ReasonCode.DUPLICATE_TEAM,
                    f"team {team_match.group(1)!r} already registered",
                )
            return ValidationVerdict.reject(
                ReasonCode.IMMUTABLE_PATH, f"{change.path!r} is already committed"
            )
        if team_match:
            classified.append(("registration", (change, team_match.group(1))))
        elif sub_match:
            classified.append(
                ("submission", (change, sub_match.group(1), sub_match.group(2)))
            )
        else:
            return ValidationVerdict.reject(
                ReasonCode.BAD_PATH, f"{change.path!r} is not a team-writable path"
            )
    if len(classified) != 1:
        return ValidationVerdict.reject(
            ReasonCode.MIXED_CONCERNS,
            f"changeset carries {len(classified)} actions, expected 1",
        )
    kind, payload = classified[0]
    if kind == "registration":
        change, team_id = payload
        return _validate_registration(state, change.path, change.content, team_id)
    change, team_id, challenge_id = payload
    return _validate_submission(state, change.path, change.content, team_id, challenge_id)


def apply_changeset(
    chain: list[LedgerEntry], changeset: Changeset, timestamp: int | None = None
) -> LedgerEntry | ValidationVerdict:
    """Validate against the chain's replay and append on ACCEPT.

    On REJECT the chain is untouched and the verdict comes back instead.
    Callers must serialize invocations (single-writer contract); use
    CompetitionHost when multiple threads are in play.
    """
    state = ledger.replay(chain)
    verdict = validate_changeset(state, changeset)
    if not verdict:
        return verdict
    return ledger.append(chain, changeset, timestamp)


class CompetitionHost:
    """Owns a chain: serializes all appends, keeps the replayed state hot.

    Reads (scoreboard, challenge list, ledger dump) take a consistent
    snapshot and never block longer than a state copy.
    """

    def __init__(self, chain: list[LedgerEntry]):
        verdict = ledger.verify_chain(chain)
        if not verdict:
            raise ledger.ChainError(
                f"chain fails verification at {verdict.index}: {verdict.reason}"
            )
        self._lock = threading.Lock()
        self._chain = list(chain)
        self._state = LedgerState()
        for entry in self._chain:
            self._state.apply(entry.changeset)

    @classmethod
    def bootstrap(
        cls,
        organizer_public: bytes,
        competition_meta: bytes,
        timestamp: int | None = None,
    ) -> "CompetitionHost":
        entry = ledger.genesis(
            organizer_public, competition_meta, int(time.time()) if timestamp is None else timestamp
        )
        return cls([entry])

    def apply(
        self, changeset: Changeset, timestamp: int | None = None
    ) -> LedgerEntry | ValidationVerdict:
        """Team-originated append: validate, then extend atomically."""
        with self._lock:
            verdict = validate_changeset(self._state, changeset)
            if not verdict:
                return verdict
            entry = ledger.append(self._chain, changeset, timestamp)
            self._state.apply(changeset)
            return entry

    def apply_organizer(
        self,
        changeset: Changeset,
        org_secret: bytes,
        timestamp: int | None = None,
    ) -> LedgerEntry:
        """Privileged append (challenge releases and the like), signed so
        auditors can tell it apart from team traffic."""
        with self._lock:
            entry = ledger.append(self._chain, changeset, timestamp, org_secret=org_secret)
            self._state.apply(changeset)
            return entry

    def snapshot(self) -> tuple[list[LedgerEntry], LedgerState]:
        with self._lock:
            return list(self._chain), self._state.copy()

    @property
    def chain(self) -> list[LedgerEntry]:
        with self._lock:
            return list(self._chain)

    def ledger_bytes(self) -> bytes:
        chain, _ = self.snapshot()
        return ledger.dump_chain(chain)

    def scoreboard(self) -> list[ScoreboardRow]:
        chain, state = self.snapshot()
        return competition.compute_scoreboard(state, chain)

    def challenges(self) -> list[ChallengeDescriptor]:
        _, state = self.snapshot()
        found = challenges_in(state)
        return [found[k] for k in sorted(found)]
