"""Peer endorsement of identities (web of trust).

A subject counts as validated at tick ``at`` when at least ``k`` of its
endorsements were made no later than ``at`` by signers whose master key
was still live at ``at``. Endorsements never expire by themselves; they
stop counting once their signer's master key is revoked.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from . import errors
from .codec import Writer, sha256
from .identity import IdentityRegistry, Role

DEFAULT_K = 1


class Status(enum.Enum):
    UNVALIDATED = "Unvalidated"
    VALIDATED = "Validated"


@dataclass(frozen=True)
class Endorsement:
    signer: bytes
    subject: bytes
    at: int
    signature_hash: bytes


def signature_hash(signer_m: bytes, subject_m: bytes, subject_uuid: bytes, at: int) -> bytes:
    """Simulated signature: a hash over the signed statement."""
    return sha256(Writer().hash(signer_m).hash(subject_m).hash(subject_uuid).u64(at).getvalue())


class WebOfTrust:
    def __init__(self, registry: IdentityRegistry):
        self.registry = registry
        self._by_subject: dict[bytes, list[Endorsement]] = {}
        self._pairs: set[tuple[bytes, bytes]] = set()

    def endorsements(self, subject: bytes) -> list[Endorsement]:
        return list(self._by_subject.get(subject, ()))

    def endorse(self, signer: bytes, subject: bytes, at: int) -> Endorsement:
        if signer == subject:
            raise errors.SelfEndorsement(signer.hex())
        signer_id = self.registry.get(signer)
        subject_id = self.registry.get(subject)
        if subject_id.revoked:
            raise errors.MasterRevoked(f"subject {subject.hex()} is revoked")
        if signer_id.revoked or not self.registry.is_key_valid(signer, Role.SIGNING, at):
            raise errors.SignerKeyInvalid(f"signing key of {signer.hex()} not valid at {at}")
        if (signer, subject) in self._pairs:
            raise errors.DuplicateEndorsement(f"{signer.hex()} -> {subject.hex()}")
        endorsement = Endorsement(
            signer, subject, at,
            signature_hash(signer, subject, subject_id.hash_uuid, at),
        )
        self._pairs.add((signer, subject))
        self._by_subject.setdefault(subject, []).append(endorsement)
        return endorsement

    def live_count(self, subject: bytes, at: int) -> int:
        self.registry.get(subject)
        if not self.registry.is_live_at(subject, at):
            return 0
        return sum(
            1 for e in self._by_subject.get(subject, ())
            if e.at <= at and self.registry.is_live_at(e.signer, at)
        )

    def validation_status(self, subject: bytes, at: int, k: int = DEFAULT_K) -> Status:
        if self.live_count(subject, at) >= k:
            return Status.VALIDATED
        return Status.UNVALIDATED
