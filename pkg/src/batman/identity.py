"""Identity registry and per-identity key lifecycle.

Identities are referenced by their master key hash ``hash_m``. Every
identity carries one secondary key per role. Key validity windows are
half-open ``[valid_from, valid_until)``. A revocation at tick ``t``
invalidates ``t`` itself.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional

from . import errors, sybilguard
from .codec import check_hash, sha256

DEFAULT_MAX_KEY_LIFETIME = 10**6

_HOSTNAME_RE = re.compile(r"^[A-Za-z0-9](?:[A-Za-z0-9-]{0,61}[A-Za-z0-9])?$")


class Role(IntEnum):
    AUTHENTICATION = 0  # hash_SA
    SIGNING = 1  # hash_SS
    ENCRYPTION = 2  # hash_SC


@dataclass
class SecondaryKeyRecord:
    role: Role
    key_hash: bytes
    valid_from: int
    valid_until: int
    revoked_at: Optional[int] = None

    def is_valid_at(self, tick: int) -> bool:
        if not self.valid_from <= tick < self.valid_until:
            return False
        return self.revoked_at is None or tick < self.revoked_at


@dataclass
class NodeIdentity:
    hash_m: bytes
    hash_uuid: bytes
    hostname: str
    keys: dict[Role, SecondaryKeyRecord]
    registered_at: int = 0
    revoked_at: Optional[int] = None
    # Superseded records per role, oldest first.
    history: dict[Role, list[SecondaryKeyRecord]] = field(default_factory=dict)

    @property
    def revoked(self) -> bool:
        return self.revoked_at is not None

    def records(self, role: Role) -> list[SecondaryKeyRecord]:
        return [*self.history.get(role, []), self.keys[role]]


@dataclass(frozen=True)
class RegistrationReceipt:
    hash_m: bytes
    key_contract_id: bytes
    registered_at: int


def validate_hostname(hostname: str) -> None:
    if not isinstance(hostname, str) or not _HOSTNAME_RE.match(hostname):
        raise errors.InvalidHostname(f"not a DNS label: {hostname!r}")


def _check_window(valid_from: int, valid_until: int, max_lifetime: int) -> None:
    if valid_from >= valid_until:
        raise errors.BadWindow(f"empty window [{valid_from}, {valid_until})")
    if valid_until - valid_from > max_lifetime:
        raise errors.KeyLifetimeExceeded(
            f"window length {valid_until - valid_from} > {max_lifetime}"
        )


class IdentityRegistry:
    """Registry contract plus the per-identity key-management contracts."""

    def __init__(self, max_key_lifetime: int = DEFAULT_MAX_KEY_LIFETIME,
                 pow_threshold=sybilguard.DEFAULT_THRESHOLD):
        self.max_key_lifetime = max_key_lifetime
        self.pow_threshold = pow_threshold
        # Never shrinks: revoked identities stay, so hash_m reuse is detected.
        self.identities: dict[bytes, NodeIdentity] = {}
        self._live_hostnames: dict[str, bytes] = {}
        self._uuids: set[bytes] = set()

    def __contains__(self, hash_m: bytes) -> bool:
        return hash_m in self.identities

    def get(self, hash_m: bytes) -> NodeIdentity:
        try:
            return self.identities[hash_m]
        except KeyError:
            raise errors.UnknownIdentity(hash_m.hex()) from None

    def by_hostname(self, hostname: str) -> NodeIdentity:
        """Live identity owning ``hostname``, else the latest revoked one."""
        if hostname in self._live_hostnames:
            return self.identities[self._live_hostnames[hostname]]
        for identity in reversed(list(self.identities.values())):
            if identity.hostname == hostname:
                return identity
        raise errors.UnknownIdentity(hostname)

    def register_identity(self, identity: NodeIdentity, pow_nonce: int) -> RegistrationReceipt:
        check_hash(identity.hash_m, "hash_m")
        check_hash(identity.hash_uuid, "hash_uuid")
        validate_hostname(identity.hostname)
        if set(identity.keys) != set(Role):
            raise errors.InvalidKeySet("exactly one key per role is required")
        for role, record in identity.keys.items():
            if record.role != role:
                raise errors.InvalidKeySet(f"key filed under {role.name} has role {record.role.name}")
            check_hash(record.key_hash, "key_hash")
            _check_window(record.valid_from, record.valid_until, self.max_key_lifetime)
        if identity.hash_m in self.identities or identity.hash_uuid in self._uuids:
            raise errors.DuplicateIdentity(identity.hash_m.hex())
        if identity.hostname in self._live_hostnames:
            raise errors.DuplicateHostname(identity.hostname)
        if not sybilguard.verify_uuid(identity, pow_nonce, self.pow_threshold):
            raise errors.PowInvalid(f"nonce {pow_nonce} does not satisfy the threshold")

        stored = NodeIdentity(
            hash_m=identity.hash_m,
            hash_uuid=identity.hash_uuid,
            hostname=identity.hostname,
            keys={role: SecondaryKeyRecord(**vars(rec)) for role, rec in identity.keys.items()},
            registered_at=identity.registered_at,
        )
        self.identities[stored.hash_m] = stored
        self._live_hostnames[stored.hostname] = stored.hash_m
        self._uuids.add(stored.hash_uuid)
        return RegistrationReceipt(stored.hash_m, key_contract_id(stored), stored.registered_at)

    def _live(self, hash_m: bytes) -> NodeIdentity:
        identity = self.get(hash_m)
        if identity.revoked:
            raise errors.MasterRevoked(hash_m.hex())
        return identity

    def rotate_key(self, hash_m: bytes, role: Role, new_key_hash: bytes,
                   valid_from: int, valid_until: int) -> None:
        identity = self._live(hash_m)
        _check_window(valid_from, valid_until, self.max_key_lifetime)
        check_hash(new_key_hash, "key_hash")
        role = Role(role)
        old = identity.keys[role]
        if old.revoked_at is None and old.valid_until > valid_from:
            # Superseded: end the old window where the new one starts.
            old.valid_until = max(old.valid_from, valid_from)
        identity.history.setdefault(role, []).append(old)
        identity.keys[role] = SecondaryKeyRecord(role, bytes(new_key_hash), valid_from, valid_until)

    def revoke_key(self, hash_m: bytes, role: Role, at: int) -> None:
        identity = self.get(hash_m)
        role = Role(role)
        current = identity.keys[role]
        if not (self.is_live_at(hash_m, at) and current.is_valid_at(at)):
            raise errors.KeyNotActive(f"{role.name} key of {hash_m.hex()} not valid at {at}")
        current.revoked_at = at

    def revoke_master(self, hash_m: bytes, at: int) -> None:
        identity = self.get(hash_m)
        if identity.revoked:
            raise errors.AlreadyRevoked(hash_m.hex())
        identity.revoked_at = at
        if self._live_hostnames.get(identity.hostname) == hash_m:
            del self._live_hostnames[identity.hostname]

    def is_live_at(self, hash_m: bytes, at: int) -> bool:
        identity = self.identities.get(hash_m)
        if identity is None:
            return False
        return identity.revoked_at is None or at < identity.revoked_at

    def is_key_valid(self, hash_m: bytes, role: Role, at: int) -> bool:
        if not self.is_live_at(hash_m, at):
            return False
        return any(rec.is_valid_at(at) for rec in self.identities[hash_m].records(Role(role)))


def key_contract_id(identity: NodeIdentity) -> bytes:
    return sha256(b"key-contract" + identity.hash_m + identity.hash_uuid)
