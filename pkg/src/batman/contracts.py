"""Transaction payloads and the contract state they act on.

Every payload variant maps to exactly one contract operation.
:class:`ContractState` bundles the identity registry, the web of trust and
the per-node reputation contracts. It is rebuilt only by replaying payloads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from . import errors, sybilguard
from .codec import Reader, Writer, sha256
from .identity import (
    DEFAULT_MAX_KEY_LIFETIME,
    IdentityRegistry,
    NodeIdentity,
    Role,
    SecondaryKeyRecord,
)
from .errors import LedgerFormatError
from .reputation import (
    DEFAULT_EVENT_WINDOW,
    DEFAULT_TIME_WINDOW,
    EventRecord,
    ReputationContract,
)
from .weboftrust import WebOfTrust


@dataclass(frozen=True)
class ChainParams:
    max_key_lifetime: int = DEFAULT_MAX_KEY_LIFETIME
    pow_threshold: int = sybilguard.DEFAULT_THRESHOLD.threshold
    time_window: int = DEFAULT_TIME_WINDOW
    event_window: int = DEFAULT_EVENT_WINDOW

    def __post_init__(self):
        if self.max_key_lifetime < 1:
            raise ValueError("max_key_lifetime must be >= 1")
        sybilguard.PowThreshold(self.pow_threshold)
        if self.time_window < 1 or self.event_window < 1:
            raise ValueError("reputation windows must be >= 1")


# --- payload variants --------------------------------------------------------

@dataclass(frozen=True)
class KeySpec:
    role: Role
    key_hash: bytes
    valid_from: int
    valid_until: int


@dataclass(frozen=True)
class RegisterIdentity:
    TAG = 1
    hash_m: bytes
    hash_uuid: bytes
    hostname: str
    pow_nonce: int
    keys: tuple[KeySpec, ...]
    at: int

    def to_identity(self) -> NodeIdentity:
        return NodeIdentity(
            hash_m=self.hash_m,
            hash_uuid=self.hash_uuid,
            hostname=self.hostname,
            keys={k.role: SecondaryKeyRecord(k.role, k.key_hash, k.valid_from, k.valid_until)
                  for k in self.keys},
            registered_at=self.at,
        )


@dataclass(frozen=True)
class RotateKey:
    TAG = 2
    identity: bytes
    role: Role
    new_key_hash: bytes
    valid_from: int
    valid_until: int


@dataclass(frozen=True)
class RevokeKey:
    TAG = 3
    identity: bytes
    role: Role
    at: int


@dataclass(frozen=True)
class RevokeMaster:
    TAG = 4
    identity: bytes
    at: int


@dataclass(frozen=True)
class Endorse:
    TAG = 5
    signer: bytes
    subject: bytes
    at: int


@dataclass(frozen=True)
class RecordEvent:
    TAG = 6
    node: bytes
    t: int
    outcome: int


Payload = Union[RegisterIdentity, RotateKey, RevokeKey, RevokeMaster, Endorse, RecordEvent]


def subject_of(payload: Payload) -> Optional[bytes]:
    """Identity whose master key must author the payload (None: anyone)."""
    if isinstance(payload, RegisterIdentity):
        return payload.hash_m
    if isinstance(payload, (RotateKey, RevokeKey, RevokeMaster)):
        return payload.identity
    if isinstance(payload, Endorse):
        return payload.signer
    return None


def encode_payload(w: Writer, p: Payload) -> None:
    w.u8(p.TAG)
    if isinstance(p, RegisterIdentity):
        w.hash(p.hash_m).hash(p.hash_uuid).text(p.hostname).u64(p.pow_nonce).u64(p.at)
        w.u8(len(p.keys))
        for k in p.keys:
            w.u8(k.role).hash(k.key_hash).u64(k.valid_from).u64(k.valid_until)
    elif isinstance(p, RotateKey):
        w.hash(p.identity).u8(p.role).hash(p.new_key_hash).u64(p.valid_from).u64(p.valid_until)
    elif isinstance(p, RevokeKey):
        w.hash(p.identity).u8(p.role).u64(p.at)
    elif isinstance(p, RevokeMaster):
        w.hash(p.identity).u64(p.at)
    elif isinstance(p, Endorse):
        w.hash(p.signer).hash(p.subject).u64(p.at)
    elif isinstance(p, RecordEvent):
        w.hash(p.node).u64(p.t).u8(p.outcome)
    else:
        raise TypeError(f"not a payload: {p!r}")


def _role(r: Reader) -> Role:
    value = r.u8()
    try:
        return Role(value)
    except ValueError:
        raise LedgerFormatError(f"invalid key role {value}") from None


def decode_payload(r: Reader) -> Payload:
    tag = r.u8()
    if tag == RegisterIdentity.TAG:
        hash_m, hash_uuid, hostname = r.hash(), r.hash(), r.text()
        nonce, at = r.u64(), r.u64()
        keys = tuple(KeySpec(_role(r), r.hash(), r.u64(), r.u64()) for _ in range(r.u8()))
        return RegisterIdentity(hash_m, hash_uuid, hostname, nonce, keys, at)
    if tag == RotateKey.TAG:
        return RotateKey(r.hash(), _role(r), r.hash(), r.u64(), r.u64())
    if tag == RevokeKey.TAG:
        return RevokeKey(r.hash(), _role(r), r.u64())
    if tag == RevokeMaster.TAG:
        return RevokeMaster(r.hash(), r.u64())
    if tag == Endorse.TAG:
        return Endorse(r.hash(), r.hash(), r.u64())
    if tag == RecordEvent.TAG:
        node, t, outcome = r.hash(), r.u64(), r.u8()
        if outcome > 1:
            raise LedgerFormatError(f"invalid outcome {outcome}")
        return RecordEvent(node, t, outcome)
    raise LedgerFormatError(f"unknown payload tag {tag}")


# --- derived state -----------------------------------------------------------

@dataclass
class ContractState:
    params: ChainParams = field(default_factory=ChainParams)

    def __post_init__(self):
        self.registry = IdentityRegistry(self.params.max_key_lifetime, self.params.pow_threshold)
        self.wot = WebOfTrust(self.registry)
        self.reputation: dict[bytes, ReputationContract] = {}

    def check_author(self, author: bytes, payload: Payload) -> None:
        owner = subject_of(payload)
        if owner is not None and owner != author:
            raise errors.Unauthorized(f"{author.hex()} may not act for {owner.hex()}")

    def apply(self, payload: Payload):
        """Run one contract operation; leaves the state untouched on error."""
        if isinstance(payload, RegisterIdentity):
            if len(payload.keys) != len(Role):
                raise errors.InvalidKeySet(f"{len(payload.keys)} keys given, expected {len(Role)}")
            receipt = self.registry.register_identity(payload.to_identity(), payload.pow_nonce)
            # The reputation contract is emitted from the same preloaded code.
            self.reputation[payload.hash_m] = ReputationContract(
                payload.hash_m, self.params.time_window, self.params.event_window
            )
            return receipt
        if isinstance(payload, RotateKey):
            return self.registry.rotate_key(payload.identity, payload.role, payload.new_key_hash,
                                            payload.valid_from, payload.valid_until)
        if isinstance(payload, RevokeKey):
            return self.registry.revoke_key(payload.identity, payload.role, payload.at)
        if isinstance(payload, RevokeMaster):
            return self.registry.revoke_master(payload.identity, payload.at)
        if isinstance(payload, Endorse):
            return self.wot.endorse(payload.signer, payload.subject, payload.at)
        if isinstance(payload, RecordEvent):
            contract = self.reputation.get(payload.node)
            if contract is None:
                raise errors.UnknownIdentity(payload.node.hex())
            return contract.record_event(EventRecord(payload.node, payload.t, payload.outcome))
        raise TypeError(f"not a payload: {payload!r}")

    def serialize(self) -> bytes:
        """Canonical snapshot of every derived value, in registration order."""
        w = Writer()
        reg = self.registry
        w.u32(len(reg.identities))
        for identity in reg.identities.values():
            w.hash(identity.hash_m).hash(identity.hash_uuid).text(identity.hostname)
            w.u64(identity.registered_at).opt_u64(identity.revoked_at)
            for role in Role:
                records = identity.records(role)
                w.u32(len(records))
                for rec in records:
                    w.hash(rec.key_hash).u64(rec.valid_from).u64(rec.valid_until)
                    w.opt_u64(rec.revoked_at)
            endorsements = self.wot.endorsements(identity.hash_m)
            w.u32(len(endorsements))
            for e in endorsements:
                w.hash(e.signer).u64(e.at).hash(e.signature_hash)
            rep = self.reputation[identity.hash_m]
            w.u64(rep.total).u64(rep.successes).opt_u64(rep.last_tick)
            w.u64(rep.mlm.count).f64(rep.mlm.mean)
            w.u32(len(rep.event_window))
            for outcome in rep.event_window.buffer:
                w.u8(outcome)
            w.u32(len(rep.time_window))
            for t, outcome in rep.time_window.buffer:
                w.u64(t).u8(outcome)
        return w.getvalue()

    def digest(self) -> bytes:
        return sha256(self.serialize())
