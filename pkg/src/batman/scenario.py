"""Builders for registrations and random, always-valid ledger scenarios."""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import errors, sybilguard
from .codec import sha256
from .contracts import (
    ChainParams,
    Endorse,
    KeySpec,
    RecordEvent,
    RegisterIdentity,
    RevokeKey,
    RevokeMaster,
    RotateKey,
)
from .identity import Role
from .ledger import Ledger

DEFAULT_KEY_LIFETIME = 1000


def master_hash(label: str) -> bytes:
    """Deterministic stand-in for the hash of a master public key."""
    return sha256(b"master:" + label.encode("utf-8"))


def key_hash(label: str, role: Role, generation: int = 0) -> bytes:
    return sha256(f"key:{label}:{role.name}:{generation}".encode("utf-8"))


def registration(hostname: str, at: int = 0, *, label: Optional[str] = None,
                 lifetime: int = DEFAULT_KEY_LIFETIME,
                 threshold=sybilguard.DEFAULT_THRESHOLD,
                 hash_m: Optional[bytes] = None) -> RegisterIdentity:
    """Mine the proof of work and build a complete registration payload."""
    label = label or hostname
    hash_m = hash_m or master_hash(label)
    uuid, nonce = sybilguard.mine_uuid(hash_m, threshold)
    keys = tuple(KeySpec(role, key_hash(label, role), at, at + lifetime) for role in Role)
    return RegisterIdentity(hash_m, sha256(uuid), hostname, nonce, keys, at)


def random_ledger(n_txs: int, seed: int, params: Optional[ChainParams] = None,
                  block_size: int = 10, max_attempts: int = 100_000) -> Ledger:
    """Build a ledger of ``n_txs`` accepted transactions drawn at random.

    Candidates the contracts reject are discarded, so the result exercises
    rejection atomicity as well. Every ``block_size`` transactions are sealed.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    params = params or ChainParams()
    ledger = Ledger(params)
    names: list[str] = []
    tick = 0
    attempts = 0
    while len(ledger) < n_txs:
        attempts += 1
        if attempts > max_attempts:
            raise RuntimeError("scenario generator made no progress")
        tick += int(rng.integers(1, 5))
        kind = int(rng.integers(0, 10)) if names else 0
        if kind == 0 or len(names) < 2 and kind < 5:
            name = f"node-{len(names):03d}"
            payload = registration(name, tick, lifetime=min(DEFAULT_KEY_LIFETIME,
                                                            params.max_key_lifetime),
                                   threshold=params.pow_threshold)
            author = payload.hash_m
            names.append(name)
        else:
            who = master_hash(names[int(rng.integers(len(names)))])
            if kind <= 4:
                node = master_hash(names[int(rng.integers(len(names)))])
                payload = RecordEvent(node, tick, int(rng.integers(0, 2)))
            elif kind <= 6:
                other = master_hash(names[int(rng.integers(len(names)))])
                payload = Endorse(who, other, tick)
            elif kind == 7:
                role = Role(int(rng.integers(0, 3)))
                payload = RotateKey(who, role, key_hash(str(tick), role, tick), tick, tick + 500)
            elif kind == 8:
                payload = RevokeKey(who, Role(int(rng.integers(0, 3))), tick)
            else:
                if rng.random() > 0.3:
                    continue
                payload = RevokeMaster(who, tick)
            author = who
        try:
            ledger.submit(payload, author, tick)
        except errors.ContractRejection:
            if isinstance(payload, RegisterIdentity):
                names.pop()
            continue
        if len(ledger.open_txs) >= block_size:
            ledger.seal_block()
    return ledger
