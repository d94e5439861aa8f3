"""Append-only, hash-chained transaction log.

The ledger stands in for the blockchain hosting the contracts. Contract
state is never stored. It is a deterministic replay of the transactions,
so identical transaction lists always yield identical state digests.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import errors
from .codec import ZERO_HASH, Reader, Writer, sha256
from .contracts import ChainParams, ContractState, Payload, decode_payload, encode_payload


@dataclass(frozen=True)
class Transaction:
    seq: int
    timestamp: int
    payload: Payload
    author: bytes

    def encode(self) -> bytes:
        w = Writer().u64(self.seq).u64(self.timestamp).hash(self.author)
        encode_payload(w, self.payload)
        return w.getvalue()

    @classmethod
    def decode(cls, data: bytes) -> "Transaction":
        r = Reader(data)
        seq, timestamp, author = r.u64(), r.u64(), r.hash()
        payload = decode_payload(r)
        r.finish()
        return cls(seq, timestamp, payload, author)


def _block_body(height: int, prev_hash: bytes, txs: Sequence[Transaction]) -> bytes:
    w = Writer().u64(height).hash(prev_hash).u32(len(txs))
    for tx in txs:
        w.blob(tx.encode())
    return w.getvalue()


@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: bytes
    txs: tuple[Transaction, ...]
    block_hash: bytes

    @classmethod
    def seal(cls, height: int, prev_hash: bytes, txs: Sequence[Transaction]) -> "Block":
        txs = tuple(txs)
        return cls(height, prev_hash, txs, sha256(_block_body(height, prev_hash, txs)))

    def compute_hash(self) -> bytes:
        return sha256(_block_body(self.height, self.prev_hash, self.txs))

    def to_bytes(self) -> bytes:
        return _block_body(self.height, self.prev_hash, self.txs) + self.block_hash

    @classmethod
    def from_bytes(cls, data: bytes) -> "Block":
        r = Reader(data)
        height, prev_hash = r.u64(), r.hash()
        txs = tuple(Transaction.decode(r.blob()) for _ in range(r.u32()))
        block_hash = r.hash()
        r.finish()
        return cls(height, prev_hash, txs, block_hash)


def verify_chain(blocks: Sequence[Block]) -> bool:
    """True iff every block hash recomputes and every back-link matches."""
    prev = ZERO_HASH
    for height, block in enumerate(blocks):
        if block.height != height or block.prev_hash != prev:
            return False
        if block.compute_hash() != block.block_hash:
            return False
        prev = block.block_hash
    return True


class Ledger:
    """Single-writer ledger state: sealed blocks, open block, derived state."""

    def __init__(self, params: Optional[ChainParams] = None):
        self.params = params or ChainParams()
        self.blocks: list[Block] = []
        self.open_txs: list[Transaction] = []
        self.state = ContractState(self.params)
        self._count = 0

    def __len__(self) -> int:
        return self._count

    @property
    def transactions(self) -> list[Transaction]:
        return [tx for block in self.blocks for tx in block.txs] + list(self.open_txs)

    @property
    def tip_hash(self) -> bytes:
        return self.blocks[-1].block_hash if self.blocks else ZERO_HASH

    def append_transaction(self, tx: Transaction):
        """Validate ``tx`` against its contract and add it to the open block.

        Returns whatever the contract operation returns (a receipt, an
        endorsement, or None). On rejection nothing changes.
        """
        if tx.seq != self._count:
            raise errors.SeqMismatch(f"expected seq {self._count}, got {tx.seq}")
        try:
            self.state.check_author(tx.author, tx.payload)
            result = self.state.apply(tx.payload)
        except errors.ContractError as exc:
            raise errors.ContractRejection(exc) from exc
        self.open_txs.append(tx)
        self._count += 1
        return result

    def submit(self, payload: Payload, author: bytes, timestamp: int = 0):
        """Append ``payload`` under the next sequence number."""
        return self.append_transaction(Transaction(self._count, timestamp, payload, author))

    def seal_block(self) -> Block:
        if not self.open_txs:
            raise errors.EmptyBlock("no open transactions to seal")
        block = Block.seal(len(self.blocks), self.tip_hash, self.open_txs)
        self.blocks.append(block)
        self.open_txs = []
        return block

    def verify_chain(self) -> bool:
        return verify_chain(self.blocks)

    def state_digest(self) -> bytes:
        return self.state.digest()

    @classmethod
    def replay(cls, txs: Iterable[Transaction], params: Optional[ChainParams] = None,
               block_size: Optional[int] = None) -> "Ledger":
        """Rebuild a ledger from transactions, sealing every ``block_size`` txs."""
        ledger = cls(params)
        for tx in txs:
            ledger.append_transaction(tx)
            if block_size and len(ledger.open_txs) >= block_size:
                ledger.seal_block()
        return ledger

    def with_block(self, height: int, block: Block) -> "Ledger":
        """Shallow copy whose sealed block ``height`` is replaced (for audits)."""
        other = copy.copy(self)
        other.blocks = list(self.blocks)
        other.blocks[height] = block
        return other


def dump_lines(txs: Iterable[Transaction]) -> list[str]:
    return [tx.encode().hex() for tx in txs]


def dump(ledger: Ledger, path) -> None:
    """Write all transactions, one hex line each, in seq order."""
    lines = dump_lines(ledger.transactions)
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def parse_lines(lines: Iterable[str]) -> list[Transaction]:
    txs = []
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        try:
            data = bytes.fromhex(line)
        except ValueError:
            raise errors.LedgerFormatError(f"line {lineno}: not hex") from None
        txs.append(Transaction.decode(data))
    return txs


def load(path, params: Optional[ChainParams] = None, block_size: Optional[int] = None) -> Ledger:
    """Replay a dump file. Missing file means an empty ledger."""
    path = Path(path)
    if not path.exists():
        return Ledger(params)
    txs = parse_lines(path.read_text(encoding="utf-8").splitlines())
    return Ledger.replay(txs, params, block_size)
