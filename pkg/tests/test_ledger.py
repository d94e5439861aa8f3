import dataclasses

import pytest

from batman import errors
from batman.codec import ZERO_HASH, Reader, Writer
from batman.contracts import Endorse, RecordEvent
from batman.ledger import Block, Ledger, Transaction, dump, load, parse_lines, verify_chain
from batman.scenario import random_ledger


def test_first_append_registers_identity(reg_payloads):
    ledger = Ledger()
    p = reg_payloads["alpha"]
    receipt = ledger.append_transaction(Transaction(0, 0, p, p.hash_m))
    assert len(ledger) == 1
    assert p.hash_m in ledger.state.registry
    assert receipt.hash_m == p.hash_m
    assert p.hash_m in ledger.state.reputation


def test_seq_mismatch(reg_payloads):
    ledger = random_ledger(3, seed=1)
    p = reg_payloads["alpha"]
    with pytest.raises(errors.SeqMismatch):
        ledger.append_transaction(Transaction(5, 0, p, p.hash_m))


def test_contract_rejection_forwards_reason_and_changes_nothing(reg_payloads):
    ledger = Ledger()
    a, b = reg_payloads["alpha"], reg_payloads["bravo"]
    ledger.submit(a, a.hash_m)
    before = ledger.state_digest()
    with pytest.raises(errors.ContractRejection) as info:
        ledger.submit(Endorse(a.hash_m, b.hash_m, 1), a.hash_m, 1)
    assert isinstance(info.value.reason, errors.UnknownIdentity)
    assert len(ledger) == 1
    assert ledger.state_digest() == before


def test_author_must_own_the_operation(reg_payloads):
    ledger = Ledger()
    a, b = reg_payloads["alpha"], reg_payloads["bravo"]
    with pytest.raises(errors.ContractRejection) as info:
        ledger.submit(a, b.hash_m)
    assert isinstance(info.value.reason, errors.Unauthorized)


def test_record_event_for_unknown_node():
    with pytest.raises(errors.ContractRejection):
        Ledger().submit(RecordEvent(bytes(32), 1, 1), bytes(32), 1)


def test_seal_genesis_and_chain(reg_payloads):
    ledger = Ledger()
    names = ["alpha", "bravo", "charlie", "delta"]
    for name in names[:3]:
        p = reg_payloads[name]
        ledger.submit(p, p.hash_m)
    b0 = ledger.seal_block()
    assert (b0.height, len(b0.txs), b0.prev_hash) == (0, 3, ZERO_HASH)
    p = reg_payloads["delta"]
    ledger.submit(p, p.hash_m)
    ledger.submit(RecordEvent(p.hash_m, 1, 1), p.hash_m, 1)
    b1 = ledger.seal_block()
    assert b1.prev_hash == b0.block_hash
    assert ledger.open_txs == []
    assert ledger.verify_chain()


def test_seal_empty_block():
    with pytest.raises(errors.EmptyBlock):
        Ledger().seal_block()


def test_verify_empty_chain():
    assert verify_chain([])


def test_fresh_five_block_chain_verifies():
    ledger = random_ledger(50, seed=3, block_size=10)
    assert len(ledger.blocks) == 5
    assert ledger.verify_chain()


def test_mutated_timestamp_fails_verification():
    ledger = random_ledger(50, seed=3, block_size=10)
    block = ledger.blocks[2]
    txs = list(block.txs)
    txs[4] = dataclasses.replace(txs[4], timestamp=txs[4].timestamp + 1)
    tampered = ledger.with_block(2, dataclasses.replace(block, txs=tuple(txs)))
    assert not tampered.verify_chain()
    assert ledger.verify_chain()


def test_tampered_payload_byte_fails_verification():
    ledger = random_ledger(30, seed=4, block_size=10)
    block = ledger.blocks[0]
    raw = bytearray(block.to_bytes())
    # Flip the last byte of the first transaction's encoding (inside its payload).
    first_len = len(block.txs[0].encode())
    offset = 8 + 32 + 4 + 4 + first_len - 1
    raw[offset] ^= 0x01
    try:
        mutated = Block.from_bytes(bytes(raw))
    except errors.LedgerFormatError:
        return
    assert not ledger.with_block(0, mutated).verify_chain()


def test_broken_back_link_fails():
    ledger = random_ledger(30, seed=4, block_size=10)
    b1 = ledger.blocks[1]
    relinked = Block.seal(1, bytes(32), b1.txs)
    assert not ledger.with_block(1, relinked).verify_chain()


def test_block_bytes_round_trip():
    ledger = random_ledger(30, seed=9, block_size=7)
    for block in ledger.blocks:
        assert Block.from_bytes(block.to_bytes()) == block


def test_transaction_round_trip_all_payload_kinds():
    ledger = random_ledger(120, seed=2)
    kinds = set()
    for tx in ledger.transactions:
        assert Transaction.decode(tx.encode()) == tx
        kinds.add(type(tx.payload).__name__)
    assert kinds == {"RegisterIdentity", "RotateKey", "RevokeKey", "RevokeMaster",
                     "Endorse", "RecordEvent"}


def test_decoding_is_strict():
    tx = random_ledger(1, seed=0).transactions[0]
    with pytest.raises(errors.LedgerFormatError):
        Transaction.decode(tx.encode() + b"\x00")
    with pytest.raises(errors.LedgerFormatError):
        Transaction.decode(tx.encode()[:-1])


def test_canonical_integers_are_little_endian():
    assert Writer().u64(1).u32(2).getvalue() == b"\x01" + bytes(7) + b"\x02" + bytes(3)
    r = Reader(Writer().blob(b"ab").opt_u64(None).opt_u64(7).getvalue())
    assert (r.blob(), r.opt_u64(), r.opt_u64()) == (b"ab", None, 7)
    r.finish()


def test_replay_twice_is_byte_identical():
    ledger = random_ledger(50, seed=8)
    txs = ledger.transactions
    first = Ledger.replay(txs).state.serialize()
    second = Ledger.replay(txs).state.serialize()
    assert first == second == ledger.state.serialize()


def test_dump_and_load(tmp_path):
    ledger = random_ledger(40, seed=5, block_size=10)
    path = tmp_path / "ledger.txt"
    dump(ledger, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 40
    assert all(bytes.fromhex(line) for line in lines)
    assert [t.seq for t in parse_lines(lines)] == list(range(40))
    loaded = load(path, block_size=10)
    assert loaded.state_digest() == ledger.state_digest()
    assert [b.block_hash for b in loaded.blocks] == [b.block_hash for b in ledger.blocks]


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("zz\n")
    with pytest.raises(errors.LedgerFormatError):
        load(path)


def test_load_missing_file_is_empty(tmp_path):
    assert len(load(tmp_path / "absent.txt")) == 0


def test_sealed_blocks_are_immutable():
    block = random_ledger(10, seed=1).blocks[0]
    with pytest.raises(dataclasses.FrozenInstanceError):
        block.height = 3
    assert isinstance(block.txs, tuple)
