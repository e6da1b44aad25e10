"""Ledger: mempool, fee priority, block production, tamper evidence, replay."""

from __future__ import annotations

import json
import random

import pytest

from provledger import ClientId, SimConfig, Transaction, load_ledger, verify_chain
from provledger.canonical import ZERO_DIGEST, canonical_json
from provledger.errors import (
    BadNonceError,
    ConfigInvalidError,
    CorruptLogError,
    IoFailureError,
    MalformedPayloadError,
)
from provledger.ledger import BLOCKS_FILE
from support import ALICE, BOB, CAROL, MALLORY, quick_ledger

REQUEST = {"op": "requestToken", "payment": 0}


def create_payload(token_id=1, inputs=(), agent="a"):
    return {
        "op": "createProvenance",
        "tokenId": token_id,
        "inputs": list(inputs),
        "context": {"agent": agent},
    }


# --- submission ----------------------------------------------------------------

def test_submit_returns_hash_and_queues():
    ledger = quick_ledger()
    tx = ledger.build_transaction(ALICE, REQUEST)
    assert ledger.submit(tx) == tx.hash
    assert ledger.pending_count() == 1


def test_submit_nonce_gap_rejected():
    ledger = quick_ledger()
    tx = ledger.build_transaction(ALICE, REQUEST, nonce=1)
    with pytest.raises(BadNonceError):
        ledger.submit(tx)


def test_resubmitting_identical_transaction_rejected():
    ledger = quick_ledger()
    tx = ledger.build_transaction(ALICE, REQUEST)
    ledger.submit(tx)
    with pytest.raises(BadNonceError):
        ledger.submit(tx)


def test_malformed_payloads_rejected():
    ledger = quick_ledger()
    bad = [
        {"op": "mystery"},
        {"op": "requestToken"},  # missing payment
        {"op": "requestToken", "payment": 0, "extra": 1},
        {"op": "requestToken", "payment": -2},
        {"op": "invalidate", "provId": True},  # bools are not ids
        {"op": "transfer", "tokenId": 1, "from": "alice", "to": BOB.hex},
        {"op": "createProvenance", "tokenId": 1, "inputs": [1], "context": {"k": 2}},
        "not even an object",
    ]
    for payload in bad:
        with pytest.raises(MalformedPayloadError):
            ledger.submit_payload(ALICE, payload)  # type: ignore[arg-type]


def test_zero_sender_rejected():
    ledger = quick_ledger()
    from provledger import ZERO_CLIENT

    with pytest.raises(MalformedPayloadError):
        ledger.submit_payload(ZERO_CLIENT, REQUEST)


def test_tampered_transaction_hash_rejected():
    ledger = quick_ledger()
    tx = ledger.build_transaction(ALICE, REQUEST)
    forged = Transaction(
        sender=tx.sender,
        nonce=tx.nonce,
        payload=tx.payload,
        fee=tx.fee + 1,
        submitted_at=tx.submitted_at,
        hash=tx.hash,
    )
    with pytest.raises(MalformedPayloadError):
        ledger.submit(forged)


# --- block production -------------------------------------------------------------

def test_fee_priority_selection():
    """Pending fees [5, 1, 9] with capacity 2: the block takes 9 then 5."""
    ledger = quick_ledger(capacity=2)
    ledger.submit_payload(ALICE, REQUEST, fee=5)
    ledger.submit_payload(BOB, REQUEST, fee=1)
    ledger.submit_payload(CAROL, REQUEST, fee=9)
    block, _ = ledger.produce_block()
    assert [tx.fee for tx in block.transactions] == [9, 5]
    assert ledger.pending_count() == 1
    block2, _ = ledger.produce_block()
    assert [tx.fee for tx in block2.transactions] == [1]


def test_equal_fee_ties_break_by_submission_time():
    ledger = quick_ledger(capacity=1)
    first = ledger.submit_payload(ALICE, REQUEST, fee=3, submitted_at=0)
    ledger.submit_payload(BOB, REQUEST, fee=3, submitted_at=5)
    block, _ = ledger.produce_block()
    assert block.transactions[0].hash == first.hash


def test_empty_block_extends_chain():
    ledger = quick_ledger()
    height_before = ledger.height
    block, outcomes = ledger.produce_block()
    assert block.height == height_before + 1
    assert block.transactions == ()
    assert outcomes == []
    assert block.parent_hash == ledger.blocks[-2].block_hash


def test_genesis_links_to_zero():
    ledger = quick_ledger()
    genesis = ledger.blocks[0]
    assert genesis.height == 0
    assert genesis.parent_hash == ZERO_DIGEST
    assert genesis.timestamp == 0


def test_timestamps_strictly_increase_with_jitter():
    ledger = quick_ledger(seed=9, jitter=True)
    for _ in range(30):
        ledger.produce_block()
    stamps = [block.timestamp for block in ledger.blocks]
    assert all(b > a for a, b in zip(stamps, stamps[1:]))
    # jittered intervals stay within +/-20% of the base interval
    intervals = [b - a for a, b in zip(stamps, stamps[1:])]
    assert all(800 <= gap <= 1200 for gap in intervals)


def test_failed_transaction_recorded_on_chain():
    """A failing tx is included with its error code; the state equals an
    oracle ledger that never saw the failing tx."""
    ledger = quick_ledger()
    ledger.submit_payload(ALICE, REQUEST)
    ledger.produce_block()
    ledger.submit_payload(MALLORY, create_payload(token_id=1, agent="intruder"), fee=9)
    ledger.submit_payload(ALICE, create_payload(token_id=1), fee=5)
    ledger.submit_payload(ALICE, create_payload(token_id=1, inputs=[1], agent="b"), fee=1)
    block, outcomes = ledger.produce_block()
    assert block.results == ("NotAuthorized", "ok", "ok")
    assert [o.status for o in outcomes] == ["NotAuthorized", "ok", "ok"]

    oracle = quick_ledger()
    oracle.submit_payload(ALICE, REQUEST)
    oracle.produce_block()
    oracle.submit_payload(ALICE, create_payload(token_id=1), fee=5)
    oracle.submit_payload(ALICE, create_payload(token_id=1, inputs=[1], agent="b"), fee=1)
    oracle.produce_block()

    live, shadow = ledger.state_snapshot(), oracle.state_snapshot()
    for snapshot in (live, shadow):
        snapshot.pop("nonces")
    assert live == shadow


def test_nonce_order_beats_fee_within_sender():
    """A sender's high-fee tx cannot jump its own earlier low-fee tx."""
    ledger = quick_ledger(capacity=2)
    ledger.submit_payload(ALICE, REQUEST, fee=1)
    ledger.submit_payload(ALICE, REQUEST, fee=100)
    ledger.submit_payload(BOB, REQUEST, fee=5)
    block, _ = ledger.produce_block()
    # fee-100 is blocked behind fee-1, so the first block is [bob@5, alice@1]
    assert [(tx.sender, tx.fee) for tx in block.transactions] == [(BOB, 5), (ALICE, 1)]
    block2, _ = ledger.produce_block()
    assert [tx.fee for tx in block2.transactions] == [100]
    assert block2.results == ("ok",)


def test_future_submissions_wait_for_their_time():
    ledger = quick_ledger(interval=1000)
    ledger.submit_payload(ALICE, REQUEST, submitted_at=2500)
    block1, _ = ledger.produce_block()  # t=1000
    assert block1.transactions == ()
    block2, _ = ledger.produce_block()  # t=2000
    assert block2.transactions == ()
    block3, _ = ledger.produce_block()  # t=3000
    assert len(block3.transactions) == 1


def test_priority_invariant_random_loads():
    """Within each block fees are non-increasing, and when a block is full no
    better-paying eligible tx was left behind."""
    rng = random.Random(5)
    ledger = quick_ledger(capacity=3)
    senders = [ClientId.from_alias(f"s{i}") for i in range(40)]
    for i, sender in enumerate(senders):
        ledger.submit_payload(sender, REQUEST, fee=rng.randint(1, 20))
    while ledger.pending_count():
        pending_before = {tx.hash: tx for tx in ledger._mempool}
        block, _ = ledger.produce_block()
        fees = [tx.fee for tx in block.transactions]
        assert fees == sorted(fees, reverse=True)
        if len(fees) == ledger.config.block_capacity:
            leftover = [
                tx.fee
                for tx in pending_before.values()
                if tx.hash not in {t.hash for t in block.transactions}
                and tx.submitted_at <= block.timestamp
            ]
            assert all(fee <= min(fees) for fee in leftover)


def test_throughput_ceiling():
    ledger = quick_ledger(interval=1000, capacity=4)
    for i in range(40):
        ledger.submit_payload(ClientId.from_alias(f"c{i}"), REQUEST, fee=1)
    confirmed = 0
    blocks = 0
    while ledger.pending_count():
        block, _ = ledger.produce_block()
        confirmed += len(block.transactions)
        blocks += 1
    elapsed_s = ledger.now / 1000.0
    assert confirmed / elapsed_s <= 4 / 1.0 + 1e-9


# --- persistence and tamper evidence ----------------------------------------------


def busy_ledger(tmp_path, blocks=4):
    ledger = quick_ledger()
    ledger.submit_payload(ALICE, REQUEST)
    ledger.produce_block()
    ledger.submit_payload(ALICE, create_payload(token_id=1))
    ledger.produce_block()
    for i in range(blocks - 2):
        ledger.submit_payload(
            ALICE, create_payload(token_id=1, inputs=[], agent=f"agent{i}")
        )
        ledger.produce_block()
    directory = tmp_path / "ledger"
    ledger.persist(directory)
    return ledger, directory


def test_persist_load_roundtrip(tmp_path):
    ledger, directory = busy_ledger(tmp_path)
    loaded = load_ledger(directory)
    assert loaded.digests == ledger.digests
    assert loaded.blocks == ledger.blocks
    assert loaded.state_snapshot() == ledger.state_snapshot()
    assert verify_chain(directory).ok is True


def test_persist_appends_strictly(tmp_path):
    ledger, directory = busy_ledger(tmp_path)
    before = (directory / BLOCKS_FILE).read_bytes()
    ledger.submit_payload(ALICE, create_payload(token_id=1, agent="later"))
    ledger.produce_block()
    ledger.persist(directory)
    after = (directory / BLOCKS_FILE).read_bytes()
    assert after.startswith(before)
    assert len(after) > len(before)
    # re-persisting with nothing new leaves the file untouched
    ledger.persist(directory)
    assert (directory / BLOCKS_FILE).read_bytes() == after


def test_loaded_ledger_continues_producing(tmp_path):
    ledger, directory = busy_ledger(tmp_path)
    loaded = load_ledger(directory)
    loaded.submit_payload(ALICE, create_payload(token_id=1, agent="resumed"))
    block, outcomes = loaded.produce_block()
    assert outcomes[0].status == "ok"
    assert block.timestamp > ledger.now


def test_byte_flip_fuzz_detects_everything(tmp_path):
    """Mini version of the acceptance fuzz: flip every byte of a 4-block log
    and require detection with the damaged pair's height."""
    _, directory = busy_ledger(tmp_path, blocks=4)
    path = directory / BLOCKS_FILE
    original = path.read_bytes()
    line_of_offset = []
    line = 0
    for byte in original:
        line_of_offset.append(line)
        if byte == ord("\n"):
            line += 1
    for offset in range(len(original)):
        damaged = bytearray(original)
        damaged[offset] ^= 0x01
        path.write_bytes(bytes(damaged))
        result = verify_chain(directory)
        assert result.ok is False, f"flip at offset {offset} went undetected"
        assert result.first_corrupt_height == line_of_offset[offset] // 2
    path.write_bytes(original)
    assert verify_chain(directory).ok is True


def test_truncated_log_detected(tmp_path):
    """Removing the final block line leaves its digest dangling."""
    _, directory = busy_ledger(tmp_path)
    path = directory / BLOCKS_FILE
    lines = path.read_bytes().decode().splitlines()
    path.write_text("\n".join(lines[:-2] + [lines[-1]]) + "\n", encoding="utf-8")
    result = verify_chain(directory)
    assert result.ok is False


def test_dropped_digest_line_detected(tmp_path):
    _, directory = busy_ledger(tmp_path)
    path = directory / BLOCKS_FILE
    lines = path.read_bytes().decode().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n", encoding="utf-8")
    result = verify_chain(directory)
    assert result.ok is False
    assert result.first_corrupt_height == (len(lines) - 1) // 2


def test_load_rejects_corruption(tmp_path):
    _, directory = busy_ledger(tmp_path)
    path = directory / BLOCKS_FILE
    data = bytearray(path.read_bytes())
    data[10] ^= 0xFF
    path.write_bytes(bytes(data))
    with pytest.raises(CorruptLogError):
        load_ledger(directory)


def test_load_missing_files(tmp_path):
    with pytest.raises(IoFailureError):
        load_ledger(tmp_path / "nowhere")


def test_determinism_identical_schedules_identical_logs(tmp_path):
    def build(target):
        ledger = quick_ledger(seed=77, jitter=True)
        ledger.submit_payload(ALICE, REQUEST, fee=2)
        ledger.produce_block()
        for i in range(5):
            ledger.submit_payload(ALICE, create_payload(token_id=1, agent=f"x{i}"), fee=i + 1)
        ledger.produce_block()
        ledger.produce_block()
        ledger.persist(target)
        return (target / BLOCKS_FILE).read_bytes()

    first = build(tmp_path / "a")
    second = build(tmp_path / "b")
    assert first == second


def test_replay_digest_equality_each_block(tmp_path):
    rng = random.Random(3)
    ledger = quick_ledger(capacity=3)
    clients = [ALICE, BOB, CAROL]
    for client in clients:
        ledger.submit_payload(client, REQUEST)
    ledger.produce_block()
    for step in range(30):
        client = rng.choice(clients)
        token = rng.randint(1, 3)
        ledger.submit_payload(client, create_payload(token_id=token, agent=f"s{step}"))
        if rng.random() < 0.5:
            ledger.produce_block()
    while ledger.pending_count():
        ledger.produce_block()
    directory = tmp_path / "replayed"
    ledger.persist(directory)
    loaded = load_ledger(directory)
    assert loaded.digests == ledger.digests


# --- config -----------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigInvalidError):
        SimConfig(block_interval_ms=0, block_capacity=1)
    with pytest.raises(ConfigInvalidError):
        SimConfig(block_interval_ms=10, block_capacity=0)
    with pytest.raises(ConfigInvalidError):
        SimConfig(block_interval_ms=10, block_capacity=1, rng_seed=-1)
    with pytest.raises(ConfigInvalidError):
        SimConfig.from_dict({"blockIntervalMs": 10})
    with pytest.raises(ConfigInvalidError):
        SimConfig.from_dict({"blockIntervalMs": 10, "blockCapacity": 1, "bogus": 2})
    config = SimConfig.from_dict({"blockIntervalMs": 10, "blockCapacity": 1})
    assert SimConfig.from_dict(config.as_dict()) == config


def test_wire_forms_are_canonical(tmp_path):
    _, directory = busy_ledger(tmp_path)
    for raw in (directory / BLOCKS_FILE).read_bytes().splitlines():
        parsed = json.loads(raw)
        assert canonical_json(parsed).encode() == raw


def test_whitelist_payloads_execute_on_chain():
    from support import whitelist_policy

    ledger = quick_ledger(policy=whitelist_policy(admin=CAROL, members=[]))
    ledger.submit_payload(ALICE, REQUEST)
    block, _ = ledger.produce_block()
    assert block.results == ("NotWhitelisted",)
    ledger.submit_payload(CAROL, {"op": "whitelistAdd", "member": ALICE.hex})
    block, _ = ledger.produce_block()
    assert block.results == ("ok",)
    ledger.submit_payload(ALICE, REQUEST)
    block, outcomes = ledger.produce_block()
    assert block.results == ("ok",)
    assert outcomes[0].value == {"tokenId": 1}
    ledger.submit_payload(BOB, {"op": "whitelistRemove", "member": ALICE.hex})
    block, _ = ledger.produce_block()
    assert block.results == ("NotAuthorized",)


def test_tampered_policy_file_detected(tmp_path):
    """The genesis digest covers the policy, so editing policy.json breaks
    verification at height 0."""
    _, directory = busy_ledger(tmp_path)
    policy_path = directory / "policy.json"
    text = policy_path.read_text(encoding="utf-8")
    policy_path.write_text(
        text.replace('"allowUpdate":true', '"allowUpdate":false'), encoding="utf-8"
    )
    result = verify_chain(directory)
    assert result.ok is False
    assert result.first_corrupt_height == 0


def test_prior_context_recoverable_from_log(tmp_path):
    """Updates replace state, but the block log keeps the old context."""
    ledger = quick_ledger()
    ledger.submit_payload(ALICE, REQUEST)
    ledger.produce_block()
    ledger.submit_payload(ALICE, create_payload(token_id=1, agent="original-agent"))
    ledger.produce_block()
    ledger.submit_payload(
        ALICE, {"op": "updateContext", "provId": 1, "context": {"agent": "replacement"}}
    )
    ledger.produce_block()
    assert ledger.machine.provenance.records.get_record(1).context.get("agent") == "replacement"
    directory = tmp_path / "audit"
    ledger.persist(directory)
    log_text = (directory / BLOCKS_FILE).read_text(encoding="utf-8")
    assert "original-agent" in log_text
    assert "replacement" in log_text
