"""Simulated hash-chained ledger executing the provenance state machine.

All mutations travel as transactions through a fee-prioritized mempool and
are applied by deterministic block production on a simulated clock. Blocks
are hash-linked (SHA-256 over canonical JSON) and persisted as an append-only
JSON-lines log where every block line is followed by a post-state digest
line, so any byte-level tampering as well as lost tail blocks are detectable
by replay.

Failed transactions are recorded on-chain with their error code; they
consume the sender's nonce but leave the state machine untouched.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping

from .canonical import ZERO_DIGEST, canonical_json, digest_of
from .errors import (
    BadNonceError,
    ConfigInvalidError,
    CorruptLogError,
    IoFailureError,
    LedgerError,
    MalformedPayloadError,
)
from .policy import PolicyLayer, UseCasePolicy, policy_from_dict
from .records import Context
from .tokens import ClientId

BLOCKS_FILE = "blocks.jsonl"
POLICY_FILE = "policy.json"
CONFIG_FILE = "config.json"

MAX_SEED = 2**64 - 1


# --- configuration ---------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    """Block production parameters: interval and capacity bound throughput.

    ``jitter`` adds a seeded uniform +/-20% to each interval to emulate
    irregular block times; it defaults to off so runs are exactly repeatable.
    """

    block_interval_ms: int
    block_capacity: int
    rng_seed: int = 0
    jitter: bool = False

    def __post_init__(self):
        if type(self.block_interval_ms) is not int or self.block_interval_ms < 1:
            raise ConfigInvalidError("block interval must be an integer >= 1 ms")
        if type(self.block_capacity) is not int or self.block_capacity < 1:
            raise ConfigInvalidError("block capacity must be an integer >= 1")
        if type(self.rng_seed) is not int or not 0 <= self.rng_seed <= MAX_SEED:
            raise ConfigInvalidError("rng seed must be an unsigned 64-bit integer")

    def as_dict(self) -> dict:
        return {
            "blockIntervalMs": self.block_interval_ms,
            "blockCapacity": self.block_capacity,
            "rngSeed": self.rng_seed,
            "jitter": self.jitter,
        }

    @classmethod
    def from_dict(cls, data: object) -> "SimConfig":
        if not isinstance(data, dict):
            raise ConfigInvalidError("sim config must be a JSON object")
        unknown = set(data) - {"blockIntervalMs", "blockCapacity", "rngSeed", "jitter"}
        if unknown:
            raise ConfigInvalidError(f"unknown sim config fields: {sorted(unknown)}")
        for field in ("blockIntervalMs", "blockCapacity"):
            if field not in data:
                raise ConfigInvalidError(f"sim config requires {field}")
        jitter = data.get("jitter", False)
        if type(jitter) is not bool:
            raise ConfigInvalidError("jitter must be a boolean")
        return cls(
            block_interval_ms=data["blockIntervalMs"],
            block_capacity=data["blockCapacity"],
            rng_seed=data.get("rngSeed", 0),
            jitter=jitter,
        )

    def digest(self) -> str:
        return digest_of(self.as_dict())


# --- transaction payloads --------------------------------------------------

def _check_uint(value: object, label: str) -> int:
    if type(value) is not int or value < 0:
        raise MalformedPayloadError(f"{label} must be a non-negative integer")
    return value


def _check_address(value: object, label: str) -> str:
    if type(value) is not str:
        raise MalformedPayloadError(f"{label} must be a 0x-hex address string")
    try:
        ClientId.from_hex(value)
    except ValueError as exc:
        raise MalformedPayloadError(f"bad {label}: {exc}") from exc
    return value


def _check_context(value: object) -> dict:
    if not isinstance(value, dict):
        raise MalformedPayloadError("context must be an object of string keys and values")
    try:
        Context(value)
    except ValueError as exc:
        raise MalformedPayloadError(str(exc)) from exc
    return value


def _check_inputs(value: object) -> list:
    if not isinstance(value, list):
        raise MalformedPayloadError("inputs must be a list of record ids")
    for item in value:
        _check_uint(item, "input id")
    return value


# op name -> (field name -> checker); payloads must carry exactly these fields
PAYLOAD_FIELDS = {
    "requestToken": {"payment": lambda v: _check_uint(v, "payment")},
    "transfer": {
        "tokenId": lambda v: _check_uint(v, "tokenId"),
        "from": lambda v: _check_address(v, "from"),
        "to": lambda v: _check_address(v, "to"),
    },
    "approve": {
        "tokenId": lambda v: _check_uint(v, "tokenId"),
        "operator": lambda v: _check_address(v, "operator"),
    },
    "createProvenance": {
        "tokenId": lambda v: _check_uint(v, "tokenId"),
        "inputs": _check_inputs,
        "context": _check_context,
    },
    "updateContext": {
        "provId": lambda v: _check_uint(v, "provId"),
        "context": _check_context,
    },
    "invalidate": {"provId": lambda v: _check_uint(v, "provId")},
    "whitelistAdd": {"member": lambda v: _check_address(v, "member")},
    "whitelistRemove": {"member": lambda v: _check_address(v, "member")},
}


def validate_payload(payload: object) -> dict:
    """Strict structural check; returns the payload if well-formed."""
    if not isinstance(payload, dict):
        raise MalformedPayloadError("payload must be a JSON object")
    op = payload.get("op")
    if op not in PAYLOAD_FIELDS:
        raise MalformedPayloadError(f"unknown operation {op!r}")
    fields = PAYLOAD_FIELDS[op]
    expected = set(fields) | {"op"}
    if set(payload) != expected:
        raise MalformedPayloadError(
            f"{op} payload must have exactly fields {sorted(expected)}"
        )
    for name, checker in fields.items():
        checker(payload[name])
    return payload


# --- transactions and blocks ------------------------------------------------

def _check_hash_hex(value: object, label: str) -> str:
    if (
        type(value) is not str
        or len(value) != 64
        or any(c not in "0123456789abcdef" for c in value)
    ):
        raise MalformedPayloadError(f"{label} must be 64 lowercase hex chars")
    return value


@dataclass(frozen=True)
class Transaction:
    """One state-machine operation; ``hash`` covers every other field."""

    sender: ClientId
    nonce: int
    payload: dict
    fee: int
    submitted_at: int
    hash: str

    @staticmethod
    def compute_hash(
        sender: ClientId, nonce: int, payload: Mapping, fee: int, submitted_at: int
    ) -> str:
        return digest_of(
            {
                "fee": fee,
                "nonce": nonce,
                "payload": payload,
                "sender": sender.hex,
                "submittedAt": submitted_at,
            }
        )

    @classmethod
    def build(
        cls,
        sender: ClientId,
        nonce: int,
        payload: dict,
        fee: int,
        submitted_at: int,
    ) -> "Transaction":
        if sender.is_zero:
            raise MalformedPayloadError("sender must not be the zero address")
        _check_uint(nonce, "nonce")
        _check_uint(fee, "fee")
        _check_uint(submitted_at, "submittedAt")
        payload = validate_payload(payload)
        tx_hash = cls.compute_hash(sender, nonce, payload, fee, submitted_at)
        return cls(
            sender=sender,
            nonce=nonce,
            payload=payload,
            fee=fee,
            submitted_at=submitted_at,
            hash=tx_hash,
        )

    def wire_dict(self) -> dict:
        return {
            "fee": self.fee,
            "hash": self.hash,
            "nonce": self.nonce,
            "payload": self.payload,
            "sender": self.sender.hex,
            "submittedAt": self.submitted_at,
        }

    @classmethod
    def from_wire(cls, data: object) -> "Transaction":
        if not isinstance(data, dict):
            raise MalformedPayloadError("transaction must be a JSON object")
        expected = {"fee", "hash", "nonce", "payload", "sender", "submittedAt"}
        if set(data) != expected:
            raise MalformedPayloadError(
                f"transaction must have exactly fields {sorted(expected)}"
            )
        sender = ClientId.from_hex(_check_address(data["sender"], "sender"))
        tx = cls.build(
            sender=sender,
            nonce=data["nonce"],
            payload=data["payload"],
            fee=data["fee"],
            submitted_at=data["submittedAt"],
        )
        _check_hash_hex(data["hash"], "transaction hash")
        if tx.hash != data["hash"]:
            raise MalformedPayloadError("transaction hash does not match its fields")
        return tx


@dataclass(frozen=True)
class Block:
    """Hash-linked batch of executed transactions with per-tx results."""

    height: int
    parent_hash: str
    timestamp: int
    transactions: tuple[Transaction, ...]
    results: tuple[str, ...]
    block_hash: str

    @staticmethod
    def compute_block_hash(
        height: int,
        parent_hash: str,
        timestamp: int,
        tx_hashes: Iterable[str],
        results: Iterable[str],
    ) -> str:
        return digest_of(
            {
                "height": height,
                "parentHash": parent_hash,
                "results": list(results),
                "timestamp": timestamp,
                "txHashes": list(tx_hashes),
            }
        )

    @classmethod
    def seal(
        cls,
        height: int,
        parent_hash: str,
        timestamp: int,
        transactions: tuple[Transaction, ...],
        results: tuple[str, ...],
    ) -> "Block":
        block_hash = cls.compute_block_hash(
            height, parent_hash, timestamp, (tx.hash for tx in transactions), results
        )
        return cls(height, parent_hash, timestamp, transactions, results, block_hash)

    def wire_dict(self) -> dict:
        return {
            "blockHash": self.block_hash,
            "height": self.height,
            "parentHash": self.parent_hash,
            "results": list(self.results),
            "timestamp": self.timestamp,
            "transactions": [tx.wire_dict() for tx in self.transactions],
        }

    @classmethod
    def from_wire(cls, data: object) -> "Block":
        if not isinstance(data, dict):
            raise MalformedPayloadError("block must be a JSON object")
        expected = {"blockHash", "height", "parentHash", "results", "timestamp", "transactions"}
        if set(data) != expected:
            raise MalformedPayloadError(f"block must have exactly fields {sorted(expected)}")
        _check_uint(data["height"], "height")
        _check_uint(data["timestamp"], "timestamp")
        _check_hash_hex(data["parentHash"], "parentHash")
        _check_hash_hex(data["blockHash"], "blockHash")
        if not isinstance(data["transactions"], list):
            raise MalformedPayloadError("transactions must be a list")
        transactions = tuple(Transaction.from_wire(item) for item in data["transactions"])
        results = data["results"]
        if not isinstance(results, list) or any(
            type(r) is not str or not r for r in results
        ):
            raise MalformedPayloadError("results must be a list of non-empty strings")
        if len(results) != len(transactions):
            raise MalformedPayloadError("results and transactions must align")
        block = cls.seal(
            height=data["height"],
            parent_hash=data["parentHash"],
            timestamp=data["timestamp"],
            transactions=transactions,
            results=tuple(results),
        )
        if block.block_hash != data["blockHash"]:
            raise MalformedPayloadError("block hash does not match its contents")
        return block


@dataclass(frozen=True)
class ExecutionOutcome:
    """Result of one transaction inside a produced block."""

    tx: Transaction
    status: str  # "ok" or an error code
    value: dict | None = None
    message: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class ChainVerification:
    ok: bool
    first_corrupt_height: int | None = None

    def as_dict(self) -> dict:
        data: dict = {"ok": self.ok}
        if not self.ok:
            data["firstCorruptHeight"] = self.first_corrupt_height
        return data


# --- the ledger -------------------------------------------------------------

class Ledger:
    """Single-producer chain over the policy/provenance state machine.

    One instance owns all state; mutations happen only inside
    :meth:`produce_block`, strictly sequentially. Reads may happen at any
    time between blocks.
    """

    def __init__(self, policy: UseCasePolicy, config: SimConfig):
        self.policy = policy
        self.config = config
        self._machine = PolicyLayer.build(policy)
        self._mempool: list[Transaction] = []
        self._pending_hashes: set[str] = set()
        self._next_nonce: dict[ClientId, int] = {}
        self._executed_nonce: dict[ClientId, int] = {}
        genesis = Block.seal(
            height=0, parent_hash=ZERO_DIGEST, timestamp=0, transactions=(), results=()
        )
        self._blocks: list[Block] = [genesis]
        self._digests: list[str] = [self.state_digest()]
        self._persisted_blocks = 0

    # -- read access --------------------------------------------------------

    @property
    def machine(self) -> PolicyLayer:
        return self._machine

    @property
    def blocks(self) -> tuple[Block, ...]:
        return tuple(self._blocks)

    @property
    def digests(self) -> tuple[str, ...]:
        """Post-state digest per block height."""
        return tuple(self._digests)

    @property
    def now(self) -> int:
        return self._blocks[-1].timestamp

    @property
    def height(self) -> int:
        return self._blocks[-1].height

    def pending_count(self) -> int:
        return len(self._mempool)

    def next_nonce(self, sender: ClientId) -> int:
        return self._next_nonce.get(sender, 0)

    def state_snapshot(self) -> dict:
        machine = self._machine
        policy_state = machine.snapshot()
        return {
            "associated": machine.provenance.snapshot_association(),
            "balances": policy_state["balances"],
            "configDigest": self.config.digest(),
            "nextProvId": machine.provenance.next_prov_id,
            "nextTokenId": policy_state["nextTokenId"],
            "nonces": {
                sender.hex: nonce for sender, nonce in sorted(self._executed_nonce.items())
            },
            "policyDigest": policy_state["policyDigest"],
            "records": machine.provenance.records.snapshot(),
            "seededTotal": policy_state["seededTotal"],
            "tokens": machine.tokens.snapshot(),
            "treasury": policy_state["treasury"],
            "whitelist": policy_state["whitelist"],
        }

    def state_digest(self) -> str:
        return digest_of(self.state_snapshot())

    # -- clock ---------------------------------------------------------------

    def _interval_for(self, height: int) -> int:
        base = self.config.block_interval_ms
        if not self.config.jitter:
            return base
        rng = random.Random((self.config.rng_seed << 20) ^ height)
        spread = base // 5
        return max(1, base + rng.randint(-spread, spread))

    def next_block_timestamp(self) -> int:
        return self.now + self._interval_for(len(self._blocks))

    # -- submission ----------------------------------------------------------

    def build_transaction(
        self,
        sender: ClientId,
        payload: dict,
        fee: int = 1,
        submitted_at: int | None = None,
        nonce: int | None = None,
    ) -> Transaction:
        """Assemble a transaction with the sender's next nonce by default."""
        if submitted_at is None:
            submitted_at = self.now
        if nonce is None:
            nonce = self.next_nonce(sender)
        return Transaction.build(sender, nonce, payload, fee, submitted_at)

    def submit(self, tx: Transaction) -> str:
        """Queue a transaction; returns its hash.

        The nonce must be the sender's next one counting both executed and
        pending transactions, which also rejects resubmission of an identical
        transaction.
        """
        rebuilt = Transaction.build(tx.sender, tx.nonce, tx.payload, tx.fee, tx.submitted_at)
        if rebuilt.hash != tx.hash:
            raise MalformedPayloadError("transaction hash does not match its fields")
        expected = self._next_nonce.get(tx.sender, 0)
        if tx.nonce != expected:
            raise BadNonceError(
                f"nonce {tx.nonce} for {tx.sender.hex}, expected {expected}"
            )
        self._mempool.append(tx)
        self._pending_hashes.add(tx.hash)
        self._next_nonce[tx.sender] = tx.nonce + 1
        return tx.hash

    def submit_payload(
        self, sender: ClientId, payload: dict, fee: int = 1, submitted_at: int | None = None
    ) -> Transaction:
        tx = self.build_transaction(sender, payload, fee=fee, submitted_at=submitted_at)
        self.submit(tx)
        return tx

    # -- execution -----------------------------------------------------------

    def _execute(self, tx: Transaction) -> dict:
        machine = self._machine
        payload = tx.payload
        op = payload["op"]
        if op == "requestToken":
            token_id = machine.request_token(tx.sender, payload["payment"])
            return {"tokenId": token_id}
        if op == "transfer":
            machine.tokens.transfer(
                tx.sender,
                ClientId.from_hex(payload["from"]),
                ClientId.from_hex(payload["to"]),
                payload["tokenId"],
            )
            return {}
        if op == "approve":
            machine.tokens.approve(
                tx.sender, ClientId.from_hex(payload["operator"]), payload["tokenId"]
            )
            return {}
        if op == "createProvenance":
            prov_id = machine.create_provenance_checked(
                tx.sender,
                payload["tokenId"],
                list(payload["inputs"]),
                Context(payload["context"]),
            )
            return {"provId": prov_id}
        if op == "updateContext":
            machine.gate_update(tx.sender, payload["provId"], Context(payload["context"]))
            return {}
        if op == "invalidate":
            machine.gate_invalidate(tx.sender, payload["provId"])
            return {}
        if op == "whitelistAdd":
            machine.whitelist_add(tx.sender, ClientId.from_hex(payload["member"]))
            return {}
        if op == "whitelistRemove":
            machine.whitelist_remove(tx.sender, ClientId.from_hex(payload["member"]))
            return {}
        raise MalformedPayloadError(f"unknown operation {op!r}")

    def _select_transactions(self, timestamp: int) -> list[Transaction]:
        """Fee-priority selection respecting per-sender nonce order.

        Candidates are ordered by (fee desc, submitted_at asc, hash asc); a
        transaction is selectable only once all lower nonces of its sender
        are executed or already selected, so passes repeat until the block is
        full or no candidate qualifies.
        """
        candidates = [tx for tx in self._mempool if tx.submitted_at <= timestamp]
        candidates.sort(key=lambda tx: (-tx.fee, tx.submitted_at, tx.hash))
        capacity = self.config.block_capacity
        selected: list[Transaction] = []
        selected_hashes: set[str] = set()
        sender_next = dict(self._executed_nonce)
        progress = True
        while len(selected) < capacity and progress:
            progress = False
            for tx in candidates:
                if len(selected) >= capacity:
                    break
                if tx.hash in selected_hashes:
                    continue
                if tx.nonce != sender_next.get(tx.sender, 0):
                    continue
                selected.append(tx)
                selected_hashes.add(tx.hash)
                sender_next[tx.sender] = tx.nonce + 1
                progress = True
        return selected

    def produce_block(self) -> tuple[Block, list[ExecutionOutcome]]:
        """Advance the clock one interval and seal the next block.

        Included transactions execute in selection order; failures are
        recorded with their error code and leave state untouched. An empty
        mempool still yields an (empty) block.
        """
        height = len(self._blocks)
        timestamp = self.next_block_timestamp()
        selected = self._select_transactions(timestamp)
        outcomes: list[ExecutionOutcome] = []
        for tx in selected:
            try:
                value = self._execute(tx)
                outcomes.append(ExecutionOutcome(tx=tx, status="ok", value=value))
            except LedgerError as exc:
                outcomes.append(
                    ExecutionOutcome(tx=tx, status=exc.code, message=str(exc))
                )
            self._executed_nonce[tx.sender] = tx.nonce + 1
        block = Block.seal(
            height=height,
            parent_hash=self._blocks[-1].block_hash,
            timestamp=timestamp,
            transactions=tuple(selected),
            results=tuple(outcome.status for outcome in outcomes),
        )
        self._blocks.append(block)
        self._digests.append(self.state_digest())
        if selected:
            selected_hashes = {tx.hash for tx in selected}
            self._mempool = [tx for tx in self._mempool if tx.hash not in selected_hashes]
            self._pending_hashes -= selected_hashes
        return block, outcomes

    def run_until_drained(self, max_blocks: int) -> list[ExecutionOutcome]:
        """Produce blocks until the mempool is empty, up to ``max_blocks``."""
        outcomes: list[ExecutionOutcome] = []
        produced = 0
        while self._mempool and produced < max_blocks:
            _, block_outcomes = self.produce_block()
            outcomes.extend(block_outcomes)
            produced += 1
        return outcomes

    # -- replay (trusted internal path; see _scan_chain for validation) ------

    def _append_replayed_block(self, block: Block) -> None:
        statuses = []
        for tx in block.transactions:
            expected = self._executed_nonce.get(tx.sender, 0)
            if tx.nonce != expected:
                raise CorruptLogError(
                    f"nonce gap for {tx.sender.hex} at height {block.height}",
                    height=block.height,
                )
            try:
                self._execute(tx)
                statuses.append("ok")
            except LedgerError as exc:
                statuses.append(exc.code)
            self._executed_nonce[tx.sender] = tx.nonce + 1
            self._next_nonce[tx.sender] = tx.nonce + 1
        if tuple(statuses) != block.results:
            raise CorruptLogError(
                f"recorded results diverge from replay at height {block.height}",
                height=block.height,
            )
        self._blocks.append(block)
        self._digests.append(self.state_digest())

    # -- persistence ----------------------------------------------------------

    def persist(self, directory: str | Path) -> Path:
        """Append blocks not yet on disk, each followed by its state digest.

        Writes the policy and config files on first use so the directory is
        self-contained for :func:`load_ledger`. The log only ever grows; a
        second persist call with no new blocks is a no-op.
        """
        directory = Path(directory)
        path = directory / BLOCKS_FILE
        new_blocks = self._blocks[self._persisted_blocks :]
        if not new_blocks:
            return path
        try:
            directory.mkdir(parents=True, exist_ok=True)
            policy_path = directory / POLICY_FILE
            if not policy_path.exists():
                policy_path.write_text(
                    canonical_json(self.policy.as_dict()) + "\n", encoding="utf-8"
                )
            config_path = directory / CONFIG_FILE
            if not config_path.exists():
                config_path.write_text(
                    canonical_json(self.config.as_dict()) + "\n", encoding="utf-8"
                )
            with open(path, "a", encoding="utf-8") as handle:
                for block in new_blocks:
                    handle.write(canonical_json(block.wire_dict()) + "\n")
                    handle.write(
                        canonical_json({"stateDigest": self._digests[block.height]}) + "\n"
                    )
        except OSError as exc:
            raise IoFailureError(f"cannot write block log: {exc}") from exc
        self._persisted_blocks = len(self._blocks)
        return path


# --- ledger directories ------------------------------------------------------

def _read_json_file(path: Path, label: str) -> Any:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailureError(f"cannot read {label}: {exc}") from exc
    try:
        return json.loads(text)
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigInvalidError(f"{label} is not valid JSON: {exc}") from exc


def init_ledger_dir(
    policy_data: object, config_data: object, directory: str | Path
) -> Ledger:
    """Create a fresh ledger directory: policy, config, and the genesis block."""
    directory = Path(directory)
    policy = policy_from_dict(policy_data)
    config = SimConfig.from_dict(config_data)
    if (directory / BLOCKS_FILE).exists():
        raise IoFailureError(f"ledger already exists at {directory}")
    try:
        directory.mkdir(parents=True, exist_ok=True)
        (directory / POLICY_FILE).write_text(
            canonical_json(policy.as_dict()) + "\n", encoding="utf-8"
        )
        (directory / CONFIG_FILE).write_text(
            canonical_json(config.as_dict()) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise IoFailureError(f"cannot initialise ledger dir: {exc}") from exc
    ledger = Ledger(policy, config)
    ledger.persist(directory)
    return ledger


def _scan_chain(directory: str | Path) -> Ledger:
    """Replay and fully validate a persisted chain.

    Raises :class:`CorruptLogError` carrying the height of the first bad
    block pair. Validation covers: canonical line encoding, strict wire
    structure, per-transaction hashes, block hashes and parent links,
    strictly increasing timestamps, result agreement under re-execution, and
    the recorded post-state digest of every block.
    """
    directory = Path(directory)
    policy = policy_from_dict(_read_json_file(directory / POLICY_FILE, "policy file"))
    config = SimConfig.from_dict(_read_json_file(directory / CONFIG_FILE, "config file"))
    path = directory / BLOCKS_FILE
    if not path.exists():
        raise IoFailureError(f"no block log at {path}")
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IoFailureError(f"cannot read block log: {exc}") from exc

    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    if not lines:
        raise CorruptLogError("empty block log", height=0)

    ledger = Ledger(policy, config)
    for height in range(0, (len(lines) + 1) // 2):
        block_line = lines[2 * height]
        if 2 * height + 1 >= len(lines):
            raise CorruptLogError("block without state digest record", height=height)
        digest_line = lines[2 * height + 1]

        parsed = _parse_canonical_line(block_line, height)
        if height == 0:
            # the genesis block is fully determined by policy and config
            if parsed != ledger.blocks[0].wire_dict():
                raise CorruptLogError("genesis block mismatch", height=0)
        else:
            try:
                block = Block.from_wire(parsed)
            except MalformedPayloadError as exc:
                raise CorruptLogError(str(exc), height=height) from exc
            if block.height != height:
                raise CorruptLogError(
                    f"expected height {height}, found {block.height}", height=height
                )
            previous = ledger.blocks[-1]
            if block.parent_hash != previous.block_hash:
                raise CorruptLogError("broken parent link", height=height)
            if block.timestamp <= previous.timestamp:
                raise CorruptLogError("timestamps must strictly increase", height=height)
            if len(block.transactions) > config.block_capacity:
                raise CorruptLogError("block over capacity", height=height)
            ledger._append_replayed_block(block)

        digest_parsed = _parse_canonical_line(digest_line, height)
        if set(digest_parsed) != {"stateDigest"} or digest_parsed["stateDigest"] != ledger.digests[height]:
            raise CorruptLogError(
                f"state digest mismatch after height {height}", height=height
            )
    ledger._persisted_blocks = len(ledger.blocks)
    return ledger


def _parse_canonical_line(raw: bytes, height: int) -> Any:
    try:
        text = raw.decode("utf-8")
        parsed = json.loads(text)
    except (UnicodeDecodeError, ValueError) as exc:
        raise CorruptLogError(f"unparseable log line: {exc}", height=height) from exc
    if canonical_json(parsed) != text:
        raise CorruptLogError("log line is not in canonical form", height=height)
    return parsed


def load_ledger(directory: str | Path) -> Ledger:
    """Reconstruct a ledger by replaying its directory; fails on any corruption."""
    return _scan_chain(directory)


def verify_chain(directory: str | Path) -> ChainVerification:
    """Check integrity of a persisted ledger without raising on corruption."""
    try:
        _scan_chain(directory)
    except CorruptLogError as exc:
        height = exc.height if exc.height is not None else 0
        return ChainVerification(ok=False, first_corrupt_height=height)
    return ChainVerification(ok=True)
