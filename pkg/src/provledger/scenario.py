"""Scenario scripts: replayable step lists with per-step expectations.

A script is a JSON file of steps {as, op, expect, fee?}. Client references
(the sender and any address-valued payload fields) may be human-readable
aliases; they resolve to deterministic addresses, so the same script always
produces the same chain on a fresh ledger.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigInvalidError, IoFailureError, LedgerError
from .ledger import Ledger
from .tokens import ClientId

# payload fields that hold client references, by operation
_CLIENT_FIELDS = {
    "transfer": ("from", "to"),
    "approve": ("operator",),
    "whitelistAdd": ("member",),
    "whitelistRemove": ("member",),
}

# optional payload fields filled in when a step omits them
_PAYLOAD_DEFAULTS = {
    "requestToken": {"payment": 0},
    "createProvenance": {"inputs": []},
}


@dataclass(frozen=True)
class ScenarioStep:
    alias: str
    payload: dict
    expect: str
    fee: int = 1


@dataclass(frozen=True)
class StepOutcome:
    index: int
    alias: str
    tx_hash: str
    block_height: int
    status: str
    expect: str
    value: dict | None
    message: str | None

    @property
    def matched(self) -> bool:
        return self.status == self.expect

    def as_dict(self) -> dict:
        data = {
            "step": self.index,
            "as": self.alias,
            "txHash": self.tx_hash,
            "blockHeight": self.block_height,
            "result": self.status,
            "expect": self.expect,
            "matched": self.matched,
        }
        if self.value:
            data.update(self.value)
        return data


def resolve_client_hex(value: str) -> str:
    """Alias or 0x-hex to the canonical hex address."""
    if type(value) is not str or not value:
        raise ConfigInvalidError("client reference must be a non-empty string")
    try:
        if value.startswith("0x"):
            return ClientId.from_hex(value).hex
        return ClientId.from_alias(value).hex
    except ValueError as exc:
        raise ConfigInvalidError(f"bad client reference {value!r}: {exc}") from exc


def load_scenario(path: str | Path) -> list[ScenarioStep]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailureError(f"cannot read scenario: {exc}") from exc
    try:
        data = json.loads(text)
    except ValueError as exc:
        raise ConfigInvalidError(f"scenario is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("steps"), list):
        raise ConfigInvalidError("scenario must be an object with a steps list")
    steps = []
    for position, raw in enumerate(data["steps"]):
        if not isinstance(raw, dict):
            raise ConfigInvalidError(f"step {position} must be an object")
        unknown = set(raw) - {"as", "op", "expect", "fee"}
        if unknown:
            raise ConfigInvalidError(f"step {position} has unknown fields {sorted(unknown)}")
        alias = raw.get("as")
        payload = raw.get("op")
        expect = raw.get("expect", "ok")
        fee = raw.get("fee", 1)
        if type(alias) is not str or not alias:
            raise ConfigInvalidError(f"step {position} requires a client in 'as'")
        if not isinstance(payload, dict) or "op" not in payload:
            raise ConfigInvalidError(f"step {position} requires an op payload")
        if type(expect) is not str or not expect:
            raise ConfigInvalidError(f"step {position} has a bad expectation")
        if type(fee) is not int or fee < 0:
            raise ConfigInvalidError(f"step {position} has a bad fee")
        steps.append(ScenarioStep(alias=alias, payload=payload, expect=expect, fee=fee))
    return steps


def _resolve_payload(ledger: Ledger, payload: dict) -> dict:
    resolved = dict(payload)
    op = resolved.get("op")
    for key, value in _PAYLOAD_DEFAULTS.get(op, {}).items():
        resolved.setdefault(key, value)
    for field in _CLIENT_FIELDS.get(op, ()):
        if field in resolved and type(resolved[field]) is str:
            resolved[field] = resolve_client_hex(resolved[field])
    # transfer steps may omit 'from'; it defaults to the current owner
    if op == "transfer" and "from" not in resolved:
        token_id = resolved.get("tokenId")
        if type(token_id) is int and ledger.machine.tokens.exists(token_id):
            resolved["from"] = ledger.machine.tokens.owner_of(token_id).hex
    return resolved


def run_scenario(ledger: Ledger, steps: list[ScenarioStep]) -> list[StepOutcome]:
    """Execute steps one block each; stops after the first expectation mismatch.

    Submission-time rejections (bad nonce, malformed payload) never reach a
    block; they are reported with the current height so a step may expect
    them too.
    """
    outcomes: list[StepOutcome] = []
    for index, step in enumerate(steps):
        sender = ClientId.from_alias(step.alias)
        payload = _resolve_payload(ledger, step.payload)
        try:
            tx = ledger.submit_payload(sender, payload, fee=step.fee)
        except LedgerError as exc:
            outcome = StepOutcome(
                index=index,
                alias=step.alias,
                tx_hash="",
                block_height=ledger.height,
                status=exc.code,
                expect=step.expect,
                value=None,
                message=str(exc),
            )
            outcomes.append(outcome)
            if not outcome.matched:
                break
            continue
        block, block_outcomes = ledger.produce_block()
        executed = next(o for o in block_outcomes if o.tx.hash == tx.hash)
        outcome = StepOutcome(
            index=index,
            alias=step.alias,
            tx_hash=tx.hash,
            block_height=block.height,
            status=executed.status,
            expect=step.expect,
            value=executed.value,
            message=executed.message,
        )
        outcomes.append(outcome)
        if not outcome.matched:
            break
    return outcomes
