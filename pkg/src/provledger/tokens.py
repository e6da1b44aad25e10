"""Ownership layer: one non-fungible token per data point.

A token is the entry ticket for writing provenance: only its owner or a
client the owner approved may create records for the data point it
identifies. The surface is a reduced non-fungible-token interface
(mint / owner_of / exists / transfer / approve); minting is restricted to
the policy layer, which controls assignment.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .errors import (
    DuplicateTokenError,
    NotAuthorizedError,
    TokenNotFoundError,
    ZeroAddressError,
)
from .records import validate_id

ADDRESS_BYTES = 32


@dataclass(frozen=True, order=True)
class ClientId:
    """32-byte client address, displayed as 0x-prefixed lowercase hex."""

    raw: bytes

    def __post_init__(self):
        if type(self.raw) is not bytes or len(self.raw) != ADDRESS_BYTES:
            raise ValueError(f"client address must be {ADDRESS_BYTES} bytes")

    @classmethod
    def from_hex(cls, text: str) -> "ClientId":
        if type(text) is not str or not text.startswith("0x"):
            raise ValueError(f"client address must start with 0x, got {text!r}")
        body = text[2:]
        if len(body) != ADDRESS_BYTES * 2 or body != body.lower():
            raise ValueError(f"client address must be {ADDRESS_BYTES * 2} lowercase hex chars")
        return cls(bytes.fromhex(body))

    @classmethod
    def from_alias(cls, alias: str) -> "ClientId":
        """Deterministic address for a human-readable alias (digest of the alias)."""
        if not alias:
            raise ValueError("alias must be non-empty")
        return cls(hashlib.sha256(alias.encode("utf-8")).digest())

    @property
    def hex(self) -> str:
        return "0x" + self.raw.hex()

    @property
    def is_zero(self) -> bool:
        return self.raw == b"\x00" * ADDRESS_BYTES

    def __repr__(self) -> str:
        return f"ClientId({self.hex})"


ZERO_CLIENT = ClientId(b"\x00" * ADDRESS_BYTES)


@dataclass
class Token:
    id: int
    owner: ClientId
    approved: set[ClientId] = field(default_factory=set)


class TokenRegistry:
    """Token ownership state: exactly one owner per minted token.

    Minting requires the assignment key held by the policy layer; transfer
    and approve authenticate through the explicit ``caller`` argument.
    """

    def __init__(self, mint_key: object):
        self._mint_key = mint_key
        self._tokens: dict[int, Token] = {}
        self._order: list[int] = []

    def mint(self, key: object, to: ClientId, token_id: int) -> None:
        if key is not self._mint_key:
            raise PermissionError("minting requires the assignment key")
        validate_id(token_id, "token_id")
        if to.is_zero:
            raise ZeroAddressError("cannot mint to the zero address")
        if token_id in self._tokens:
            raise DuplicateTokenError(f"token {token_id} already minted")
        self._tokens[token_id] = Token(id=token_id, owner=to)
        self._order.append(token_id)

    def exists(self, token_id: int) -> bool:
        return token_id in self._tokens

    def _get(self, token_id: int) -> Token:
        token = self._tokens.get(token_id)
        if token is None:
            raise TokenNotFoundError(f"token {token_id} not found")
        return token

    def owner_of(self, token_id: int) -> ClientId:
        return self._get(token_id).owner

    def transfer(self, caller: ClientId, from_: ClientId, to: ClientId, token_id: int) -> None:
        """Move ownership; clears all approvals granted by the previous owner."""
        token = self._get(token_id)
        if token.owner != from_:
            raise NotAuthorizedError(f"{from_.hex} does not own token {token_id}")
        if caller != token.owner and caller not in token.approved:
            raise NotAuthorizedError(f"{caller.hex} may not transfer token {token_id}")
        if to.is_zero:
            raise ZeroAddressError("cannot transfer to the zero address")
        token.owner = to
        token.approved.clear()

    def approve(self, caller: ClientId, operator: ClientId, token_id: int) -> None:
        token = self._get(token_id)
        if caller != token.owner:
            raise NotAuthorizedError(f"{caller.hex} does not own token {token_id}")
        token.approved.add(operator)

    def is_authorized(self, caller: ClientId, token_id: int) -> bool:
        """True iff caller is the owner or approved for the token."""
        token = self._get(token_id)
        return caller == token.owner or caller in token.approved

    def token_ids(self) -> list[int]:
        return list(self._order)

    def snapshot(self) -> list[dict]:
        return [
            {
                "id": token.id,
                "owner": token.owner.hex,
                "approved": sorted(client.hex for client in token.approved),
            }
            for token_id in sorted(self._tokens)
            for token in (self._tokens[token_id],)
        ]
