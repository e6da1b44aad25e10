"""Generic provenance layer.

Ties records to tokens: creation requires authorization on the target token
and valid inputs, record ids are drawn from a single monotonic counter, and
every record is appended to its token's association list. Parallel traces of
one data point are simply multiple associated records without a same-token
link between them.
"""

from __future__ import annotations

from typing import Callable, Iterable

from .errors import (
    InvalidInputError,
    NotAuthorizedError,
    RecordInvalidatedError,
    TokenNotFoundError,
)
from .records import Context, ProvenanceRecord, RecordStatus, RecordStore
from .tokens import ClientId, TokenRegistry


class ProvenanceLayer:
    """Create/update/invalidate workflows plus the token-to-records map."""

    def __init__(self, store: RecordStore, registry: TokenRegistry, store_key: object):
        self._store = store
        self._registry = registry
        self._store_key = store_key
        self._associated: dict[int, list[int]] = {}
        self._next_prov_id = 1

    @property
    def records(self) -> RecordStore:
        return self._store

    @property
    def tokens(self) -> TokenRegistry:
        return self._registry

    @property
    def next_prov_id(self) -> int:
        return self._next_prov_id

    def validate_create(
        self, caller: ClientId, token_id: int, inputs: Iterable[int]
    ) -> tuple[int, ...]:
        """Run the creation preconditions without mutating anything.

        Check order is fixed: token existence, then authorization, then input
        validity. Returns the normalized input tuple.
        """
        if not self._registry.exists(token_id):
            raise TokenNotFoundError(f"token {token_id} not found")
        if not self._registry.is_authorized(caller, token_id):
            raise NotAuthorizedError(
                f"{caller.hex} is neither owner nor approved for token {token_id}"
            )
        normalized = tuple(inputs)
        seen: set[int] = set()
        for input_id in normalized:
            if input_id in seen:
                raise InvalidInputError(f"duplicate input record {input_id}")
            seen.add(input_id)
            if not self._store.has_record(input_id):
                raise InvalidInputError(f"input record {input_id} does not exist")
            if self._store.get_record(input_id).status is not RecordStatus.VALID:
                raise InvalidInputError(f"input record {input_id} is invalidated")
        return normalized

    def create_provenance(
        self, caller: ClientId, token_id: int, inputs: Iterable[int], context: Context
    ) -> int:
        """Store a new record for the token and return its fresh id.

        Inputs may reference records of other tokens (derivation across data
        points); authorization is checked on the target token only.
        """
        normalized = self.validate_create(caller, token_id, inputs)
        prov_id = self._next_prov_id
        self._next_prov_id += 1
        self._store.create_record(self._store_key, prov_id, token_id, normalized, context)
        self._associated.setdefault(token_id, []).append(prov_id)
        return prov_id

    def get_associated_provenance(self, token_id: int) -> list[int]:
        """All record ids of a token in creation order (its parallel traces, flattened)."""
        if not self._registry.exists(token_id):
            raise TokenNotFoundError(f"token {token_id} not found")
        return list(self._associated.get(token_id, []))

    def _authorized_record(self, caller: ClientId, prov_id: int) -> ProvenanceRecord:
        record = self._store.get_record(prov_id)
        if not self._registry.is_authorized(caller, record.token_id):
            raise NotAuthorizedError(
                f"{caller.hex} is not authorized for token {record.token_id}"
            )
        return record

    def update_provenance(
        self,
        caller: ClientId,
        prov_id: int,
        new_context: Context,
        context_check: Callable[[Context], None] | None = None,
    ) -> None:
        """Replace a record's context. ``context_check`` runs after the status
        check so schema errors surface last, per the fixed error order."""
        record = self._authorized_record(caller, prov_id)
        if record.status is not RecordStatus.VALID:
            raise RecordInvalidatedError(f"record {prov_id} is invalidated")
        if context_check is not None:
            context_check(new_context)
        self._store.update_context(self._store_key, prov_id, new_context)

    def invalidate_provenance(self, caller: ClientId, prov_id: int) -> None:
        """Logical delete: the record stays readable and associated, but can
        no longer serve as an input to new records."""
        self._authorized_record(caller, prov_id)
        self._store.invalidate_record(self._store_key, prov_id)

    def snapshot_association(self) -> dict[str, list[int]]:
        return {str(token_id): list(ids) for token_id, ids in sorted(self._associated.items())}
