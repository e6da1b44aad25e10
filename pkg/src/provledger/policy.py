"""Use-case policy layer: the customization surface on top of the generic layer.

A policy fixes three things at genesis: the context schema new records must
satisfy, which generic verbs (update / invalidate) are exposed at all, and
how tokens get assigned to clients (open, fee-based purchase, or an
admin-managed whitelist). Exactly one policy is active per ledger instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .canonical import digest_of
from .errors import (
    ConfigInvalidError,
    InsufficientFeeError,
    NotAuthorizedError,
    NotWhitelistedError,
    PolicyForbiddenError,
    SchemaViolationError,
)
from .provenance import ProvenanceLayer
from .records import Context, RecordStore
from .tokens import ClientId, TokenRegistry

OPEN = "open"
FEE = "fee"
WHITELIST = "whitelist"


@dataclass(frozen=True)
class ContextSchema:
    """Closed-world key schema: required keys must be present, anything else
    must come from the optional set."""

    name: str
    required: frozenset[str]
    optional: frozenset[str] = frozenset()

    def __post_init__(self):
        overlap = self.required & self.optional
        if overlap:
            raise ConfigInvalidError(f"schema keys both required and optional: {sorted(overlap)}")

    def validate(self, context: Context) -> None:
        keys = set(context.keys())
        missing = self.required - keys
        if missing:
            raise SchemaViolationError(
                f"context missing required keys {sorted(missing)} for schema {self.name!r}"
            )
        extra = keys - self.required - self.optional
        if extra:
            raise SchemaViolationError(
                f"context has keys {sorted(extra)} outside schema {self.name!r}"
            )


@dataclass(frozen=True)
class ExposureFlags:
    allow_update: bool = True
    allow_invalidate: bool = True


@dataclass(frozen=True)
class AssignmentStrategy:
    """How request_token assigns ownership.

    ``open`` mints to anyone, ``fee`` charges ``price`` from an internal
    balance ledger, ``whitelist`` restricts minting to members managed by a
    fixed admin. ``initial_balance`` is credited to each client the first
    time the fee ledger sees them.
    """

    kind: str
    price: int = 0
    admin: ClientId | None = None
    members: frozenset[ClientId] = frozenset()
    initial_balance: int = 0

    def __post_init__(self):
        if self.kind not in (OPEN, FEE, WHITELIST):
            raise ConfigInvalidError(f"unknown assignment kind {self.kind!r}")
        if self.kind == FEE and self.price < 1:
            raise ConfigInvalidError("fee assignment requires price >= 1")
        if self.kind == WHITELIST and self.admin is None:
            raise ConfigInvalidError("whitelist assignment requires an admin")
        if self.initial_balance < 0:
            raise ConfigInvalidError("initial balance must be non-negative")


@dataclass(frozen=True)
class UseCasePolicy:
    schema: ContextSchema
    exposure: ExposureFlags = ExposureFlags()
    assignment: AssignmentStrategy = field(default_factory=lambda: AssignmentStrategy(OPEN))

    def as_dict(self) -> dict:
        data: dict = {
            "schema": {
                "name": self.schema.name,
                "required": sorted(self.schema.required),
                "optional": sorted(self.schema.optional),
            },
            "exposure": {
                "allowUpdate": self.exposure.allow_update,
                "allowInvalidate": self.exposure.allow_invalidate,
            },
            "assignment": {"type": self.assignment.kind},
        }
        assignment = data["assignment"]
        if self.assignment.kind == FEE:
            assignment["price"] = self.assignment.price
        if self.assignment.kind == WHITELIST:
            assignment["admin"] = self.assignment.admin.hex
            assignment["members"] = sorted(member.hex for member in self.assignment.members)
        if self.assignment.initial_balance:
            assignment["initialBalance"] = self.assignment.initial_balance
        return data

    def digest(self) -> str:
        return digest_of(self.as_dict())


def _resolve_client(value: object, label: str) -> ClientId:
    """Policy files may name clients by 0x-hex address or by alias."""
    if type(value) is not str or not value:
        raise ConfigInvalidError(f"{label} must be a non-empty string")
    try:
        if value.startswith("0x"):
            return ClientId.from_hex(value)
        return ClientId.from_alias(value)
    except ValueError as exc:
        raise ConfigInvalidError(f"bad {label}: {exc}") from exc


def policy_from_dict(data: object) -> UseCasePolicy:
    """Parse the policy definition format loaded at ledger genesis."""
    if not isinstance(data, dict):
        raise ConfigInvalidError("policy definition must be a JSON object")
    unknown = set(data) - {"schema", "exposure", "assignment"}
    if unknown:
        raise ConfigInvalidError(f"unknown policy fields: {sorted(unknown)}")

    schema_data = data.get("schema")
    if not isinstance(schema_data, dict) or "name" not in schema_data:
        raise ConfigInvalidError("policy requires schema {name, required[], optional[]}")
    unknown = set(schema_data) - {"name", "required", "optional"}
    if unknown:
        raise ConfigInvalidError(f"unknown schema fields: {sorted(unknown)}")
    for key_list in ("required", "optional"):
        value = schema_data.get(key_list, [])
        if not isinstance(value, list) or any(type(k) is not str or not k for k in value):
            raise ConfigInvalidError(f"schema.{key_list} must be a list of non-empty strings")
    schema = ContextSchema(
        name=str(schema_data["name"]),
        required=frozenset(schema_data.get("required", [])),
        optional=frozenset(schema_data.get("optional", [])),
    )

    exposure_data = data.get("exposure", {})
    if not isinstance(exposure_data, dict):
        raise ConfigInvalidError("policy exposure must be an object")
    unknown = set(exposure_data) - {"allowUpdate", "allowInvalidate"}
    if unknown:
        raise ConfigInvalidError(f"unknown exposure fields: {sorted(unknown)}")
    exposure = ExposureFlags(
        allow_update=bool(exposure_data.get("allowUpdate", True)),
        allow_invalidate=bool(exposure_data.get("allowInvalidate", True)),
    )

    assignment_data = data.get("assignment", {"type": OPEN})
    if not isinstance(assignment_data, dict) or "type" not in assignment_data:
        raise ConfigInvalidError("policy assignment requires a type")
    kind = assignment_data["type"]
    allowed = {"type", "initialBalance"}
    if kind == FEE:
        allowed |= {"price"}
    elif kind == WHITELIST:
        allowed |= {"admin", "members"}
    unknown = set(assignment_data) - allowed
    if unknown:
        raise ConfigInvalidError(f"unknown assignment fields: {sorted(unknown)}")
    initial_balance = assignment_data.get("initialBalance", 0)
    if type(initial_balance) is not int or initial_balance < 0:
        raise ConfigInvalidError("assignment.initialBalance must be a non-negative integer")
    if kind == OPEN:
        assignment = AssignmentStrategy(OPEN, initial_balance=initial_balance)
    elif kind == FEE:
        price = assignment_data.get("price")
        if type(price) is not int or price < 1:
            raise ConfigInvalidError("fee assignment requires integer price >= 1")
        assignment = AssignmentStrategy(FEE, price=price, initial_balance=initial_balance)
    elif kind == WHITELIST:
        admin = _resolve_client(assignment_data.get("admin"), "assignment.admin")
        members_data = assignment_data.get("members", [])
        if not isinstance(members_data, list):
            raise ConfigInvalidError("assignment.members must be a list")
        members = frozenset(
            _resolve_client(member, "assignment.member") for member in members_data
        )
        assignment = AssignmentStrategy(
            WHITELIST, admin=admin, members=members, initial_balance=initial_balance
        )
    else:
        raise ConfigInvalidError(f"unknown assignment type {kind!r}")
    return UseCasePolicy(schema=schema, exposure=exposure, assignment=assignment)


class PolicyLayer:
    """Runtime enforcement of one use-case policy over the generic layer.

    Also owns the token counter and, under fee assignment, the internal
    balance ledger (balances, treasury, and the cumulative seeded total for
    conservation checks).
    """

    def __init__(
        self,
        policy: UseCasePolicy,
        provenance: ProvenanceLayer,
        registry: TokenRegistry,
        mint_key: object,
    ):
        self.policy = policy
        self._provenance = provenance
        self._registry = registry
        self._mint_key = mint_key
        self._next_token_id = 1
        self._balances: dict[ClientId, int] = {}
        self._treasury = 0
        self._seeded_total = 0
        self._whitelist: set[ClientId] = set(policy.assignment.members)

    @classmethod
    def build(cls, policy: UseCasePolicy) -> "PolicyLayer":
        """Wire a fresh store/registry/provenance stack under this policy."""
        store_key = object()
        mint_key = object()
        store = RecordStore(store_key)
        registry = TokenRegistry(mint_key)
        provenance = ProvenanceLayer(store, registry, store_key)
        return cls(policy, provenance, registry, mint_key)

    @property
    def provenance(self) -> ProvenanceLayer:
        return self._provenance

    @property
    def tokens(self) -> TokenRegistry:
        return self._registry

    @property
    def next_token_id(self) -> int:
        return self._next_token_id

    @property
    def treasury(self) -> int:
        return self._treasury

    @property
    def seeded_total(self) -> int:
        return self._seeded_total

    def balance_of(self, client: ClientId) -> int:
        if client in self._balances:
            return self._balances[client]
        return self.policy.assignment.initial_balance

    def whitelist_members(self) -> set[ClientId]:
        return set(self._whitelist)

    def _touch_balance(self, client: ClientId) -> None:
        if client not in self._balances:
            seed = self.policy.assignment.initial_balance
            self._balances[client] = seed
            self._seeded_total += seed

    def request_token(self, caller: ClientId, payment: int = 0) -> int:
        """Assign a fresh token to the caller, subject to the strategy."""
        assignment = self.policy.assignment
        if assignment.kind == FEE:
            if payment < assignment.price:
                raise InsufficientFeeError(
                    f"payment {payment} below token price {assignment.price}"
                )
            self._touch_balance(caller)
            if self._balances[caller] < assignment.price:
                raise InsufficientFeeError(
                    f"balance {self._balances[caller]} below token price {assignment.price}"
                )
        elif assignment.kind == WHITELIST:
            if caller not in self._whitelist:
                raise NotWhitelistedError(f"{caller.hex} is not on the whitelist")

        token_id = self._next_token_id
        self._registry.mint(self._mint_key, caller, token_id)
        self._next_token_id += 1
        if assignment.kind == FEE:
            self._balances[caller] -= assignment.price
            self._treasury += assignment.price
        return token_id

    def _require_admin(self, caller: ClientId) -> None:
        admin = self.policy.assignment.admin
        if admin is None or caller != admin:
            raise NotAuthorizedError(f"{caller.hex} is not the whitelist admin")

    def whitelist_add(self, caller: ClientId, member: ClientId) -> None:
        self._require_admin(caller)
        self._whitelist.add(member)

    def whitelist_remove(self, caller: ClientId, member: ClientId) -> None:
        """Removal only blocks future token requests; minted tokens are untouched."""
        self._require_admin(caller)
        self._whitelist.discard(member)

    def create_provenance_checked(
        self, caller: ClientId, token_id: int, inputs: list[int], context: Context
    ) -> int:
        """Generic-layer creation with schema validation.

        Error order is fixed: token existence, authorization, input validity,
        then schema.
        """
        self._provenance.validate_create(caller, token_id, inputs)
        self.policy.schema.validate(context)
        return self._provenance.create_provenance(caller, token_id, inputs, context)

    def gate_update(self, caller: ClientId, prov_id: int, new_context: Context) -> None:
        if not self.policy.exposure.allow_update:
            raise PolicyForbiddenError("policy does not expose update")
        self._provenance.update_provenance(
            caller, prov_id, new_context, context_check=self.policy.schema.validate
        )

    def gate_invalidate(self, caller: ClientId, prov_id: int) -> None:
        if not self.policy.exposure.allow_invalidate:
            raise PolicyForbiddenError("policy does not expose invalidate")
        self._provenance.invalidate_provenance(caller, prov_id)

    def snapshot(self) -> dict:
        return {
            "policyDigest": self.policy.digest(),
            "nextTokenId": self._next_token_id,
            "balances": {
                client.hex: amount for client, amount in sorted(self._balances.items())
            },
            "treasury": self._treasury,
            "seededTotal": self._seeded_total,
            "whitelist": sorted(client.hex for client in self._whitelist),
        }
