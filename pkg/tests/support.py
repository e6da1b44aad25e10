"""Shared builders for the test suite."""

from __future__ import annotations

from pathlib import Path

from provledger import (
    AssignmentStrategy,
    ClientId,
    ContextSchema,
    ExposureFlags,
    Ledger,
    PolicyLayer,
    SimConfig,
    UseCasePolicy,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

ALICE = ClientId.from_alias("alice")
BOB = ClientId.from_alias("bob")
CAROL = ClientId.from_alias("carol")
MALLORY = ClientId.from_alias("mallory")


def open_policy(
    required=("agent",),
    optional=("time", "value", "temperature", "location", "unit"),
    allow_update=True,
    allow_invalidate=True,
) -> UseCasePolicy:
    return UseCasePolicy(
        schema=ContextSchema(
            name="test", required=frozenset(required), optional=frozenset(optional)
        ),
        exposure=ExposureFlags(allow_update=allow_update, allow_invalidate=allow_invalidate),
        assignment=AssignmentStrategy("open"),
    )


def fee_policy(price=5, initial_balance=20) -> UseCasePolicy:
    base = open_policy()
    return UseCasePolicy(
        schema=base.schema,
        exposure=base.exposure,
        assignment=AssignmentStrategy("fee", price=price, initial_balance=initial_balance),
    )


def whitelist_policy(admin: ClientId, members=()) -> UseCasePolicy:
    base = open_policy()
    return UseCasePolicy(
        schema=base.schema,
        exposure=base.exposure,
        assignment=AssignmentStrategy("whitelist", admin=admin, members=frozenset(members)),
    )


def layer(policy: UseCasePolicy | None = None) -> PolicyLayer:
    return PolicyLayer.build(policy or open_policy())


def quick_config(interval=1000, capacity=10, seed=0, jitter=False) -> SimConfig:
    return SimConfig(
        block_interval_ms=interval, block_capacity=capacity, rng_seed=seed, jitter=jitter
    )


def quick_ledger(policy=None, **config_kwargs) -> Ledger:
    return Ledger(policy or open_policy(), quick_config(**config_kwargs))
