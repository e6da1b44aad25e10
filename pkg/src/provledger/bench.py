"""Throughput/latency benchmark over the simulated ledger.

Reproduces the evaluation methodology at desk scale: submit a fixed number
of record-creation transactions spread uniformly over a time window, let the
clock run until the mempool drains, then report transactions per second over
the window plus per-transaction confirmation latencies. Fully deterministic
for a given config.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass

from .errors import ConfigInvalidError
from .ledger import Ledger, SimConfig
from .policy import AssignmentStrategy, ContextSchema, ExposureFlags, UseCasePolicy
from .tokens import ClientId

_BENCH_POLICY = UseCasePolicy(
    schema=ContextSchema(name="benchmark", required=frozenset({"agent", "seq"})),
    exposure=ExposureFlags(allow_update=False, allow_invalidate=False),
    assignment=AssignmentStrategy("open"),
)
_BENCH_CLIENT_ALIAS = "bench-loadgen"


@dataclass(frozen=True)
class BenchmarkReport:
    """Throughput measured over the submission window; latency per confirmed tx.

    ``confirmed`` counts transactions confirmed inside the window (what tps
    is computed from); ``confirmed_total`` additionally counts the drain
    phase after the window closed.
    """

    submitted: int
    confirmed: int
    confirmed_total: int
    window_ms: int
    tps: float
    latencies_ms: tuple[int, ...]
    mean_latency_ms: float | None
    median_latency_ms: float | None
    p95_latency_ms: float | None

    def as_dict(self) -> dict:
        return {
            "submitted": self.submitted,
            "confirmed": self.confirmed,
            "confirmedTotal": self.confirmed_total,
            "windowMs": self.window_ms,
            "tps": self.tps,
            "latenciesMs": list(self.latencies_ms),
            "meanLatencyMs": self.mean_latency_ms,
            "medianLatencyMs": self.median_latency_ms,
            "p95LatencyMs": self.p95_latency_ms,
        }


def percentile_95(values: list[int]) -> float:
    """Nearest-rank 95th percentile."""
    ordered = sorted(values)
    rank = max(1, -(-95 * len(ordered) // 100))  # ceil without floats
    return float(ordered[rank - 1])


def run_benchmark(config: SimConfig, tx_count: int, window_ms: int, fee: int) -> BenchmarkReport:
    """Drive a fresh in-memory ledger under uniform load and measure it.

    A setup block mints the benchmark token before the window opens, so the
    window itself contains only record-creation traffic.
    """
    if type(tx_count) is not int or tx_count < 1:
        raise ConfigInvalidError("tx count must be an integer >= 1")
    if type(window_ms) is not int or window_ms < 1:
        raise ConfigInvalidError("window must be an integer >= 1 ms")
    if type(fee) is not int or fee < 0:
        raise ConfigInvalidError("fee must be a non-negative integer")

    ledger = Ledger(_BENCH_POLICY, config)
    client = ClientId.from_alias(_BENCH_CLIENT_ALIAS)

    ledger.submit_payload(client, {"op": "requestToken", "payment": 0}, fee=fee, submitted_at=0)
    _, outcomes = ledger.produce_block()
    token_id = outcomes[0].value["tokenId"]

    window_start = ledger.now
    window_end = window_start + window_ms
    transactions = []
    for i in range(tx_count):
        payload = {
            "op": "createProvenance",
            "tokenId": token_id,
            "inputs": [],
            "context": {"agent": "loadgen", "seq": str(i)},
        }
        transactions.append(
            ledger.build_transaction(
                client,
                payload,
                fee=fee,
                submitted_at=window_start + (i * window_ms) // tx_count,
                nonce=i + 1,
            )
        )

    # discrete-event loop: feed each scheduled submission before the first
    # block that could include it, then let the chain drain
    confirmed_at: dict[str, int] = {}
    next_index = 0
    drain_limit = -(-tx_count // config.block_capacity) + window_ms // config.block_interval_ms + 4
    produced = 0
    while (next_index < len(transactions) or ledger.pending_count() > 0) and produced < drain_limit:
        boundary = ledger.next_block_timestamp()
        while next_index < len(transactions) and transactions[next_index].submitted_at <= boundary:
            ledger.submit(transactions[next_index])
            next_index += 1
        block, block_outcomes = ledger.produce_block()
        produced += 1
        for outcome in block_outcomes:
            confirmed_at[outcome.tx.hash] = block.timestamp

    in_window = [
        (tx, confirmed_at[tx.hash])
        for tx in transactions
        if tx.hash in confirmed_at and confirmed_at[tx.hash] <= window_end
    ]
    latencies = [confirmed - tx.submitted_at for tx, confirmed in in_window]
    confirmed_total = sum(1 for tx in transactions if tx.hash in confirmed_at)
    return BenchmarkReport(
        submitted=tx_count,
        confirmed=len(in_window),
        confirmed_total=confirmed_total,
        window_ms=window_ms,
        tps=len(in_window) / (window_ms / 1000.0),
        latencies_ms=tuple(latencies),
        mean_latency_ms=statistics.mean(latencies) if latencies else None,
        median_latency_ms=statistics.median(latencies) if latencies else None,
        p95_latency_ms=percentile_95(latencies) if latencies else None,
    )
