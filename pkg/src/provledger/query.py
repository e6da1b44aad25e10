"""Read-only lineage and derivation queries over the record DAG.

All functions are pure over the provenance layer's current state and produce
deterministically ordered results, so identical stores always serialize to
identical bytes.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .canonical import canonical_json
from .errors import AmbiguousLineageError
from .provenance import ProvenanceLayer
from .records import ProvenanceRecord


@dataclass(frozen=True)
class ProvenanceGraph:
    """Derivation DAG slice: edge (a, b) means record b is an input of record a."""

    nodes: tuple[ProvenanceRecord, ...]
    edges: tuple[tuple[int, int], ...]

    def as_dict(self) -> dict:
        return {
            "nodes": [record.as_dict() for record in self.nodes],
            "edges": [list(edge) for edge in self.edges],
        }

    def to_json(self) -> str:
        return canonical_json(self.as_dict())

    def to_dot(self) -> str:
        lines = ["digraph provenance {"]
        for record in self.nodes:
            shape = "box" if record.status.value == "valid" else "box, style=dashed"
            label = f"p{record.id} (token {record.token_id})"
            lines.append(f'  p{record.id} [label="{label}", shape={shape}];')
        for src, dst in self.edges:
            lines.append(f"  p{src} -> p{dst};")
        lines.append("}")
        return "\n".join(lines)


@dataclass(frozen=True)
class Trace:
    """One parallel provenance chain of a token; ``head`` is the latest record."""

    head: int
    records: tuple[int, ...]

    def as_dict(self) -> dict:
        return {"head": self.head, "records": list(self.records)}


def _same_token_inputs(layer: ProvenanceLayer, record: ProvenanceRecord) -> list[int]:
    store = layer.records
    return [
        input_id
        for input_id in record.input_ids
        if store.get_record(input_id).token_id == record.token_id
    ]


def lineage(layer: ProvenanceLayer, prov_id: int) -> list[int]:
    """Linear same-token history of a record, oldest first.

    Walks backwards along the unique same-token input at each step. A record
    with more than one same-token input has no linear history and is reported
    as ambiguous rather than silently resolved.
    """
    store = layer.records
    chain = [prov_id]
    record = store.get_record(prov_id)
    while True:
        predecessors = _same_token_inputs(layer, record)
        if len(predecessors) > 1:
            raise AmbiguousLineageError(
                f"record {record.id} has {len(predecessors)} same-token inputs"
            )
        if not predecessors:
            break
        record = store.get_record(predecessors[0])
        chain.append(record.id)
    chain.reverse()
    return chain


def derivation_graph(layer: ProvenanceLayer, prov_id: int, max_depth: int) -> ProvenanceGraph:
    """Breadth-first expansion through input edges up to ``max_depth`` hops.

    Depth 0 is the record alone. Edges are included only when both endpoints
    fall within the depth bound.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be non-negative")
    store = layer.records
    store.get_record(prov_id)
    visited = {prov_id}
    edges: set[tuple[int, int]] = set()
    frontier = deque([(prov_id, 0)])
    while frontier:
        current, depth = frontier.popleft()
        if depth == max_depth:
            continue
        for input_id in store.get_record(current).input_ids:
            edges.add((current, input_id))
            if input_id not in visited:
                visited.add(input_id)
                frontier.append((input_id, depth + 1))
    nodes = tuple(store.get_record(rid) for rid in sorted(visited))
    return ProvenanceGraph(nodes=nodes, edges=tuple(sorted(edges)))


def traces(layer: ProvenanceLayer, token_id: int) -> list[Trace]:
    """Partition a token's records into maximal same-token chains.

    Records are processed in creation order; a record extends the chain whose
    tail is its unique same-token input, otherwise it starts a new chain. This
    puts every associated record in exactly one trace, with forks and
    ambiguous merges opening fresh chains.
    """
    associated = layer.get_associated_provenance(token_id)
    chains: list[list[int]] = []
    tail_chain: dict[int, int] = {}
    for prov_id in associated:
        record = layer.records.get_record(prov_id)
        predecessors = _same_token_inputs(layer, record)
        if len(predecessors) == 1 and predecessors[0] in tail_chain:
            chain_index = tail_chain.pop(predecessors[0])
            chains[chain_index].append(prov_id)
        else:
            chain_index = len(chains)
            chains.append([prov_id])
        tail_chain[prov_id] = chain_index
    return [Trace(head=chain[-1], records=tuple(chain)) for chain in chains]
