"""EI causal graphs: pairwise EI edges plus synergistic hyperedges."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations

from .core import ei, resolve, synergy
from .mechanism import MechanismError, TransitionMatrix, VariableSchema, check

DEFAULT_EPSILON = 1e-9
DEFAULT_MAX_ORDER = 3
DEFAULT_BUDGET = 200_000
GRAPH_SCHEMA_VERSION = 1


class BudgetExceeded(MechanismError):
    pass


@dataclass(frozen=True)
class EiEdge:
    source: int
    target: int
    weight: float


@dataclass(frozen=True)
class SynHyperedge:
    sources: tuple[int, ...]
    targets: tuple[int, ...]
    weight: float

    @property
    def key(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.sources, self.targets


@dataclass
class CausalHypergraph:
    variables: tuple[str, ...]
    epsilon: float
    edges: list[EiEdge] = field(default_factory=list)
    hyperedges: list[SynHyperedge] = field(default_factory=list)

    def __post_init__(self):
        pairs = [(e.source, e.target) for e in self.edges]
        if len(pairs) != len(set(pairs)):
            raise MechanismError("duplicate pairwise edge")
        keys = [h.key for h in self.hyperedges]
        if len(keys) != len(set(keys)):
            raise MechanismError("duplicate hyperedge")

    def edge_map(self) -> dict[tuple[int, int], float]:
        return {(e.source, e.target): e.weight for e in self.edges}

    def hyperedge_map(self) -> dict[tuple[tuple[int, ...], tuple[int, ...]], float]:
        return {h.key: h.weight for h in self.hyperedges}

    def to_dict(self) -> dict:
        return {
            "version": GRAPH_SCHEMA_VERSION,
            "variables": list(self.variables),
            "epsilon": self.epsilon,
            "edges": [{"src": e.source, "dst": e.target, "bits": e.weight} for e in self.edges],
            "hyperedges": [{"srcs": list(h.sources), "dsts": list(h.targets), "bits": h.weight}
                           for h in self.hyperedges],
        }


def build_pairwise_graph(tpm: TransitionMatrix, epsilon: float = DEFAULT_EPSILON) -> CausalHypergraph:
    """Edge i -> j iff EI(X_i -> X'_j) > epsilon, over all n^2 pairs."""
    _require_system(tpm)
    n = len(tpm.source)
    edges = []
    for i in range(n):
        for j in range(n):
            w = ei(tpm, [i], [j])
            if w > epsilon:
                edges.append(EiEdge(i, j, w))
    return CausalHypergraph(tpm.source.names, epsilon, edges, [])


def _target_sets(n: int, mode: str):
    if mode == "singletons":
        return [(j,) for j in range(n)]
    if mode == "all-subsets":
        return [b for r in range(1, n + 1) for b in combinations(range(n), r)]
    raise ValueError(f"unknown target_mode {mode!r}")


def build_hypergraph(tpm: TransitionMatrix, epsilon: float = DEFAULT_EPSILON,
                     max_source_order: int = DEFAULT_MAX_ORDER,
                     target_mode: str = "singletons", budget: int = DEFAULT_BUDGET
                     ) -> CausalHypergraph:
    """Pairwise edges plus every hyperedge A -> B with 2 <= |A| <= max_source_order.

    A hyperedge exists iff the singleton-partition synergy of A on B exceeds
    ``epsilon``. Note that a superset of a synergistic pair that only adds
    inert sources repeats the pair's weight; use ``max_source_order=2`` for
    pair-only hypergraphs.
    """
    if max_source_order < 2:
        raise ValueError("max_source_order must be at least 2")
    graph = build_pairwise_graph(tpm, epsilon)
    n = len(tpm.source)
    targets = _target_sets(n, target_mode)
    sources = [a for r in range(2, min(max_source_order, n) + 1) for a in combinations(range(n), r)]
    if len(sources) * len(targets) > budget:
        raise BudgetExceeded(
            f"{len(sources) * len(targets)} (A, B) pairs exceed the budget of {budget}")
    hyperedges = []
    for b in targets:
        for a in sources:
            w = synergy(tpm, a, None, b)
            if w > epsilon:
                hyperedges.append(SynHyperedge(a, b, w))
    hyperedges.sort(key=lambda h: (h.sources, h.targets))
    graph.hyperedges = hyperedges
    return graph


def _require_system(tpm: TransitionMatrix) -> None:
    check(tpm)
    if not tpm.is_square_system:
        raise MechanismError("causal graphs need a full-system TPM (source schema == target schema)")


def export_json(graph: CausalHypergraph, manifest: dict | None = None) -> str:
    doc = graph.to_dict()
    if manifest is not None:
        doc["manifest"] = manifest
    return json.dumps(doc, indent=2)


def import_json(text: str) -> CausalHypergraph:
    doc = json.loads(text)
    if doc.get("version") != GRAPH_SCHEMA_VERSION:
        raise MechanismError(f"unsupported graph schema version {doc.get('version')!r}")
    return CausalHypergraph(
        tuple(doc["variables"]),
        float(doc["epsilon"]),
        [EiEdge(int(e["src"]), int(e["dst"]), float(e["bits"])) for e in doc["edges"]],
        [SynHyperedge(tuple(h["srcs"]), tuple(h["dsts"]), float(h["bits"]))
         for h in doc["hyperedges"]],
    )


def export_dot(graph: CausalHypergraph, max_penwidth: float = 6.0) -> str:
    """Graphviz digraph: sources at t on the left, targets at t+1 on the right.

    Pairwise edges are solid with pen width proportional to weight; each
    hyperedge is a small circle joined to its sources and targets by dashed lines.
    """
    names = graph.variables
    top = max([e.weight for e in graph.edges] + [h.weight for h in graph.hyperedges] + [1e-300])
    out = ["digraph peid {", "  rankdir=LR;", '  node [shape=ellipse, fontname="Helvetica"];']
    used_src = {e.source for e in graph.edges} | {i for h in graph.hyperedges for i in h.sources}
    used_dst = {e.target for e in graph.edges} | {j for h in graph.hyperedges for j in h.targets}
    if used_src or used_dst:
        out.append("  subgraph cluster_t { label=\"t\";")
        out += [f'    "s{i}" [label="{names[i]}"];' for i in sorted(used_src)]
        out.append("  }")
        out.append("  subgraph cluster_t1 { label=\"t+1\";")
        out += [f'    "d{j}" [label="{names[j]}\'"];' for j in sorted(used_dst)]
        out.append("  }")
    for e in graph.edges:
        pw = max(0.5, max_penwidth * e.weight / top)
        out.append(f'  "s{e.source}" -> "d{e.target}" [penwidth={pw:.3f}, label="{e.weight:.3f}"];')
    for k, h in enumerate(graph.hyperedges):
        size = 0.15 + 0.6 * h.weight / top
        node = f"syn{k}"
        out.append(f'  "{node}" [shape=circle, style=dashed, width={size:.3f}, fixedsize=true, '
                   f'label="{h.weight:.3f}"];')
        out += [f'  "s{i}" -> "{node}" [style=dashed, arrowhead=none];' for i in h.sources]
        out += [f'  "{node}" -> "d{j}" [style=dashed];' for j in h.targets]
    out.append("}")
    return "\n".join(out) + "\n"


def label_subset(schema: VariableSchema, subset) -> str:
    return "{" + ",".join(schema.names[i] for i in resolve(schema, subset)) + "}"
