"""Coarse-graining: macro mechanisms induced by state-lumping maps.

A macro intervention do(Z = z) is realised at the micro level as the
uniform distribution over the preimage cell of z, and the macro target is
read off by summing micro target states within each cell.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .core import effective_information, phi_eid, resolve, set_partitions
from .graph import DEFAULT_EPSILON, CausalHypergraph, build_hypergraph
from .mechanism import MechanismError, TransitionMatrix, VariableSchema, check

MAX_EXHAUSTIVE_STATES = 16
MAX_GROUPING_STATES = 4096
DEFAULT_SEARCH_BUDGET = 200_000


class SearchBudgetExceeded(MechanismError):
    pass


@dataclass(frozen=True, eq=False)
class CoarseGrainingMap:
    micro: VariableSchema
    macro: VariableSchema
    table: np.ndarray
    # micro variable indices feeding each macro variable, when the map is a grouping
    blocks: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.int64).copy()
        if table.shape != (self.micro.n_states,):
            raise MechanismError(
                f"map table needs {self.micro.n_states} entries, got {table.shape}")
        if table.min(initial=0) < 0 or table.max(initial=0) >= self.macro.n_states:
            raise MechanismError("map table entry out of macro state range")
        missing = np.setdiff1d(np.arange(self.macro.n_states), table)
        if missing.size:
            raise MechanismError(
                f"map is not surjective: macro state(s) {missing.tolist()} have empty preimage")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    def __eq__(self, other):
        if not isinstance(other, CoarseGrainingMap):
            return NotImplemented
        return (self.micro == other.micro and self.macro == other.macro
                and np.array_equal(self.table, other.table))

    def __hash__(self):
        return hash((self.micro, self.macro, self.table.tobytes()))

    @classmethod
    def identity(cls, schema: VariableSchema) -> "CoarseGrainingMap":
        return cls(schema, schema, np.arange(schema.n_states),
                   tuple((i,) for i in range(len(schema))))

    @classmethod
    def all_to_one(cls, schema: VariableSchema) -> "CoarseGrainingMap":
        return cls(schema, VariableSchema(("Z",), (1,)), np.zeros(schema.n_states, dtype=int))

    @classmethod
    def lumping(cls, schema: VariableSchema, table: Sequence[int], name: str = "Z"):
        table = np.asarray(table)
        return cls(schema, VariableSchema((name,), (int(table.max()) + 1,)), table)

    def indicator(self) -> np.ndarray:
        m = np.zeros((self.micro.n_states, self.macro.n_states))
        m[np.arange(self.micro.n_states), self.table] = 1.0
        return m

    def cell_sizes(self) -> np.ndarray:
        return np.bincount(self.table, minlength=self.macro.n_states)

    def to_dict(self) -> dict:
        doc = {
            "micro_variables": list(self.micro.names),
            "micro_cardinalities": list(self.micro.cardinalities),
            "macro_variables": list(self.macro.names),
            "macro_cardinalities": list(self.macro.cardinalities),
            "table": self.table.tolist(),
        }
        if self.blocks is not None:
            doc["blocks"] = [list(b) for b in self.blocks]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "CoarseGrainingMap":
        micro = VariableSchema(tuple(doc["micro_variables"]),
                               tuple(doc.get("micro_cardinalities") or ()))
        table = doc["table"]
        macro_cards = doc.get("macro_cardinalities")
        if not macro_cards:
            if len(doc["macro_variables"]) != 1:
                raise MechanismError("macro_cardinalities required for multi-variable macro schemas")
            macro_cards = [max(table) + 1]
        macro = VariableSchema(tuple(doc["macro_variables"]), tuple(macro_cards))
        blocks = doc.get("blocks")
        return cls(micro, macro, table, tuple(tuple(b) for b in blocks) if blocks else None)


# encoders: block joint state values (n_block_states,) -> macro value
BLOCK_ENCODERS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "or": lambda st: (st.sum(axis=1) > 0).astype(int),
    "parity": lambda st: st.sum(axis=1) % 2,
    "identity": None,  # handled specially: keeps the block's joint state
}


def grouping_map(schema: VariableSchema, blocks: Sequence[Sequence[int | str]],
                 encoders: Sequence[str | Sequence[int]], names: Sequence[str] | None = None
                 ) -> CoarseGrainingMap:
    """Coarse-grain each block of variables into one macro variable.

    An encoder is ``"or"`` (all-zero vs. not), ``"parity"``, ``"identity"``, or
    an explicit lookup table giving the macro value for each block joint
    state in mixed-radix order.
    """
    blocks = [resolve(schema, b) for b in blocks]
    flat = [i for b in blocks for i in b]
    if sorted(flat) != list(range(len(schema))):
        raise MechanismError("grouping blocks must partition the micro variables")
    if len(encoders) != len(blocks):
        raise MechanismError("one encoder per block is required")
    states = schema.states()
    macro_vals, cards = [], []
    for blk, enc in zip(blocks, encoders):
        sub = states[:, blk]
        block_schema = schema.subset(blk)
        block_index = np.ravel_multi_index(sub.T, block_schema.cardinalities)
        if isinstance(enc, str):
            if enc not in BLOCK_ENCODERS:
                raise MechanismError(f"unknown block encoder {enc!r}")
            if enc == "identity":
                lut = np.arange(block_schema.n_states)
            else:
                lut = BLOCK_ENCODERS[enc](block_schema.states())
        else:
            lut = np.asarray(enc, dtype=int)
            if lut.shape != (block_schema.n_states,):
                raise MechanismError(f"encoder table for block {blk} needs {block_schema.n_states} entries")
        k = int(lut.max()) + 1
        if len(np.unique(lut)) != k or lut.min() != 0:
            raise MechanismError(f"encoder for block {blk} is not surjective onto 0..{k - 1}")
        macro_vals.append(lut[block_index])
        cards.append(k)
    if names is None:
        names = ["+".join(schema.names[i] for i in b) for b in blocks]
    macro = VariableSchema(tuple(names), tuple(cards))
    table = np.ravel_multi_index(tuple(macro_vals), macro.cardinalities)
    return CoarseGrainingMap(schema, macro, table, tuple(blocks))


def _check_compat(schema: VariableSchema, cg: CoarseGrainingMap, side: str) -> None:
    if cg.micro.cardinalities != schema.cardinalities:
        raise MechanismError(f"{side} map does not match the TPM's {side} schema")


def macro_tpm(tpm: TransitionMatrix, map_source: CoarseGrainingMap,
              map_target: CoarseGrainingMap | None = None) -> TransitionMatrix:
    """P(z' | do(z)) = mean over x in cell(z) of sum_{x' in cell(z')} P(x' | x)."""
    check(tpm)
    map_target = map_target or map_source
    _check_compat(tpm.source, map_source, "source")
    _check_compat(tpm.target, map_target, "target")
    lumped = map_source.indicator().T @ tpm.probs @ map_target.indicator()
    lumped /= map_source.cell_sizes()[:, None]
    return TransitionMatrix(map_source.macro, map_target.macro, lumped)


def one_sided_macro_mechanism(tpm: TransitionMatrix, map_source: CoarseGrainingMap) -> TransitionMatrix:
    """P(x' | do(z)) with the target left at the micro level."""
    check(tpm)
    _check_compat(tpm.source, map_source, "source")
    probs = map_source.indicator().T @ tpm.probs / map_source.cell_sizes()[:, None]
    return TransitionMatrix(map_source.macro, tpm.target, probs)


def macro_ei(tpm: TransitionMatrix, map_source: CoarseGrainingMap,
             map_target: CoarseGrainingMap | None = None) -> float:
    return effective_information(macro_tpm(tpm, map_source, map_target))


@dataclass
class MultiscaleReport:
    micro_graph: CausalHypergraph
    macro_graph: CausalHypergraph
    micro_ei: float
    micro_phi: float
    macro_ei: float
    macro_phi: float
    map_source: CoarseGrainingMap
    map_target: CoarseGrainingMap

    @property
    def macro_synergy_total(self) -> float:
        return self.macro_phi

    def strongest_macro_hyperedge(self) -> float:
        return max((h.weight for h in self.macro_graph.hyperedges), default=0.0)

    def to_dict(self) -> dict:
        return {
            "micro": {"ei": self.micro_ei, "phi": self.micro_phi, "graph": self.micro_graph.to_dict()},
            "macro": {"ei": self.macro_ei, "phi": self.macro_phi, "graph": self.macro_graph.to_dict()},
            "membership": {"t": self.map_source.to_dict(), "t+1": self.map_target.to_dict()},
        }

    def to_json(self, manifest: dict | None = None) -> str:
        doc = self.to_dict()
        if manifest is not None:
            doc["manifest"] = manifest
        return json.dumps(doc, indent=2)


def multiscale_report(tpm: TransitionMatrix, map_source: CoarseGrainingMap,
                      map_target: CoarseGrainingMap | None = None,
                      epsilon: float = DEFAULT_EPSILON, max_source_order: int = 3
                      ) -> MultiscaleReport:
    map_target = map_target or map_source
    macro = macro_tpm(tpm, map_source, map_target)
    micro_graph = build_hypergraph(tpm, epsilon, max_source_order)
    if macro.is_square_system:
        macro_graph = build_hypergraph(macro, epsilon, max_source_order)
        mphi = phi_eid(macro) if len(macro.source) > 1 else 0.0
    else:
        raise MechanismError("paired report needs the same macro schema on both time sides")
    return MultiscaleReport(micro_graph, macro_graph, effective_information(tpm), phi_eid(tpm),
                            effective_information(macro), mphi, map_source, map_target)


# -------------------------------------------------------------------- search

@dataclass(frozen=True)
class SearchSpec:
    """Bounds the coarse-graining search.

    ``exhaustive`` enumerates every lumping of the joint state space into one
    macro variable (needs at most 16 micro states, and the Bell number of
    the state count must fit the budget). ``grouping`` enumerates partitions of
    the variables into blocks, each block coarse-grained by one of
    ``encoders``.
    """

    mode: str = "grouping"
    encoders: tuple[str, ...] = ("or", "parity", "identity")
    budget: int = DEFAULT_SEARCH_BUDGET
    top: int = 10

    def to_dict(self) -> dict:
        return {"mode": self.mode, "encoders": list(self.encoders),
                "budget": self.budget, "top": self.top}


@dataclass(frozen=True)
class RankedMap:
    map: CoarseGrainingMap
    ei: float

    def sort_key(self):
        return (-round(self.ei, 12), self.map.macro.n_states, tuple(self.map.table.tolist()))


def _restricted_growth(n: int):
    """Set partitions of range(n) as canonical label tables."""
    def rec(prefix, k):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for v in range(k + 1):
            yield from rec(prefix + [v], max(k, v + 1))
    yield from rec([0], 1) if n else iter([()])


def _bell(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def _candidate_maps(schema: VariableSchema, spec: SearchSpec):
    if spec.mode == "exhaustive":
        if schema.n_states > MAX_EXHAUSTIVE_STATES:
            raise SearchBudgetExceeded(
                f"exhaustive search needs <= {MAX_EXHAUSTIVE_STATES} micro states, got {schema.n_states}")
        if _bell(schema.n_states) > spec.budget:
            raise SearchBudgetExceeded(
                f"{_bell(schema.n_states)} lumpings exceed the budget of {spec.budget}")
        for table in _restricted_growth(schema.n_states):
            yield CoarseGrainingMap.lumping(schema, table)
    elif spec.mode == "grouping":
        if schema.n_states > MAX_GROUPING_STATES:
            raise SearchBudgetExceeded(
                f"grouping search needs <= {MAX_GROUPING_STATES} micro states, got {schema.n_states}")
        count = 0
        for blocks in set_partitions(range(len(schema))):
            blocks = sorted(blocks)
            for encs in product(spec.encoders, repeat=len(blocks)):
                # a singleton block under or/parity is the identity; keep one spelling
                if any(len(b) == 1 and e != "identity" for b, e in zip(blocks, encs)):
                    continue
                count += 1
                if count > spec.budget:
                    raise SearchBudgetExceeded(f"more than {spec.budget} candidate maps")
                yield grouping_map(schema, blocks, encs)
    else:
        raise ValueError(f"unknown search mode {spec.mode!r}")


def search_coarse_graining(tpm: TransitionMatrix, spec: SearchSpec = SearchSpec()) -> list[RankedMap]:
    """Rank candidate maps (same map at t and t+1) by macro EI, best first.

    Ties go to fewer macro states, then to the lexicographically smaller table.
    """
    check(tpm)
    if not tpm.is_square_system:
        raise MechanismError("coarse-graining search needs a full-system TPM")
    ranked = [RankedMap(cg, macro_ei(tpm, cg)) for cg in _candidate_maps(tpm.source, spec)]
    ranked.sort(key=RankedMap.sort_key)
    return ranked[: spec.top] if spec.top else ranked
