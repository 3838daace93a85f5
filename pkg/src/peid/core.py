"""Effective information and its partition-based unique/synergy decomposition.

Every quantity here is computed under a maximum-entropy intervention on the
source side: all source variables are set independently and uniformly. An
A -> B quantity therefore averages the source complement of A uniformly.
All values are in bits.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from .mechanism import MechanismError, TransitionMatrix, VariableSchema, check

Subset = Sequence[Union[int, str]]


class PartitionError(MechanismError):
    """A source partition that is not a disjoint exact cover."""


def resolve(schema: VariableSchema, subset: Subset, *, allow_empty: bool = False) -> tuple[int, ...]:
    """Turn names/indices into a sorted tuple of unique in-bounds indices."""
    out = set()
    for item in subset:
        if isinstance(item, str):
            out.add(schema.index(item))
        else:
            i = int(item)
            if not 0 <= i < len(schema):
                raise MechanismError(f"index {i} out of bounds for {len(schema)} variables")
            out.add(i)
    if not out and not allow_empty:
        raise MechanismError("index subset must be nonempty")
    return tuple(sorted(out))


@dataclass(frozen=True)
class SourcePartition:
    """Blocks of a source index subset; blocks are disjoint and cover it exactly."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(i) for i in b)) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if any(len(b) == 0 for b in blocks):
            raise PartitionError("partition blocks must be nonempty")
        flat = [i for b in blocks for i in b]
        if len(flat) != len(set(flat)):
            raise PartitionError(f"partition blocks overlap: {blocks}")

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(i for b in self.blocks for i in b))

    def check_covers(self, subset: Sequence[int]) -> None:
        if self.support != tuple(sorted(subset)):
            raise PartitionError(
                f"partition {self.blocks} does not cover source subset {tuple(sorted(subset))}")

    @classmethod
    def singletons(cls, subset: Iterable[int]) -> "SourcePartition":
        return cls(tuple((i,) for i in sorted(subset)))

    @classmethod
    def parse(cls, text: str, schema: VariableSchema) -> "SourcePartition":
        """Parse ``"x0,x1|x2"`` (blocks separated by ``|``)."""
        blocks = []
        for chunk in text.split("|"):
            items = [s.strip() for s in chunk.split(",") if s.strip()]
            if not items:
                raise PartitionError(f"empty block in partition {text!r}")
            blocks.append(tuple(schema.index(s) if not s.isdigit() else int(s) for s in items))
        return cls(tuple(blocks))


def set_partitions(items: Sequence[int]) -> Iterator[tuple[tuple[int, ...], ...]]:
    """All set partitions of ``items`` (Bell-number many)."""
    items = list(items)
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield ((first,),) + part
        for k in range(len(part)):
            yield part[:k] + ((first,) + part[k],) + part[k + 1:]


def sub_mechanism(tpm: TransitionMatrix, sources: Subset, targets: Subset) -> TransitionMatrix:
    """Conditional P(x'_B | x_A) with the complement of A averaged uniformly."""
    a = resolve(tpm.source, sources)
    b = resolve(tpm.target, targets)
    ns, nt = len(tpm.source), len(tpm.target)
    p = tpm.probs.reshape(tpm.source.cardinalities + tpm.target.cardinalities)
    drop_t = tuple(ns + j for j in range(nt) if j not in b)
    if drop_t:
        p = p.sum(axis=drop_t)
    drop_s = tuple(i for i in range(ns) if i not in a)
    if drop_s:
        p = p.mean(axis=drop_s)
    src = tpm.source.subset(a)
    tgt = tpm.target.subset(b)
    return TransitionMatrix(src, tgt, p.reshape(src.n_states, tgt.n_states))


def ei_from_matrix(p: np.ndarray) -> float:
    """EI of a raw row-stochastic array: (1/M) sum_ij p_ij log2(M p_ij / sum_k p_kj)."""
    m = p.shape[0]
    col = p.sum(axis=0)
    mask = p > 0
    ratio = np.ones_like(p)
    ratio[mask] = (m * p[mask]) / np.broadcast_to(col, p.shape)[mask]
    return float(np.sum(p[mask] * np.log2(ratio[mask])) / m)


def effective_information(tpm: TransitionMatrix) -> float:
    check(tpm)
    return ei_from_matrix(tpm.probs)


def ei(tpm: TransitionMatrix, sources: Subset, targets: Subset) -> float:
    """EI(X_A -> X'_B)."""
    return effective_information(sub_mechanism(tpm, sources, targets))


def unique_ei(tpm: TransitionMatrix, block: Subset, targets: Subset) -> float:
    return ei(tpm, block, targets)


def synergy(tpm: TransitionMatrix, sources: Subset, partition: SourcePartition | None,
            targets: Subset) -> float:
    """EI(A -> B) minus the sum of block EIs; singleton partition when ``partition`` is None."""
    a = resolve(tpm.source, sources)
    partition = partition or SourcePartition.singletons(a)
    partition.check_covers(a)
    whole = ei(tpm, a, targets)
    return whole - sum(ei(tpm, blk, targets) for blk in partition.blocks)


def phi_eid(tpm: TransitionMatrix) -> float:
    """System-level synergy: EI(X -> X') minus the sum of single-variable EIs."""
    if not tpm.is_square_system:
        raise MechanismError("phi_eid needs a full-system TPM (source schema == target schema)")
    everything = range(len(tpm.source))
    return synergy(tpm, everything, None, everything)


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def conditional_total_correlation(tpm: TransitionMatrix, partition: SourcePartition,
                                  targets: Subset) -> float:
    """TC(M_1..M_m | X'_B) = sum_i H(M_i | X'_B) - H(X_A | X'_B).

    Evaluated from entropies of the interventional joint q(x_A) P(x'_B | x_A);
    it never calls the EI formula, so it serves as an independent check on
    :func:`synergy`.
    """
    a = partition.support
    resolve(tpm.source, a)
    b = resolve(tpm.target, targets)
    # joint over the full source space, then marginalise by hand
    ns = len(tpm.source)
    tb = tpm.target.subset(b)
    full = tpm.probs.reshape(tpm.source.cardinalities + tpm.target.cardinalities)
    nt = len(tpm.target)
    drop_t = tuple(ns + j for j in range(nt) if j not in b)
    if drop_t:
        full = full.sum(axis=drop_t)
    joint = full.reshape(tpm.source.cardinalities + (tb.n_states,)) / tpm.source.n_states
    h_y = _entropy(joint.sum(axis=tuple(range(ns))))

    def h_with_y(keep: Sequence[int]) -> float:
        drop = tuple(i for i in range(ns) if i not in keep)
        return _entropy(joint.sum(axis=drop) if drop else joint)

    h_blocks = sum(h_with_y(blk) - h_y for blk in partition.blocks)
    return h_blocks - (h_with_y(a) - h_y)


@dataclass(frozen=True)
class DecompositionReport:
    sources: tuple[int, ...]
    targets: tuple[int, ...]
    total_ei: float
    unique: tuple[tuple[tuple[int, ...], float], ...]
    synergy: float

    @property
    def residual(self) -> float:
        return self.total_ei - sum(b for _, b in self.unique) - self.synergy

    def to_dict(self, source_schema: VariableSchema | None = None,
                target_schema: VariableSchema | None = None) -> dict:
        def label(block, schema):
            return [schema.names[i] for i in block] if schema else list(block)

        return {
            "sources": label(self.sources, source_schema),
            "targets": label(self.targets, target_schema),
            "total_ei": _sig12(self.total_ei),
            "unique": [{"block": label(blk, source_schema), "bits": _sig12(bits)} for blk, bits in self.unique],
            "synergy": _sig12(self.synergy),
        }

    def to_json(self, source_schema=None, target_schema=None) -> str:
        return json.dumps(self.to_dict(source_schema, target_schema), indent=2)


def _sig12(x: float) -> float:
    return float(f"{x:.12g}")


def decompose(tpm: TransitionMatrix, sources: Subset, partition: SourcePartition | None,
              targets: Subset) -> DecompositionReport:
    a = resolve(tpm.source, sources)
    b = resolve(tpm.target, targets)
    partition = partition or SourcePartition.singletons(a)
    partition.check_covers(a)
    total = ei(tpm, a, b)
    unique = tuple((blk, ei(tpm, blk, b)) for blk in partition.blocks)
    return DecompositionReport(a, b, total, unique, total - sum(u for _, u in unique))


@dataclass(frozen=True)
class PIDCheck:
    unique_1: float
    unique_2: float
    synergy: float
    joint_ei: float
    synergy_from_mi: float

    @property
    def identity_gap(self) -> float:
        return self.joint_ei - (self.unique_1 + self.unique_2 + self.synergy)

    def passed(self, tol: float = 1e-9) -> bool:
        return (abs(self.identity_gap) <= tol
                and abs(self.synergy - self.synergy_from_mi) <= tol)


def pid_compatibility_check(tpm: TransitionMatrix, targets: Subset,
                            sources: Subset | None = None) -> PIDCheck:
    """Two-source check: Un1 + Un2 + Syn = joint EI, and Syn equals the MI difference.

    The MI difference I(X1,X2;Y) - I(X1;Y) - I(X2;Y) is evaluated from
    entropies of the interventional joint, independently of :func:`synergy`.
    """
    if sources is None:
        if len(tpm.source) != 2:
            raise MechanismError(
                f"PID check needs exactly two source variables, got {len(tpm.source)}")
        sources = (0, 1)
    a = resolve(tpm.source, sources)
    if len(a) != 2:
        raise MechanismError(f"PID check needs exactly two source variables, got {len(a)}")
    sub = sub_mechanism(tpm, a, targets)
    c1, c2 = sub.source.cardinalities
    joint = (sub.probs / sub.source.n_states).reshape(c1, c2, -1)
    h_y = _entropy(joint.sum(axis=(0, 1)))
    h_1 = _entropy(joint.sum(axis=(1, 2)))
    h_2 = _entropy(joint.sum(axis=(0, 2)))
    i_12 = np.log2(c1 * c2) + h_y - _entropy(joint)
    i_1 = h_1 + h_y - _entropy(joint.sum(axis=1))
    i_2 = h_2 + h_y - _entropy(joint.sum(axis=0))
    u1 = ei(sub, [0], range(len(sub.target)))
    u2 = ei(sub, [1], range(len(sub.target)))
    total = effective_information(sub)
    return PIDCheck(u1, u2, total - u1 - u2, total, float(i_12 - i_1 - i_2))
