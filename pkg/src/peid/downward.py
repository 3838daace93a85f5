"""Downward causation from the whole system onto one component."""
from __future__ import annotations

import json
from dataclasses import dataclass

from .core import ei
from .mechanism import MechanismError, TransitionMatrix, check


@dataclass(frozen=True)
class DownwardReport:
    target: int
    dc: float
    flexibility: float
    env_synergy: float
    joint_ei: float
    self_ei: float
    env_ei: float
    per_source_ei: tuple[float, ...]

    def to_dict(self, names=None) -> dict:
        return {
            "target": names[self.target] if names else self.target,
            "dc": self.dc,
            "flexibility": self.flexibility,
            "env_synergy": self.env_synergy,
            "joint_ei": self.joint_ei,
            "self_ei": self.self_ei,
            "env_ei": self.env_ei,
            "per_source_ei": list(self.per_source_ei),
        }

    def to_json(self, names=None) -> str:
        return json.dumps(self.to_dict(names), indent=2)


def _check_target(tpm: TransitionMatrix, j: int) -> None:
    check(tpm)
    if not tpm.is_square_system:
        raise MechanismError("downward causation needs a full-system TPM")
    if not 0 <= j < len(tpm.target):
        raise MechanismError(f"target index {j} out of bounds for {len(tpm.target)} variables")


def downward_causation(tpm: TransitionMatrix, j: int) -> float:
    """DC_j = EI(X -> X'_j) - sum_i EI(X_i -> X'_j)."""
    _check_target(tpm, j)
    n = len(tpm.source)
    return ei(tpm, range(n), [j]) - sum(ei(tpm, [i], [j]) for i in range(n))


def dc_decomposition(tpm: TransitionMatrix, j: int) -> DownwardReport:
    """Split DC_j into flexibility of component j and synergy within its environment.

    Flexibility is signed; only the sum is guaranteed nonnegative.
    """
    _check_target(tpm, j)
    n = len(tpm.source)
    joint = ei(tpm, range(n), [j])
    singles = tuple(ei(tpm, [i], [j]) for i in range(n))
    env = [i for i in range(n) if i != j]
    env_ei = ei(tpm, env, [j]) if env else 0.0
    flexibility = joint - singles[j] - env_ei
    env_syn = env_ei - sum(singles[i] for i in env)
    return DownwardReport(j, joint - sum(singles), flexibility, env_syn,
                          joint, singles[j], env_ei, singles)
