"""Slow, loop-based reference implementations used only by the tests.

They share no code with the package beyond the TransitionMatrix container,
so agreement is evidence rather than tautology.
"""
from __future__ import annotations

import itertools
import math

import numpy as np


def states(cards):
    return list(itertools.product(*[range(c) for c in cards]))


def entropy(dist: dict) -> float:
    return -sum(p * math.log2(p) for p in dist.values() if p > 0)


def interventional_joint(tpm, sources, targets) -> dict:
    """q(x_A, x'_B) with every source variable independent and uniform."""
    src_cards = tpm.source.cardinalities
    tgt_cards = tpm.target.cardinalities
    src_states = states(src_cards)
    tgt_states = states(tgt_cards)
    w = 1.0 / len(src_states)
    joint: dict = {}
    for i, s in enumerate(src_states):
        a = tuple(s[k] for k in sources)
        for j, t in enumerate(tgt_states):
            p = tpm.probs[i, j]
            if p == 0:
                continue
            key = (a, tuple(t[k] for k in targets))
            joint[key] = joint.get(key, 0.0) + w * p
    return joint


def marginal(joint: dict, f) -> dict:
    out: dict = {}
    for k, p in joint.items():
        kk = f(k)
        out[kk] = out.get(kk, 0.0) + p
    return out


def ei_oracle(tpm, sources, targets) -> float:
    """I(X_A; X'_B) = H(X_A) + H(X'_B) - H(X_A, X'_B) under the uniform intervention."""
    joint = interventional_joint(tpm, sources, targets)
    h_a = entropy(marginal(joint, lambda k: k[0]))
    h_b = entropy(marginal(joint, lambda k: k[1]))
    return h_a + h_b - entropy(joint)


def sub_mechanism_oracle(tpm, sources, targets) -> np.ndarray:
    joint = interventional_joint(tpm, sources, targets)
    a_states = states([tpm.source.cardinalities[k] for k in sources])
    b_states = states([tpm.target.cardinalities[k] for k in targets])
    out = np.zeros((len(a_states), len(b_states)))
    for (a, b), p in joint.items():
        out[a_states.index(a), b_states.index(b)] += p
    return out / out.sum(axis=1, keepdims=True)


def random_tpm_probs(rng: np.random.Generator, n_states: int, kind: str) -> np.ndarray:
    if kind == "dense":
        return rng.dirichlet(np.ones(n_states), size=n_states)
    if kind == "deterministic":
        p = np.zeros((n_states, n_states))
        p[np.arange(n_states), rng.integers(0, n_states, n_states)] = 1.0
        return p
    # sparse: each row supported on a random handful of states
    p = np.zeros((n_states, n_states))
    for i in range(n_states):
        k = int(rng.integers(1, min(3, n_states) + 1))
        cols = rng.choice(n_states, size=k, replace=False)
        p[i, cols] = rng.dirichlet(np.ones(k))
    return p
