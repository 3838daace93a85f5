import numpy as np
import pytest

from peid.mechanism import TransitionMatrix, VariableSchema
from oracles import random_tpm_probs

_ACCEPTANCE: list[str] = []


@pytest.fixture
def record_acceptance():
    def record(number: int, passed: bool, summary: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {summary}"
        _ACCEPTANCE.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


def make_random_tpm(seed: int, n_vars: int, kind: str = "dense") -> TransitionMatrix:
    rng = np.random.default_rng(seed)
    schema = VariableSchema.binary([f"x{i}" for i in range(n_vars)])
    return TransitionMatrix.square(schema, random_tpm_probs(rng, schema.n_states, kind))


@pytest.fixture
def random_tpm():
    return make_random_tpm
