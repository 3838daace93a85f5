"""Discrete mechanisms: variable schemas, transition matrices and Boolean networks.

Joint states are indexed in mixed radix with variable 0 as the most
significant digit. For three binary variables the state ``(x0, x1, x2)`` has
index ``4*x0 + 2*x1 + x2``. Every matrix in this package uses that order.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

ROW_TOL = 1e-12
MAX_STATES = 1 << 24


class MechanismError(ValueError):
    """Invalid mechanism definition or matrix."""


class NetworkSyntaxError(MechanismError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class VariableSchema:
    names: tuple[str, ...]
    cardinalities: tuple[int, ...] = ()

    def __post_init__(self):
        names = tuple(self.names)
        cards = tuple(int(c) for c in self.cardinalities) or (2,) * len(names)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "cardinalities", cards)
        if len(cards) != len(names):
            raise MechanismError("one cardinality per variable is required")
        if any(not isinstance(n, str) or not n for n in names):
            raise MechanismError("variable names must be nonempty strings")
        if len(set(names)) != len(names):
            raise MechanismError(f"duplicate variable names in {names}")
        if any(c < 1 for c in cards):
            raise MechanismError("cardinalities must be positive")
        if math.prod(cards) > MAX_STATES:
            raise MechanismError(
                f"joint state count {math.prod(cards)} exceeds {MAX_STATES}")

    @classmethod
    def binary(cls, names: Sequence[str]) -> "VariableSchema":
        return cls(tuple(names), (2,) * len(names))

    def __len__(self) -> int:
        return len(self.names)

    @property
    def n_states(self) -> int:
        return math.prod(self.cardinalities)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise MechanismError(f"unknown variable {name!r}") from None

    def states(self) -> np.ndarray:
        """All joint states as an (n_states, n_vars) integer array, in index order."""
        grids = np.indices(self.cardinalities).reshape(len(self), -1)
        return grids.T.copy()

    def encode(self, state: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(state), self.cardinalities))

    def decode(self, index: int) -> tuple[int, ...]:
        return tuple(int(v) for v in np.unravel_index(index, self.cardinalities))

    def subset(self, indices: Sequence[int]) -> "VariableSchema":
        return VariableSchema(tuple(self.names[i] for i in indices),
                              tuple(self.cardinalities[i] for i in indices))

    def to_dict(self) -> dict:
        return {"names": list(self.names), "cardinalities": list(self.cardinalities)}

    @classmethod
    def from_dict(cls, d: dict) -> "VariableSchema":
        names = tuple(d["names"])
        return cls(names, tuple(d.get("cardinalities") or (2,) * len(names)))


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic P(target state | source state)."""

    source: VariableSchema
    target: VariableSchema
    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.shape != (self.source.n_states, self.target.n_states):
            raise MechanismError(
                f"matrix shape {probs.shape} does not match schemas "
                f"({self.source.n_states}, {self.target.n_states})")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def square(cls, schema: VariableSchema, probs) -> "TransitionMatrix":
        return cls(schema, schema, probs)

    @property
    def shape(self) -> tuple[int, int]:
        return self.probs.shape

    @property
    def is_square_system(self) -> bool:
        return self.source == self.target

    def __eq__(self, other) -> bool:
        if not isinstance(other, TransitionMatrix):
            return NotImplemented
        return (self.source == other.source and self.target == other.target
                and np.array_equal(self.probs, other.probs))

    def to_dict(self) -> dict:
        return {
            "format": "peid-tpm",
            "version": 1,
            "source": self.source.to_dict(),
            "target": self.target.to_dict(),
            "probs": self.probs.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransitionMatrix":
        return cls(VariableSchema.from_dict(d["source"]),
                   VariableSchema.from_dict(d["target"]),
                   np.asarray(d["probs"], dtype=float))


def validate(tpm: TransitionMatrix, tol: float = ROW_TOL) -> list[str]:
    """Return a list of invariant violations; empty means the matrix is valid."""
    p = tpm.probs
    problems = []
    if not np.all(np.isfinite(p)):
        rows = np.unique(np.argwhere(~np.isfinite(p))[:, 0])
        problems += [f"row {r}: non-finite entry" for r in rows]
    for r, c in np.argwhere(p < 0):
        problems.append(f"row {r}, column {c}: negative entry {p[r, c]!r}")
    # summation can overshoot 1 by an ulp or two
    for r, c in np.argwhere(p > 1 + tol):
        problems.append(f"row {r}, column {c}: entry {p[r, c]!r} exceeds 1")
    sums = p.sum(axis=1)
    for r in np.flatnonzero(~(np.abs(sums - 1.0) <= tol)):
        problems.append(f"row {r}: sums to {sums[r]!r}, expected 1")
    return problems


def check(tpm: TransitionMatrix) -> TransitionMatrix:
    problems = validate(tpm)
    if problems:
        shown = "; ".join(problems[:5])
        more = f" (+{len(problems) - 5} more)" if len(problems) > 5 else ""
        raise MechanismError(f"invalid transition matrix: {shown}{more}")
    return tpm


# ---------------------------------------------------------------- gate rules

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Gate:
    op: str  # NOT, AND, OR, XOR, COPY
    args: tuple["Expr", ...]


Expr = Union[Var, Const, Gate]

_UNARY = {"NOT", "COPY"}
_NARY = {"AND", "OR", "XOR"}
_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_.]*)|(?P<num>\d+)|(?P<punct>[(),]))")


def parse_expr(text: str, line: int = 1, col0: int = 1) -> Expr:
    """Parse a gate expression like ``AND(x0, NOT(x1))``.

    ``line``/``col0`` locate the string inside a larger document so that
    errors point at the right character.
    """
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = len(text[pos:]) - len(text[pos:].lstrip()) + pos
            raise NetworkSyntaxError(f"unexpected character {text[start]!r}",
                                     line, col0 + start)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), col0 + start))
        pos = m.end()
    tokens.append(("end", "", col0 + len(text)))
    cursor = [0]

    def peek():
        return tokens[cursor[0]]

    def take(kind=None, value=None):
        tok = tokens[cursor[0]]
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            want = value or kind
            got = tok[1] or "end of expression"
            raise NetworkSyntaxError(f"expected {want!r}, found {got!r}", line, tok[2])
        cursor[0] += 1
        return tok

    def expr() -> Expr:
        kind, value, col = peek()
        if kind == "num":
            take()
            if value not in ("0", "1"):
                raise NetworkSyntaxError(f"constant must be 0 or 1, found {value}", line, col)
            return Const(int(value))
        if kind != "name":
            raise NetworkSyntaxError(f"expected expression, found {value or 'end'!r}", line, col)
        take()
        if peek()[1] != "(":
            if value in _UNARY | _NARY:
                raise NetworkSyntaxError(f"{value} requires arguments", line, col)
            return Var(value)
        if value not in _UNARY | _NARY:
            raise NetworkSyntaxError(f"unknown gate {value!r}", line, col)
        take("punct", "(")
        args = [expr()]
        while peek()[1] == ",":
            take()
            args.append(expr())
        take("punct", ")")
        if value in _UNARY and len(args) != 1:
            raise NetworkSyntaxError(f"{value} takes exactly 1 argument, got {len(args)}", line, col)
        if value in _NARY and len(args) < 2:
            raise NetworkSyntaxError(f"{value} takes at least 2 arguments, got {len(args)}", line, col)
        return Gate(value, tuple(args))

    result = expr()
    take("end")
    return result


def render_expr(e: Expr) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Const):
        return str(e.value)
    return f"{e.op}({', '.join(render_expr(a) for a in e.args)})"


def expr_variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Const):
        return set()
    return set().union(*(expr_variables(a) for a in e.args))


def eval_expr(e: Expr, env: dict[str, np.ndarray]) -> np.ndarray:
    """Vectorised evaluation over {0,1}-valued arrays."""
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Const):
        return np.int64(e.value)
    vals = [eval_expr(a, env) for a in e.args]
    if e.op == "COPY":
        return vals[0]
    if e.op == "NOT":
        return 1 - vals[0]
    out = vals[0]
    for v in vals[1:]:
        if e.op == "AND":
            out = out & v
        elif e.op == "OR":
            out = out | v
        else:
            out = out ^ v
    return out


# ------------------------------------------------------------- sigmoid rules

@dataclass(frozen=True)
class SigmoidMechanism:
    """P(x_j' = 1 | x) = sigmoid(b + alpha*copy + beta*coop + gamma*parity).

    copy   = sum_i w_i (2 x_i - 1)
    coop   = prod_{i in C} x_i - 2**-|C|     (0 when C is empty)
    parity = eta * (2 * (sum_{i in P} x_i mod 2) - 1)   (0 when P is empty)
    """

    b: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    eta: float = 1.0
    copy: tuple[tuple[str, float], ...] = ()
    coop: tuple[str, ...] = ()
    parity: tuple[str, ...] = ()

    def variables(self) -> set[str]:
        return {n for n, _ in self.copy} | set(self.coop) | set(self.parity)

    def logit(self, env: dict[str, np.ndarray]) -> np.ndarray:
        z = np.float64(self.b)
        if self.copy:
            z = z + self.alpha * sum(w * (2.0 * env[n] - 1.0) for n, w in self.copy)
        if self.coop:
            prod = np.prod([env[n] for n in self.coop], axis=0)
            z = z + self.beta * (prod - 2.0 ** -len(self.coop))
        if self.parity:
            odd = sum(env[n] for n in self.parity) % 2
            z = z + self.gamma * self.eta * (2.0 * odd - 1.0)
        return z

    def prob_one(self, env: dict[str, np.ndarray]) -> np.ndarray:
        return _sigmoid(self.logit(env))

    def to_dict(self) -> dict:
        return {
            "b": self.b, "alpha": self.alpha, "beta": self.beta,
            "gamma": self.gamma, "eta": self.eta,
            "copy": [{"from": n, "weight": w} for n, w in self.copy],
            "coop": list(self.coop), "parity": list(self.parity),
        }


def _sigmoid(z):
    # numerically stable on both tails
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                    np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


UpdateRule = Union[Expr, SigmoidMechanism]

# a node without an explicit rule is a fair coin, independent of the state
RANDOM_RULE = SigmoidMechanism()


def rule_variables(rule: UpdateRule) -> set[str]:
    if isinstance(rule, SigmoidMechanism):
        return rule.variables()
    return expr_variables(rule)


@dataclass(frozen=True)
class BooleanNetwork:
    schema: VariableSchema
    rules: tuple[UpdateRule, ...] = field(default=())

    def __post_init__(self):
        if any(c != 2 for c in self.schema.cardinalities):
            raise MechanismError("Boolean networks require binary variables")
        if len(self.rules) != len(self.schema):
            raise MechanismError(
                f"expected {len(self.schema)} rules, got {len(self.rules)}")
        known = set(self.schema.names)
        for name, rule in zip(self.schema.names, self.rules):
            unknown = rule_variables(rule) - known
            if unknown:
                raise MechanismError(
                    f"rule for {name!r} references unknown variable(s) "
                    f"{', '.join(sorted(unknown))}")

    @classmethod
    def from_rules(cls, names: Sequence[str], rules: dict) -> "BooleanNetwork":
        """Build from ``{name: expr-string | Expr | SigmoidMechanism}``; missing nodes are random."""
        for name in rules:
            if name not in names:
                raise MechanismError(f"rule given for undeclared variable {name!r}")
        built = []
        for name in names:
            rule = rules.get(name, RANDOM_RULE)
            if isinstance(rule, str):
                rule = parse_expr(rule)
            built.append(rule)
        return cls(VariableSchema.binary(names), tuple(built))

    @property
    def names(self) -> tuple[str, ...]:
        return self.schema.names


def compile_tpm(net: BooleanNetwork) -> TransitionMatrix:
    """Full 2^n x 2^n TPM; node updates are independent given the current state."""
    schema = net.schema
    states = schema.states()
    env = {name: states[:, k].astype(np.int64) for k, name in enumerate(schema.names)}
    n_states = schema.n_states
    # per-node probability of being 1 at t+1, shape (n_states,)
    p_one = []
    for rule in net.rules:
        if isinstance(rule, SigmoidMechanism):
            p = rule.prob_one(env)
        else:
            p = eval_expr(rule, env).astype(float)
        p_one.append(np.broadcast_to(np.asarray(p, dtype=float), (n_states,)))
    probs = np.ones((n_states, 1))
    # build columns in mixed-radix order: variable 0 is the slowest-varying digit
    for p in p_one:
        probs = np.stack([probs * (1.0 - p)[:, None], probs * p[:, None]], axis=2)
        probs = probs.reshape(n_states, -1)
    return TransitionMatrix(schema, schema, probs)


# ------------------------------------------------------------ network specs

def _locate(text: str, needle: str, start: int = 0) -> tuple[int, int, int]:
    pos = text.find(needle, start)
    if pos < 0:
        return 1, 1, 0
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col, pos


def parse_network(text: str) -> BooleanNetwork:
    """Parse a JSON network spec.

    ``{"variables": [...], "rules": {name: {"gate": expr} | {"sigmoid": {...}}}}``.
    Variables without a rule update as independent fair coins.
    """
    if not text.strip():
        raise NetworkSyntaxError("empty network spec", 1, 1)
    try:
        doc = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as err:
        raise NetworkSyntaxError(err.msg, err.lineno, err.colno) from None
    except _DuplicateKey as err:
        line, col, _ = _locate(text, json.dumps(err.key))
        raise NetworkSyntaxError(f"duplicate rule or key {err.key!r}", line, col) from None
    if not isinstance(doc, dict):
        raise NetworkSyntaxError("network spec must be a JSON object", 1, 1)
    extra = set(doc) - {"variables", "rules", "name", "description"}
    if extra:
        line, col, _ = _locate(text, json.dumps(sorted(extra)[0]))
        raise NetworkSyntaxError(f"unknown field {sorted(extra)[0]!r}", line, col)
    variables = doc.get("variables")
    if not isinstance(variables, list) or not all(isinstance(v, str) for v in variables):
        line, col, _ = _locate(text, '"variables"')
        raise NetworkSyntaxError("'variables' must be a list of names", line, col)
    rules_doc = doc.get("rules", {})
    if not isinstance(rules_doc, dict):
        line, col, _ = _locate(text, '"rules"')
        raise NetworkSyntaxError("'rules' must be an object", line, col)
    _, _, rules_pos = _locate(text, '"rules"')
    rules: dict[str, UpdateRule] = {}
    for name, body in rules_doc.items():
        line, col, key_pos = _locate(text, json.dumps(name), rules_pos)
        if name not in variables:
            raise NetworkSyntaxError(f"rule for undeclared variable {name!r}", line, col)
        if not isinstance(body, dict) or len(body) != 1 or not ({"gate", "sigmoid"} & set(body)):
            raise NetworkSyntaxError(
                f"rule for {name!r} must be {{'gate': ...}} or {{'sigmoid': ...}}", line, col)
        if "gate" in body:
            expr_text = body["gate"]
            if not isinstance(expr_text, str):
                raise NetworkSyntaxError(f"gate for {name!r} must be a string", line, col)
            eline, ecol, _ = _locate(text, json.dumps(expr_text), key_pos)
            rule = parse_expr(expr_text, eline, ecol + 1)
        else:
            rule = _parse_sigmoid(name, body["sigmoid"], line, col)
        unknown = rule_variables(rule) - set(variables)
        if unknown:
            raise NetworkSyntaxError(
                f"rule for {name!r} references unknown variable(s) "
                f"{', '.join(sorted(unknown))}", line, col)
        rules[name] = rule
    try:
        return BooleanNetwork.from_rules(variables, rules)
    except MechanismError as err:
        raise NetworkSyntaxError(str(err), 1, 1) from None


class _DuplicateKey(Exception):
    def __init__(self, key):
        self.key = key


def _reject_duplicate_keys(pairs):
    seen = {}
    for k, v in pairs:
        if k in seen:
            raise _DuplicateKey(k)
        seen[k] = v
    return seen


_SIGMOID_FIELDS = {"b", "alpha", "beta", "gamma", "eta", "copy", "coop", "parity"}


def _parse_sigmoid(name: str, body, line: int, col: int) -> SigmoidMechanism:
    if not isinstance(body, dict):
        raise NetworkSyntaxError(f"sigmoid rule for {name!r} must be an object", line, col)
    extra = set(body) - _SIGMOID_FIELDS
    if extra:
        raise NetworkSyntaxError(f"unknown sigmoid field(s) {sorted(extra)} for {name!r}", line, col)
    try:
        copy = tuple((c["from"], float(c.get("weight", 1.0))) if isinstance(c, dict) else (c, 1.0)
                     for c in body.get("copy", []))
        return SigmoidMechanism(
            b=float(body.get("b", 0.0)),
            alpha=float(body.get("alpha", 0.0)),
            beta=float(body.get("beta", 0.0)),
            gamma=float(body.get("gamma", 0.0)),
            eta=float(body.get("eta", 1.0)),
            copy=copy,
            coop=tuple(body.get("coop", [])),
            parity=tuple(body.get("parity", [])),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise NetworkSyntaxError(f"malformed sigmoid rule for {name!r}: {err}", line, col) from None


def network_to_dict(net: BooleanNetwork) -> dict:
    rules = {}
    for name, rule in zip(net.names, net.rules):
        if rule == RANDOM_RULE:
            continue
        if isinstance(rule, SigmoidMechanism):
            rules[name] = {"sigmoid": rule.to_dict()}
        else:
            rules[name] = {"gate": render_expr(rule)}
    return {"variables": list(net.names), "rules": rules}


def render_network(net: BooleanNetwork) -> str:
    return json.dumps(network_to_dict(net), indent=2)


# ------------------------------------------------------------- TPM files

TPM_HEADER = "# peid-tpm v1"


def _schema_line(tag: str, schema: VariableSchema) -> str:
    return tag + " " + " ".join(f"{n}:{c}" for n, c in zip(schema.names, schema.cardinalities))


def _parse_schema_line(tag: str, line: str, lineno: int) -> VariableSchema:
    parts = line.split()
    if not parts or parts[0] != tag:
        raise NetworkSyntaxError(f"expected '{tag}' line", lineno, 1)
    names, cards = [], []
    for p in parts[1:]:
        name, _, card = p.rpartition(":")
        if not name or not card.isdigit():
            raise NetworkSyntaxError(f"malformed variable entry {p!r}", lineno, line.find(p) + 1)
        names.append(name)
        cards.append(int(card))
    return VariableSchema(tuple(names), tuple(cards))


def dumps_tpm(tpm: TransitionMatrix, manifest: dict | None = None) -> str:
    lines = [TPM_HEADER]
    if manifest is not None:
        lines.append("# manifest " + json.dumps(manifest, sort_keys=True))
    lines.append(_schema_line("source", tpm.source))
    lines.append(_schema_line("target", tpm.target))
    for row in tpm.probs:
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def loads_tpm(text: str) -> TransitionMatrix:
    """Read a TPM from the v1 text format or its JSON equivalent."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            return TransitionMatrix.from_dict(json.loads(text))
        except (KeyError, TypeError) as err:
            raise MechanismError(f"malformed JSON TPM: {err}") from None
    lines = text.splitlines()
    if not lines or lines[0].strip() != TPM_HEADER:
        raise NetworkSyntaxError(f"missing '{TPM_HEADER}' header", 1, 1)
    body = [(i + 1, ln) for i, ln in enumerate(lines[1:], start=1)
            if ln.strip() and not ln.lstrip().startswith("#")]
    if len(body) < 2:
        raise NetworkSyntaxError("missing source/target schema lines", len(lines), 1)
    source = _parse_schema_line("source", body[0][1], body[0][0])
    target = _parse_schema_line("target", body[1][1], body[1][0])
    rows = []
    for lineno, ln in body[2:]:
        try:
            rows.append([float(v) for v in ln.split()])
        except ValueError as err:
            raise NetworkSyntaxError(str(err), lineno, 1) from None
        if len(rows[-1]) != target.n_states:
            raise NetworkSyntaxError(
                f"expected {target.n_states} values, got {len(rows[-1])}", lineno, 1)
    if len(rows) != source.n_states:
        raise MechanismError(f"expected {source.n_states} rows, got {len(rows)}")
    return TransitionMatrix(source, target, np.array(rows, dtype=float))


def read_manifest(text: str) -> dict | None:
    for ln in text.splitlines()[1:]:
        if ln.startswith("# manifest "):
            return json.loads(ln[len("# manifest "):])
        if not ln.startswith("#"):
            break
    return None
