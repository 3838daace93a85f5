import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from peid.mechanism import (BooleanNetwork, Const, Gate, MechanismError, NetworkSyntaxError,
                            SigmoidMechanism, TransitionMatrix, Var, VariableSchema, check,
                            compile_tpm, dumps_tpm, loads_tpm, network_to_dict, parse_expr,
                            parse_network, read_manifest, render_network, validate)

XOR_SPEC = '{"variables": ["x1", "x2", "y"], "rules": {"y": {"gate": "XOR(x1, x2)"}}}'
MOTIF_SPEC = """{
  "variables": ["x0", "x1", "x2"],
  "rules": {
    "x0": {"gate": "COPY(x2)"},
    "x1": {"gate": "AND(x0, x1)"},
    "x2": {"gate": "AND(x0, x1)"}
  }
}"""


# ---- schema

def test_schema_rejects_duplicate_and_empty_names():
    with pytest.raises(MechanismError):
        VariableSchema(("a", "a"), (2, 2))
    with pytest.raises(MechanismError):
        VariableSchema(("a", ""), (2, 2))


def test_schema_rejects_nonpositive_cardinality():
    with pytest.raises(MechanismError):
        VariableSchema(("a",), (0,))


def test_schema_overflow_is_an_error():
    with pytest.raises(MechanismError):
        VariableSchema.binary([f"v{i}" for i in range(40)])


def test_mixed_radix_variable_zero_most_significant():
    s = VariableSchema.binary(["x0", "x1", "x2"])
    assert s.encode((1, 0, 1)) == 5
    assert s.decode(6) == (1, 1, 0)
    assert s.states()[3].tolist() == [0, 1, 1]


@given(st.lists(st.integers(1, 4), min_size=1, max_size=4), st.data())
def test_encode_decode_roundtrip(cards, data):
    s = VariableSchema(tuple(f"v{i}" for i in range(len(cards))), tuple(cards))
    idx = data.draw(st.integers(0, s.n_states - 1))
    assert s.encode(s.decode(idx)) == idx


# ---- validation

def test_validate_flags_bad_row_sum_with_index():
    s = VariableSchema.binary(["a"])
    probs = np.array([[0.5, 0.5], [0.5, 0.499]])
    problems = validate(TransitionMatrix(s, s, probs))
    assert problems and any("row 1" in p for p in problems)


def test_validate_flags_negative_entry():
    s = VariableSchema.binary(["a"])
    problems = validate(TransitionMatrix(s, s, np.array([[1.2, -0.2], [0.5, 0.5]])))
    assert any("negative" in p or "[0, 1]" in p for p in problems)
    with pytest.raises(MechanismError):
        check(TransitionMatrix(s, s, np.array([[1.2, -0.2], [0.5, 0.5]])))


def test_validate_accepts_compiled_networks():
    assert validate(compile_tpm(parse_network(MOTIF_SPEC))) == []


# ---- gate expressions

def test_parse_expr_structure():
    e = parse_expr("AND(x0, NOT(x1), 1)")
    assert e == Gate("AND", (Var("x0"), Gate("NOT", (Var("x1"),)), Const(1)))


@pytest.mark.parametrize("text", ["AND(x0)", "NOT(x0, x1)", "FOO(x0)", "AND(x0,", "x0 x1", "2", "AND"])
def test_parse_expr_rejects_malformed(text):
    with pytest.raises(NetworkSyntaxError):
        parse_expr(text)


def test_parse_expr_reports_column():
    with pytest.raises(NetworkSyntaxError) as info:
        parse_expr("AND(x0, FOO(x1))")
    assert info.value.column == 9


# ---- network specs

def test_parse_xor_spec():
    net = parse_network(XOR_SPEC)
    assert net.names == ("x1", "x2", "y")
    assert net.rules[2] == Gate("XOR", (Var("x1"), Var("x2")))


def test_undeclared_node_is_named():
    text = '{"variables": ["a"],\n "rules": {"z": {"gate": "COPY(a)"}}}'
    with pytest.raises(NetworkSyntaxError) as info:
        parse_network(text)
    assert "'z'" in str(info.value)
    assert info.value.line == 2


def test_unknown_variable_in_rule_is_named():
    with pytest.raises(NetworkSyntaxError) as info:
        parse_network('{"variables": ["a"], "rules": {"a": {"gate": "AND(a, q)"}}}')
    assert "q" in str(info.value)


def test_duplicate_rule_rejected():
    text = '{"variables": ["a"], "rules": {"a": {"gate": "a"}, "a": {"gate": "NOT(a)"}}}'
    with pytest.raises(NetworkSyntaxError, match="duplicate"):
        parse_network(text)


def test_json_syntax_error_has_position():
    with pytest.raises(NetworkSyntaxError) as info:
        parse_network('{"variables": ["a"],\n  "rules": {,}}')
    assert info.value.line == 2


def test_empty_and_unknown_field_specs():
    with pytest.raises(NetworkSyntaxError):
        parse_network("   ")
    with pytest.raises(NetworkSyntaxError, match="unknown field"):
        parse_network('{"variables": ["a"], "rulez": {}}')


def test_motif_compiles_to_expected_deterministic_map():
    tpm = compile_tpm(parse_network(MOTIF_SPEC))
    s = tpm.source
    for i in range(8):
        x0, x1, x2 = s.decode(i)
        j = s.encode((x2, x0 & x1, x0 & x1))
        assert tpm.probs[i, j] == 1.0
        assert tpm.probs[i].sum() == 1.0


def test_xor_gate_restricted_to_output():
    from peid.core import sub_mechanism
    tpm = compile_tpm(parse_network(XOR_SPEC))
    sub = sub_mechanism(tpm, ["x1", "x2"], ["y"])
    np.testing.assert_array_equal(sub.probs, [[1, 0], [0, 1], [0, 1], [1, 0]])


def test_all_zero_sigmoid_is_a_fair_coin():
    net = BooleanNetwork.from_rules(["a", "b"], {"a": SigmoidMechanism(), "b": SigmoidMechanism()})
    np.testing.assert_allclose(compile_tpm(net).probs, 0.25)


def test_empty_parity_and_coop_are_inert():
    m = SigmoidMechanism(b=0.3, beta=5.0, gamma=7.0)
    env = {"a": np.array([0, 1])}
    np.testing.assert_allclose(m.logit(env), 0.3)


def test_sigmoid_probabilities_strictly_inside_unit_interval():
    # doubles saturate near |logit| = 37, so keep the logits moderate
    rule = SigmoidMechanism(b=-3, alpha=2, beta=1.5, gamma=2,
                            copy=(("a", 1.0), ("b", 2.0)), coop=("a", "b"), parity=("a", "b"))
    s = VariableSchema.binary(["a", "b"]).states()
    p = rule.prob_one({"a": s[:, 0], "b": s[:, 1]})
    assert np.all(p > 0) and np.all(p < 1)
    tpm = compile_tpm(BooleanNetwork.from_rules(["a", "b"], {"a": rule, "b": rule}))
    assert np.all(tpm.probs > 0) and np.all(tpm.probs < 1)


def test_sigmoid_spec_parses():
    text = json.dumps({"variables": ["a", "b"], "rules": {"a": {"sigmoid": {
        "alpha": 1.5, "copy": [{"from": "b", "weight": 2}], "parity": ["a", "b"], "gamma": 1}}}})
    rule = parse_network(text).rules[0]
    assert rule.copy == (("b", 2.0),) and rule.parity == ("a", "b") and rule.alpha == 1.5


def test_bad_sigmoid_field_rejected():
    text = '{"variables": ["a"], "rules": {"a": {"sigmoid": {"delta": 1}}}}'
    with pytest.raises(NetworkSyntaxError):
        parse_network(text)


gate_names = st.sampled_from(["a", "b", "c"])


def _exprs():
    leaves = st.one_of(gate_names.map(Var), st.sampled_from([0, 1]).map(Const))
    return st.recursive(leaves, lambda inner: st.one_of(
        st.tuples(st.sampled_from(["NOT", "COPY"]), inner).map(lambda t: Gate(t[0], (t[1],))),
        st.tuples(st.sampled_from(["AND", "OR", "XOR"]), st.lists(inner, min_size=2, max_size=3))
        .map(lambda t: Gate(t[0], tuple(t[1])))), max_leaves=6)


@settings(max_examples=60, deadline=None)
@given(st.lists(_exprs(), min_size=3, max_size=3))
def test_render_parse_roundtrip_and_gate_rows_one_hot(exprs):
    net = BooleanNetwork.from_rules(["a", "b", "c"], dict(zip("abc", exprs)))
    again = parse_network(render_network(net))
    assert network_to_dict(again) == network_to_dict(net)
    tpm = compile_tpm(net)
    assert np.all((tpm.probs == 0) | (tpm.probs == 1))
    assert np.all(tpm.probs.sum(axis=1) == 1)
    assert compile_tpm(again) == tpm


def test_compile_is_deterministic():
    a = compile_tpm(parse_network(MOTIF_SPEC)).probs
    b = compile_tpm(parse_network(MOTIF_SPEC)).probs
    assert a.tobytes() == b.tobytes()


# ---- TPM files

@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_tpm_text_roundtrip_is_exact(n, seed):
    rng = np.random.default_rng(seed)
    s = VariableSchema.binary([f"v{i}" for i in range(n)])
    tpm = TransitionMatrix.square(s, rng.dirichlet(np.ones(s.n_states), size=s.n_states))
    text = dumps_tpm(tpm, {"k": 1})
    back = loads_tpm(text)
    assert back == tpm and back.probs.tobytes() == tpm.probs.tobytes()
    assert read_manifest(text) == {"k": 1}


def test_tpm_json_form_and_nonbinary_schema():
    s = VariableSchema(("a", "b"), (3, 2))
    tpm = TransitionMatrix(s, VariableSchema.binary(["y"]), np.full((6, 2), 0.5))
    assert loads_tpm(json.dumps(tpm.to_dict())) == tpm
    assert loads_tpm(dumps_tpm(tpm)) == tpm


def test_tpm_file_errors():
    with pytest.raises(NetworkSyntaxError):
        loads_tpm("source a:2\n")
    with pytest.raises(NetworkSyntaxError):
        loads_tpm("# peid-tpm v1\nsource a:2\ntarget a:2\n0.5 0.5 0.0\n1 0\n")
    with pytest.raises(MechanismError):
        loads_tpm("# peid-tpm v1\nsource a:2\ntarget a:2\n0.5 0.5\n")
