"""Acceptance criteria, one test each, with a PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` or directly as a script.
"""
import itertools
import math
import sys
import time

import numpy as np
import pytest

from peid.continuous import (ConditionalGaussianPredictor, SweepConfig, continuous_hypergraph, mi_estimate,
                             run_alpha_sweep, uniform_intervention)
from peid.core import (SourcePartition, conditional_total_correlation, decompose, ei, set_partitions,
                       synergy)
from peid.demos import data_text, load_fixtures, run_demo

from conftest import make_random_tpm
from histogram_oracle import histogram_synergy
from oracles import ei_oracle

SWEEP_SEEDS = range(10)


def _demo_ok(name):
    start = time.perf_counter()
    result = run_demo(name)
    return result, time.perf_counter() - start


def _failed_keys(result):
    return [c.key for c in result.checks if not c.passed]


def _failure_note(items):
    return f"; failing: {', '.join(items[:3])}" if items else ""


def test_criterion_1_and_xor_synergy(record_acceptance):
    result, secs = _demo_ok("xor-and")
    obs = {c.key: c.observed for c in result.checks}
    ok = (abs(obs["and.synergy"] - 0.189) <= 0.001 and abs(obs["xor.synergy"] - 1.0) <= 1e-9
          and abs(obs["xor.unique_x1"]) <= 1e-9 and abs(obs["xor.unique_x2"]) <= 1e-9
          and result.passed and secs < 1.0)
    record_acceptance(1, ok, f"Syn(AND)={obs['and.synergy']:.4f}, Syn(XOR)={obs['xor.synergy']:.4f}, "
                             f"{secs:.2f}s" + _failure_note(_failed_keys(result)))
    assert ok


def test_criterion_2_motif_graph(record_acceptance):
    result, secs = _demo_ok("motif")
    graph = result.details["graph"]
    edges = {(e["src"], e["dst"]): e["bits"] for e in graph["edges"]}
    hyper = {(tuple(h["srcs"]), tuple(h["dsts"])): h["bits"] for h in graph["hyperedges"]}
    expected_edges = {(2, 0), (0, 1), (1, 1), (0, 2), (1, 2)}
    ok = (set(edges) == expected_edges and abs(edges[(2, 0)] - 1.0) <= 1e-9
          and set(hyper) == {((0, 1), (1,)), ((0, 1), (2,))}
          and all(abs(w - 0.189) <= 0.001 for w in hyper.values())
          and result.passed and secs < 1.0)
    record_acceptance(2, ok, f"{len(edges)} edges, {len(hyper)} hyperedges "
                             f"{sorted(round(w, 4) for w in hyper.values())}, {secs:.2f}s")
    assert ok


def test_criterion_3_multiscale(record_acceptance):
    opt, s1 = _demo_ok("multiscale-6node")
    non, s2 = _demo_ok("multiscale-nonopt")
    o = {c.key: c.observed for c in opt.checks}
    n = {c.key: c.observed for c in non.checks}
    triple = (n["macro_ei"], n["macro_phi"], n["strongest_hyperedge"])
    ok = (abs(o["macro_ei"] - 3.0) <= 1e-9 and abs(o["macro_phi"]) <= 1e-9
          and o["macro_hyperedge_count"] == 0
          and all(abs(a - b) <= 0.002 for a, b in zip(triple, (1.658, 0.393, 0.150)))
          and opt.passed and non.passed and s1 + s2 < 10.0)
    record_acceptance(3, ok, f"macro EI={o['macro_ei']:.3f}, Phi={o['macro_phi']:.3f}; non-optimal "
                             f"({triple[0]:.3f}, {triple[1]:.3f}, {triple[2]:.3f}), {s1 + s2:.2f}s")
    assert ok


def test_criterion_4_downward(record_acceptance):
    result, secs = _demo_ok("downward")
    o = {c.key: c.observed for c in result.checks}
    ok = (abs(o["b.dc"] - 1.0) <= 1e-9 and abs(o["b.env_synergy"]) <= 1e-9
          and abs(o["c.dc"] - 0.8113) <= 0.001 and abs(o["c.flexibility"] - 0.5) <= 0.001
          and abs(o["c.env_synergy"] - 0.3113) <= 0.001 and secs < 1.0)
    record_acceptance(4, ok, f"DC(b)={o['b.dc']:.4f}; DC(c)={o['c.dc']:.4f} = "
                             f"{o['c.flexibility']:.4f} + {o['c.env_synergy']:.4f}, {secs:.2f}s")
    assert ok


def _theorem_violations(tpm, target_sets):
    """Largest violation of each property over every partition of every source subset."""
    n = len(tpm.source)
    worst = dict.fromkeys(["nonneg", "identity", "additivity", "maximality", "ctc", "oracle"], 0.0)
    for b in target_sets:
        for size in range(1, n + 1):
            for a in itertools.combinations(range(n), size):
                joint = ei(tpm, a, b)
                worst["oracle"] = max(worst["oracle"], abs(joint - ei_oracle(tpm, a, b)))
                finest = synergy(tpm, a, None, b)
                for blocks in set_partitions(a):
                    part = SourcePartition(blocks)
                    syn = synergy(tpm, a, part, b)
                    worst["nonneg"] = max(worst["nonneg"], -syn, syn - joint)
                    worst["identity"] = max(worst["identity"], abs(decompose(tpm, a, part, b).residual))
                    worst["maximality"] = max(worst["maximality"], syn - finest)
                    worst["ctc"] = max(worst["ctc"], abs(syn - conditional_total_correlation(tpm, part, b)))
                    for star in (blk for blk in blocks if len(blk) > 1):
                        rest = tuple(blk for blk in blocks if blk != star)
                        for ref in set_partitions(star):
                            lhs = synergy(tpm, a, SourcePartition(rest + ref), b)
                            rhs = syn + synergy(tpm, star, SourcePartition(ref), b)
                            worst["additivity"] = max(worst["additivity"], abs(lhs - rhs))
    return worst


def test_criterion_5_theorem_suites(record_acceptance):
    start = time.perf_counter()
    worst = dict.fromkeys(["nonneg", "identity", "additivity", "maximality", "ctc", "oracle"], 0.0)
    count = 0
    kinds = ("dense", "sparse", "deterministic")
    for seed in range(210):
        n = 2 + seed % 3
        tpm = make_random_tpm(10_000 + seed, n, kinds[(seed // 3) % 3])
        targets = [tuple(range(n)), (seed % n,)]
        for k, v in _theorem_violations(tpm, targets).items():
            worst[k] = max(worst[k], v)
        count += 1
    secs = time.perf_counter() - start
    ok = count >= 200 and all(v <= 1e-9 for v in worst.values()) and secs < 60.0
    summary = ", ".join(f"{k}={v:.1e}" for k, v in worst.items())
    record_acceptance(5, ok, f"{count} TPMs, worst violations {summary}, {secs:.1f}s")
    assert ok


def test_criterion_6_phi_ordering(record_acceptance):
    result, secs = _demo_ok("phi-bench")
    table = result.details["networks"]
    phis = {name: row["phi"] for name, row in table.items()}
    top = max(phis, key=phis.get)
    ok = top == "all-parity" and phis["dense-copy"] < 0.05 and secs < 300.0
    listing = ", ".join(f"{k}={v:.3f}" for k, v in sorted(phis.items(), key=lambda kv: kv[1]))
    record_acceptance(6, ok, f"{listing}, {secs:.1f}s")
    assert ok


def test_criterion_7_gaussian_oracle(record_acceptance):
    start = time.perf_counter()
    exact = -0.5 * math.log2(1 - 0.64)
    corr_err, indep_err = 0.0, 0.0
    for seed in range(5):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(100_000)
        y = 0.8 * x + 0.6 * rng.standard_normal(100_000)
        corr_err = max(corr_err, abs(mi_estimate(x, y) - exact))
        indep_err = max(indep_err, abs(mi_estimate(rng.standard_normal(100_000), rng.standard_normal(100_000))))
    secs = time.perf_counter() - start
    ok = corr_err <= 0.02 and indep_err <= 0.01 and secs < 30.0
    record_acceptance(7, ok, f"rho=0.8 max error {corr_err:.4f} bits, independent max {indep_err:.4f} bits, "
                             f"{secs:.2f}s")
    assert ok


def test_criterion_8_alpha_sweep_trends(record_acceptance):
    fixtures = {f["key"]: f["value"] for f in load_fixtures()["alpha-sweep"]}
    start = time.perf_counter()
    failures = []
    shares = {}
    for sigma in (0.05, 0.6):
        threshold = fixtures[f"sigma={sigma}.syn_share_at_alpha1"]
        for seed in SWEEP_SEEDS:
            res = run_alpha_sweep(SweepConfig(sigma_eps=sigma, n_samples=100_000, seed=seed))
            syn, e2, e3, joint = (res.column(c) for c in ("syn", "ei_x2", "ei_x3", "ei_joint"))
            share = syn[-1] / joint[-1]
            shares.setdefault(sigma, []).append(share)
            checks = {"syn0": abs(syn[0]) <= 0.03, "syn_up": bool(np.all(np.diff(syn) > 0)),
                      "x2_down": bool(np.all(np.diff(e2) < 0)), "x3_small": bool(np.all(e3 <= 0.05)),
                      "share": share > threshold}
            failures += [f"sigma={sigma},seed={seed}:{k}" for k, v in checks.items() if not v]
    secs = time.perf_counter() - start
    ok = not failures and secs < 300.0
    record_acceptance(8, ok, f"10 seeds x 2 noise levels, min Syn/joint "
                             f"{min(shares[0.05]):.3f} (>{fixtures['sigma=0.05.syn_share_at_alpha1']}) and "
                             f"{min(shares[0.6]):.3f} (>{fixtures['sigma=0.6.syn_share_at_alpha1']}), "
                             f"{secs:.1f}s" + _failure_note(failures))
    assert ok


def test_criterion_9_predictor_hyperedge(record_acceptance):
    start = time.perf_counter()
    pred = ConditionalGaussianPredictor.loads(data_text("predictor_4station.json"))
    g = continuous_hypergraph(pred, 2.0, 100_000, seed=0, epsilon=0.05)
    found = set(g.hyperedge_map())
    # histogram oracle: synergy in excess of a shuffled-target null, for every pair and target
    rng = np.random.default_rng(1)
    x = uniform_intervention(rng, 200_000, 4, 2.0)
    y = pred.sample(x, rng)
    excess = {}
    for i, k in itertools.combinations(range(4), 2):
        for j in range(4):
            raw = histogram_synergy(x[:, i], x[:, k], y[:, j])[3]
            null = histogram_synergy(x[:, i], x[:, k], rng.permutation(y[:, j]))[3]
            excess[((i, k), (j,))] = raw - null
    planted = ((2, 3), (1,))
    others = max(v for key, v in excess.items() if key != planted)
    secs = time.perf_counter() - start
    ok = found == {planted} and excess[planted] > 0.2 and others < 0.05 and secs < 120.0
    record_acceptance(9, ok, f"hyperedges {sorted(found)}, oracle excess planted {excess[planted]:.3f} bits, "
                             f"largest other {others:.3f} bits, {secs:.1f}s")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
