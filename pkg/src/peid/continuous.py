"""Continuous EI and synergy from samples via an affine triangular transport map.

The density model is z -> L^{-1}(z - mu) pushed onto a standard Gaussian,
with mu the sample mean and L the Cholesky factor of the sample covariance.
Sources are lifted polynomially before fitting so that joint nonlinear
mechanisms (through the cross term xy) become visible to an affine model.
Internal math is in nats; public estimates are returned in bits.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import digamma

from .graph import CausalHypergraph, EiEdge, SynHyperedge

LN2 = math.log(2.0)
JITTER_LADDER = (1e-10, 1e-8, 1e-6)
CORRECTIONS = ("none", "wishart")


class DegenerateCovarianceError(ArithmeticError):
    """Covariance is not positive definite even after the jitter ladder."""


# ------------------------------------------------------------------- lifting

LIFT_MONOMIALS = {
    1: ("x", "x^2", "x^3"),
    2: ("x", "y", "xy", "x^2", "y^2"),
}


def lift_features(values, arity: int) -> np.ndarray:
    """Polynomial lift: arity 1 -> (x, x^2, x^3); arity 2 -> (x, y, xy, x^2, y^2).

    Accepts one sample (scalar or pair) or a batch shaped (M,) / (M, 2).
    """
    v = np.asarray(values, dtype=float)
    if arity == 1:
        if v.ndim == 2 and v.shape[1] == 1:
            v = v[:, 0]
        if v.ndim > 1:
            raise ValueError(f"arity-1 lift needs univariate values, got shape {v.shape}")
        return np.stack([v, v * v, v * v * v], axis=-1)
    if arity == 2:
        if v.shape[-1] != 2 or v.ndim > 2:
            raise ValueError(f"arity-2 lift needs pairs, got shape {v.shape}")
        x, y = v[..., 0], v[..., 1]
        return np.stack([x, y, x * y, x * x, y * y], axis=-1)
    raise ValueError(f"lift arity must be 1 or 2, got {arity}")


# ---------------------------------------------------------- transport model

@dataclass(frozen=True, eq=False)
class AffineTransportModel:
    mean: np.ndarray
    chol: np.ndarray
    jitter: float = 0.0

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def log_det(self) -> float:
        return float(np.sum(np.log(np.diag(self.chol))))

    def transform(self, z: np.ndarray) -> np.ndarray:
        """T(z) = L^{-1}(z - mu), row-wise."""
        z = np.atleast_2d(z)
        return solve_triangular(self.chol, (z - self.mean).T, lower=True).T

    def covariance(self) -> np.ndarray:
        return self.chol @ self.chol.T


def _as_matrix(samples) -> np.ndarray:
    a = np.asarray(samples, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"samples must be (M, d), got shape {a.shape}")
    return a


def fit_affine_transport(samples) -> AffineTransportModel:
    """Mean and Cholesky factor of the sample covariance (ddof=1).

    Jitter ``c * trace/d`` is added for c on the ladder 1e-10, 1e-8, 1e-6. A rung
    is rejected when some Cholesky pivot is no larger than ten times the
    jitter, since that direction is then made of jitter rather than data.
    """
    z = _as_matrix(samples)
    m, d = z.shape
    if m < d + 2:
        raise ValueError(f"need at least d + 2 = {d + 2} samples, got {m}")
    mean = z.mean(axis=0)
    cov = np.atleast_2d(np.cov(z, rowvar=False, ddof=1))
    scale = float(np.trace(cov)) / d
    if not np.isfinite(scale) or scale <= 0:
        raise DegenerateCovarianceError("sample covariance has zero trace")
    for c in JITTER_LADDER:
        jitter = c * scale
        try:
            chol = np.linalg.cholesky(cov + jitter * np.eye(d))
        except np.linalg.LinAlgError:
            continue
        if np.all(np.diag(chol) ** 2 > 10.0 * jitter):
            return AffineTransportModel(mean, chol, jitter)
    raise DegenerateCovarianceError(
        f"covariance of {d}-dimensional samples is not positive definite after jitter ladder")


def log_density(model: AffineTransportModel, z) -> np.ndarray | float:
    """log p(z) = -(1/2)[d log 2pi + |T(z)|^2] - log|det L|, in nats."""
    arr = np.asarray(z, dtype=float)
    single = arr.ndim <= 1
    if single:
        arr = arr.reshape(1, -1)
    if arr.shape[1] != model.dim:
        raise ValueError(f"dimension mismatch: model has d={model.dim}, got {arr.shape[1]}")
    t = model.transform(arr)
    out = -0.5 * (model.dim * math.log(2 * math.pi) + np.sum(t * t, axis=1)) - model.log_det
    return float(out[0]) if single else out


def _log_det_bias(d: int, m: int) -> float:
    """E[log det S] - log det Sigma for an unbiased Gaussian sample covariance S."""
    dof = m - 1
    return float(sum(digamma((dof - i) / 2.0) for i in range(d)) + d * math.log(2.0 / dof))


def mi_estimate(x, y, lift_x: int | None = None, correction: str = "none") -> float:
    """Transport-map mutual information between paired samples, in bits.

    ``lift_x`` lifts the x columns (arity 1 or 2) before fitting. With
    ``correction="wishart"`` the expected Gaussian log-determinant bias of
    each covariance estimate is subtracted.
    """
    if correction not in CORRECTIONS:
        raise ValueError(f"correction must be one of {CORRECTIONS}")
    xs = _as_matrix(x)
    ys = _as_matrix(y)
    if xs.shape[0] != ys.shape[0]:
        raise ValueError("x and y must have the same number of rows")
    if lift_x is not None:
        xs = lift_features(xs if lift_x == 2 else xs[:, 0], lift_x)
    joint = np.hstack([xs, ys])
    m = joint.shape[0]
    nats = float(np.mean(log_density(fit_affine_transport(joint), joint)
                         - log_density(fit_affine_transport(xs), xs)
                         - log_density(fit_affine_transport(ys), ys)))
    if correction == "wishart":
        dx, dy = xs.shape[1], ys.shape[1]
        nats -= 0.5 * (_log_det_bias(dx, m) + _log_det_bias(dy, m) - _log_det_bias(dx + dy, m))
    return nats / LN2


@dataclass(frozen=True)
class SynergyEstimate:
    joint: float
    first: float
    second: float

    @property
    def synergy(self) -> float:
        return self.joint - (self.first + self.second)


def _canonical_pair(x1: np.ndarray, x2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # order-independent column order so that swapping sources is bit-exact
    return (x1, x2) if x1.tobytes() <= x2.tobytes() else (x2, x1)


def synergy_terms(x1, x2, y, correction: str = "none") -> SynergyEstimate:
    a = _as_matrix(x1)[:, 0]
    b = _as_matrix(x2)[:, 0]
    lo, hi = _canonical_pair(a, b)
    joint = mi_estimate(np.column_stack([lo, hi]), y, lift_x=2, correction=correction)
    return SynergyEstimate(joint,
                           mi_estimate(a, y, lift_x=1, correction=correction),
                           mi_estimate(b, y, lift_x=1, correction=correction))


def synergy_estimate(x1, x2, y, correction: str = "none") -> float:
    """I(phi12(X1,X2); Y) - I(phi1(X1); Y) - I(phi2(X2); Y) in bits, reported raw."""
    return synergy_terms(x1, x2, y, correction).synergy


# ---------------------------------------------------------------- dynamics

def uniform_intervention(rng: np.random.Generator, m: int, k: int, length: float) -> np.ndarray:
    """Maximum-entropy intervention on a box: k independent Uniform[-L/2, L/2] sources."""
    return rng.uniform(-length / 2.0, length / 2.0, size=(m, k))


@dataclass(frozen=True)
class AlphaMechanism:
    """X1' = alpha sin(X2 X3) + (1 - alpha) X2 + sigma eps; X2', X3' pure noise."""

    alpha: float
    sigma_eps: float

    sources = ("X2", "X3")
    targets = ("X1", "X2", "X3")

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.sigma_eps <= 0:
            raise ValueError("sigma_eps must be positive")

    def sample(self, sources: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        s = _as_matrix(sources)
        x2, x3 = s[:, 0], s[:, 1]
        noise = rng.standard_normal((s.shape[0], 3))
        x1 = self.alpha * np.sin(x2 * x3) + (1.0 - self.alpha) * x2 + self.sigma_eps * noise[:, 0]
        return np.column_stack([x1, self.sigma_eps * noise[:, 1], self.sigma_eps * noise[:, 2]])


@dataclass(frozen=True)
class PolyTerm:
    coef: float
    powers: tuple[tuple[int, int], ...]  # (source index, exponent)


@dataclass
class ConditionalGaussianPredictor:
    """Y_j ~ N(sum_k c_k prod_i x_i^{p_ik}, std_j^2): a stand-in for a trained forecaster.

    JSON form::

        {"sources": [...], "targets": [...],
         "mean": {target: [{"coef": c, "powers": {source: p, ...}}, ...]},
         "std": {target: s}}
    """

    sources: tuple[str, ...]
    targets: tuple[str, ...]
    mean: dict[str, tuple[PolyTerm, ...]]
    std: dict[str, float]

    def __post_init__(self):
        for t in self.targets:
            if t not in self.mean or t not in self.std:
                raise ValueError(f"target {t!r} needs mean terms and a std")
            if self.std[t] <= 0:
                raise ValueError(f"std for {t!r} must be positive")

    def mean_of(self, sources: np.ndarray) -> np.ndarray:
        s = _as_matrix(sources)
        out = np.zeros((s.shape[0], len(self.targets)))
        for j, t in enumerate(self.targets):
            for term in self.mean[t]:
                col = np.full(s.shape[0], term.coef)
                for i, p in term.powers:
                    col = col * s[:, i] ** p
                out[:, j] += col
        return out

    def sample(self, sources: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        mu = self.mean_of(sources)
        sd = np.array([self.std[t] for t in self.targets])
        return mu + sd * rng.standard_normal(mu.shape)

    @classmethod
    def from_dict(cls, doc: dict) -> "ConditionalGaussianPredictor":
        sources = tuple(doc["sources"])
        index = {n: i for i, n in enumerate(sources)}
        mean = {}
        for t, terms in doc["mean"].items():
            parsed = []
            for term in terms:
                unknown = set(term.get("powers", {})) - set(index)
                if unknown:
                    raise ValueError(f"mean of {t!r} uses unknown source(s) {sorted(unknown)}")
                parsed.append(PolyTerm(float(term["coef"]),
                                       tuple((index[n], int(p)) for n, p in term.get("powers", {}).items())))
            mean[t] = tuple(parsed)
        return cls(sources, tuple(doc["targets"]), mean, {t: float(s) for t, s in doc["std"].items()})

    def to_dict(self) -> dict:
        return {
            "sources": list(self.sources),
            "targets": list(self.targets),
            "mean": {t: [{"coef": term.coef,
                          "powers": {self.sources[i]: p for i, p in term.powers}}
                         for term in terms] for t, terms in self.mean.items()},
            "std": dict(self.std),
        }

    @classmethod
    def loads(cls, text: str) -> "ConditionalGaussianPredictor":
        return cls.from_dict(json.loads(text))


def continuous_hypergraph(dynamics, length: float, n_samples: int, seed: int = 0,
                          epsilon: float = 0.05, correction: str = "none",
                          targets: Sequence[int] | None = None) -> CausalHypergraph:
    """Pairwise EI edges and two-source synergy hyperedges for a sampled mechanism.

    Sources are intervened on uniformly over [-L/2, L/2]. Edge i -> j uses
    the arity-1 lift of source i; hyperedge {i, k} -> j uses the synergy
    estimator. ``epsilon`` is a bits threshold and should sit above the
    finite-sample noise floor.
    """
    rng = np.random.default_rng(seed)
    n_src = len(dynamics.sources)
    x = uniform_intervention(rng, n_samples, n_src, length)
    y = dynamics.sample(x, rng)
    tgt = range(y.shape[1]) if targets is None else targets
    edges, hyper = [], []
    single = {(i, j): mi_estimate(x[:, i], y[:, j], lift_x=1, correction=correction)
              for j in tgt for i in range(n_src)}
    for (i, j), w in sorted(single.items()):
        if w > epsilon:
            edges.append(EiEdge(i, j, w))
    for j in tgt:
        for i in range(n_src):
            for k in range(i + 1, n_src):
                pair = np.column_stack([x[:, i], x[:, k]])
                joint = mi_estimate(pair, y[:, j], lift_x=2, correction=correction)
                w = joint - (single[i, j] + single[k, j])
                if w > epsilon:
                    hyper.append(SynHyperedge((i, k), (j,), w))
    names = tuple(dynamics.sources)
    if tuple(dynamics.targets) != names:
        names = names + tuple(t for t in dynamics.targets if t not in names)
    return CausalHypergraph(names, epsilon, edges, hyper)


# ------------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class SweepConfig:
    alphas: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    sigma_eps: float = 0.05
    length: float = 2.0
    n_samples: int = 100_000
    seed: int = 0
    correction: str = "none"

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if not self.alphas or any(not 0.0 <= a <= 1.0 for a in self.alphas):
            raise ValueError("alphas must be a nonempty subset of [0, 1]")
        if self.n_samples < 10_000:
            raise ValueError("n_samples must be at least 10^4")
        if self.sigma_eps <= 0 or self.length <= 0:
            raise ValueError("sigma_eps and length must be positive")
        if self.correction not in CORRECTIONS:
            raise ValueError(f"correction must be one of {CORRECTIONS}")

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepConfig":
        doc = dict(doc)
        if "L" in doc:
            doc["length"] = doc.pop("L")
        if "M" in doc:
            doc["n_samples"] = doc.pop("M")
        return cls(**doc)


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    ei_joint: float
    ei_x2: float
    ei_x3: float
    syn: float


@dataclass
class SweepResult:
    config: SweepConfig
    rows: list[SweepRow] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def to_dict(self) -> dict:
        return {"config": asdict(self.config), "rows": [asdict(r) for r in self.rows]}

    def to_json(self, manifest: dict | None = None) -> str:
        doc = self.to_dict()
        if manifest is not None:
            doc["manifest"] = manifest
        return json.dumps(doc, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alpha", "ei_joint", "ei_x2", "ei_x3", "syn"])
        for r in self.rows:
            w.writerow([repr(r.alpha), repr(r.ei_joint), repr(r.ei_x2), repr(r.ei_x3), repr(r.syn)])
        return buf.getvalue()


def sweep_point(alpha: float, config: SweepConfig, index: int) -> SweepRow:
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, index]))
    mech = AlphaMechanism(alpha, config.sigma_eps)
    src = uniform_intervention(rng, config.n_samples, 2, config.length)
    x1 = mech.sample(src, rng)[:, 0]
    terms = synergy_terms(src[:, 0], src[:, 1], x1, config.correction)
    return SweepRow(alpha, terms.joint, terms.first, terms.second, terms.synergy)


def run_alpha_sweep(config: SweepConfig, workers: int = 1) -> SweepResult:
    """EI(X2,X3 -> X1), EI(X2 -> X1), EI(X3 -> X1) and Syn for each alpha.

    Each alpha draws from its own generator seeded by (seed, alpha index),
    so ``workers > 1`` runs points in separate processes with identical results.
    """
    idx = range(len(config.alphas))
    if workers <= 1:
        rows = [sweep_point(config.alphas[k], config, k) for k in idx]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(sweep_point, config.alphas, [config] * len(idx), idx))
    return SweepResult(config, rows)
