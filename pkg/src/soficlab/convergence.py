"""Finite-n diagnostics for local weak*, quenched, and doubly-quenched
convergence of measures on model spaces, plus the distribution-on-measures
statistics (dispersion, barycentre) and the vertex-pair statistic.

All "with high probability" statements are reported as exact fractions; the
experiment layer applies pass thresholds. Sampling is chunk-free and fully
determined by the seed, so results are independent of thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .covering import ModelMeasure, pair_configs
from .groups import Element, Window
from .models import _good_mask, adjoint_shift, counts_over_elements
from .processes import MarginalOracle, pattern_count, product_process, tv_distance
from .randomness import stream
from .sofic import SoficMap

EXACT_SUPPORT_CAP = 100_000


def _atoms_of(nu: ModelMeasure, samples: int, seed: int, label: str) -> Tuple[np.ndarray, np.ndarray]:
    """Explicit (configs, weights) view of a measure: its support when
    explicit and small enough, else a seeded sample block."""
    if nu.explicit and nu.support.shape[0] <= EXACT_SUPPORT_CAP:
        return nu.support, nu.weights
    if samples < 1:
        raise ValueError("sampler-backed measure needs a positive sample count")
    block = nu.sample(stream(seed, label), samples)
    return block, np.full(samples, 1.0 / samples)


def _vertex_code_matrix(sigma: SoficMap, configs: np.ndarray, window: Window, base: int) -> np.ndarray:
    """Pattern code of every (atom, vertex) pair; shape (k, |V|)."""
    perms = sigma.window_perms(window)
    vals = np.ascontiguousarray(configs, dtype=np.int64)
    codes = np.zeros(vals.shape, dtype=np.int64)
    for i in range(perms.shape[0]):
        codes = codes * base + vals[:, perms[i]]
    return codes


def lw_defect(
    sigma: SoficMap,
    nu: ModelMeasure,
    mu: MarginalOracle,
    window: Window,
    eps: float,
    samples: int = 0,
    seed: int = 0,
) -> float:
    """Fraction of vertices whose local pushforward marginal is >= eps away
    from mu_F in total variation."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    base = mu.alphabet.size
    target = mu.marginal_elems(window.elements)
    npat = pattern_count(base, len(window))
    configs, weights = _atoms_of(nu, samples, seed, "lw")
    codes = _vertex_code_matrix(sigma, configs, window, base)
    n = sigma.n
    flat = (np.arange(n, dtype=np.int64)[None, :] * npat + codes).ravel()
    hist = np.bincount(flat, weights=np.repeat(weights, n), minlength=n * npat).reshape(n, npat)
    tvs = 0.5 * np.abs(hist - target[None, :]).sum(axis=1)
    return float((tvs >= eps).mean())


def quenched_defect(
    sigma: SoficMap,
    nu: ModelMeasure,
    mu: MarginalOracle,
    window: Window,
    eps: float,
    samples: int = 0,
    seed: int = 0,
) -> float:
    """1 - nu(Omega_mu(F, eps, sigma)): exact on explicit supports, Monte
    Carlo otherwise."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    base = mu.alphabet.size
    target = mu.marginal_elems(window.elements)
    npat = pattern_count(base, len(window))
    perms = sigma.window_perms(window)
    configs, weights = _atoms_of(nu, samples, seed, "q")
    good = _good_mask(np.ascontiguousarray(configs, dtype=np.int64), perms, base, npat, target, sigma.n, eps)
    return float(weights[~good].sum())


def dq_defect(
    sigma: SoficMap,
    nu: ModelMeasure,
    mu: MarginalOracle,
    window: Window,
    eps: float,
    samples: int = 0,
    seed: int = 0,
    pair_cap: int = 4096,
) -> float:
    """Quenched defect of nu x nu against mu x mu on the pair alphabet.

    Explicit supports with at most pair_cap ordered pairs are summed exactly;
    otherwise independent pairs are drawn from two seeded streams.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    pair = product_process(mu, mu)
    base = pair.alphabet.size
    target = pair.marginal_elems(window.elements)
    npat = pattern_count(base, len(window))
    perms = sigma.window_perms(window)
    if nu.explicit and nu.support.shape[0] ** 2 <= pair_cap:
        k = nu.support.shape[0]
        left = np.repeat(np.arange(k), k)
        right = np.tile(np.arange(k), k)
        block = pair_configs(nu.support[left], nu.support[right], mu.alphabet.size).astype(np.int64)
        weights = (nu.weights[left] * nu.weights[right])
    else:
        if samples < 1:
            raise ValueError("need a positive sample count for the pair draw")
        xs = nu.sample(stream(seed, "dq-left"), samples)
        ys = nu.sample(stream(seed, "dq-right"), samples)
        block = pair_configs(xs, ys, mu.alphabet.size).astype(np.int64)
        weights = np.full(samples, 1.0 / samples)
    good = _good_mask(block, perms, base, npat, target, sigma.n, eps)
    return float(weights[~good].sum())


@dataclass
class DispersionReport:
    """Single-linkage clustering of empirical F-marginals across atoms."""

    masses: List[float]
    centroids: List[np.ndarray]
    barycentre: np.ndarray
    barycentre_tv: Optional[float] = None
    threshold: float = 0.05

    @property
    def cluster_count(self) -> int:
        return len(self.masses)

    def centroid_tvs(self, target: np.ndarray) -> List[float]:
        return [tv_distance(c, target) for c in self.centroids]

    def to_json(self) -> dict:
        out = {
            "clusters": [
                {"mass": m, "centroid": c.tolist()} for m, c in zip(self.masses, self.centroids)
            ],
            "barycentre": self.barycentre.tolist(),
            "threshold": self.threshold,
        }
        if self.barycentre_tv is not None:
            out["barycentre_tv"] = self.barycentre_tv
        return out


def dispersion(
    sigma: SoficMap,
    nu: ModelMeasure,
    window: Window,
    base: int,
    samples: int = 0,
    seed: int = 0,
    threshold: float = 0.05,
    target: Optional[np.ndarray] = None,
) -> DispersionReport:
    """Cluster the empirical F-marginals of nu's atoms (exact weights on
    explicit supports) by single linkage at the given TV threshold."""
    configs, weights = _atoms_of(nu, samples, seed, "dispersion")
    k = configs.shape[0]
    npat = pattern_count(base, len(window))
    marginals = np.empty((k, npat))
    for i in range(k):
        counts = counts_over_elements(sigma, configs[i], window.elements, base)
        marginals[i] = counts / float(sigma.n)
    # single linkage: connected components of the TV < threshold graph
    parent = list(range(k))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(k):
        for j in range(i + 1, k):
            if 0.5 * float(np.abs(marginals[i] - marginals[j]).sum()) < threshold:
                parent[find(i)] = find(j)
    groups: dict = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    clusters = []
    for members in groups.values():
        mass = float(weights[members].sum())
        centroid = (weights[members, None] * marginals[members]).sum(axis=0) / mass
        clusters.append((mass, centroid))
    clusters.sort(key=lambda mc: -mc[0])
    barycentre = (weights[:, None] * marginals).sum(axis=0)
    tv = tv_distance(barycentre, target) if target is not None else None
    return DispersionReport(
        masses=[m for m, _ in clusters],
        centroids=[c for _, c in clusters],
        barycentre=barycentre,
        barycentre_tv=tv,
        threshold=threshold,
    )


def pair_vertex_stat(
    sigma: SoficMap,
    nu: ModelMeasure,
    mu: MarginalOracle,
    window: Window,
    eps: float,
    vertex_pairs: int = 256,
    samples: int = 0,
    seed: int = 0,
) -> float:
    """Fraction of sampled vertex pairs (v, v') whose joint pushforward on
    F x F is >= eps away from mu_F x mu_F in total variation."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    base = mu.alphabet.size
    mu_f = mu.marginal_elems(window.elements)
    joint_target = np.outer(mu_f, mu_f).ravel()
    npat = mu_f.size
    configs, weights = _atoms_of(nu, samples, seed, "pair-vertex")
    codes = _vertex_code_matrix(sigma, configs, window, base)
    gen = stream(seed, "pair-vertex-choice")
    vs = gen.integers(0, sigma.n, size=vertex_pairs)
    ws = gen.integers(0, sigma.n, size=vertex_pairs)
    bad = 0
    for v, w in zip(vs, ws):
        joint_codes = codes[:, v] * npat + codes[:, w]
        joint = np.bincount(joint_codes, weights=weights, minlength=npat * npat)
        if 0.5 * float(np.abs(joint - joint_target).sum()) >= eps:
            bad += 1
    return bad / vertex_pairs


def models_to_measure(configs: Sequence[np.ndarray]) -> ModelMeasure:
    """The uniform measure (1/k) sum of point masses at the given
    configurations; duplicates merge into heavier atoms."""
    block = np.ascontiguousarray(configs, dtype=np.uint8)
    if block.ndim != 2 or block.shape[0] < 1:
        raise ValueError("need at least one configuration")
    return ModelMeasure.from_samples(block)


def h_average(st: SoficMap, theta: ModelMeasure, elements: Sequence[Element]) -> ModelMeasure:
    """(1/|E|) sum over h in E of the adjoint pushforward of theta."""
    support, weights = theta.require_explicit("h_average")
    elems = list(elements)
    if not elems:
        raise ValueError("need at least one averaging element")
    shifted = []
    for h in elems:
        for row in support:
            shifted.append(adjoint_shift(st, h, row))
    block = np.asarray(shifted, dtype=np.uint8)
    big_weights = np.tile(weights, len(elems)) / len(elems)
    uniq, inverse = np.unique(block, axis=0, return_inverse=True)
    merged = np.zeros(uniq.shape[0])
    np.add.at(merged, np.asarray(inverse).reshape(-1), big_weights)
    return ModelMeasure(st.n, support=uniq, weights=merged)


@dataclass
class ConvergenceReport:
    window_radius: int
    eps: float
    lw: float
    quenched: float
    dq: float
    dispersion_clusters: int
    dispersion_report: Optional[DispersionReport] = field(default=None, repr=False)

    def to_json(self) -> dict:
        out = {
            "F_radius": self.window_radius,
            "epsilon": self.eps,
            "lw_defect": self.lw,
            "q_defect": self.quenched,
            "dq_defect": self.dq,
            "dispersion_clusters": self.dispersion_clusters,
        }
        if self.dispersion_report is not None:
            out["dispersion"] = self.dispersion_report.to_json()
        return out


def convergence_report(
    sigma: SoficMap,
    nu: ModelMeasure,
    mu: MarginalOracle,
    radius: int,
    eps: float,
    samples: int = 0,
    seed: int = 0,
    threshold: float = 0.05,
    with_dispersion: bool = True,
) -> ConvergenceReport:
    window = Window(sigma.group, sigma.group.ball(radius))
    lw = lw_defect(sigma, nu, mu, window, eps, samples, seed)
    q = quenched_defect(sigma, nu, mu, window, eps, samples, seed)
    dq = dq_defect(sigma, nu, mu, window, eps, samples, seed)
    disp = None
    if with_dispersion:
        disp = dispersion(
            sigma,
            nu,
            window,
            mu.alphabet.size,
            samples,
            seed,
            threshold,
            target=mu.marginal_elems(window.elements),
        )
    return ConvergenceReport(
        window_radius=radius,
        eps=eps,
        lw=lw,
        quenched=q,
        dq=dq,
        dispersion_clusters=disp.cluster_count if disp is not None else 0,
        dispersion_report=disp,
    )


__all__ = [
    "DispersionReport",
    "ConvergenceReport",
    "lw_defect",
    "quenched_defect",
    "dq_defect",
    "dispersion",
    "pair_vertex_stat",
    "models_to_measure",
    "h_average",
    "convergence_report",
    "EXACT_SUPPORT_CAP",
]
