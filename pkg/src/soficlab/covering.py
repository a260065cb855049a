"""Hamming-average metrics and covering/packing numbers.

Covering uses closed balls (distance <= delta); packing uses strict
separation (distance > delta). The standard chain inequalities
cov_{delta/2} >= pack_delta >= cov_delta then hold verbatim at any finite
scale, boundary ties included. Exact solvers are branch-and-bound and run
under explicit instance-size budgets; greedy variants scale further and are
always valid one-sided bounds.

Solvers come in two layers: *_matrix functions take explicit distance
matrices (so non-Hamming metrics like the pair average 0.5 dX + 0.5 dY plug
in directly), and the config-level wrappers compute normalized Hamming
distances first.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .randomness import stream

COV_EXACT_BUDGET = 4096
PACK_EXACT_BUDGET = 512
COV_EPS_EXACT_BUDGET = 24
PACK_EPS_EXACT_BUDGET = 16


def hamming_distance(x, y) -> float:
    a = np.asarray(x)
    b = np.asarray(y)
    if a.shape != b.shape:
        raise ValueError("configurations must have equal length")
    return float((a != b).mean())


def pairwise_hamming(a: np.ndarray, b: Optional[np.ndarray] = None, block: int = 256) -> np.ndarray:
    """Normalized Hamming distances between rows of a and rows of b."""
    a = np.asarray(a)
    b = a if b is None else np.asarray(b)
    out = np.empty((a.shape[0], b.shape[0]))
    for lo in range(0, a.shape[0], block):
        hi = min(lo + block, a.shape[0])
        out[lo:hi] = (a[lo:hi, None, :] != b[None, :, :]).mean(axis=2)
    return out


def _checksum(*parts) -> str:
    h = hashlib.blake2b(digest_size=6)
    for part in parts:
        if isinstance(part, np.ndarray):
            h.update(np.ascontiguousarray(part).tobytes())
        else:
            h.update(repr(part).encode())
        h.update(b"\x00")
    return h.hexdigest()


@dataclass(frozen=True)
class CovResult:
    value: int
    method: str  # "exact" | "greedy"
    checksum: str

    def to_json(self) -> dict:
        return {"value": self.value, "method": self.method, "checksum": self.checksum}


class ModelMeasure:
    """A measure on X^V: explicit atoms with weights, or a seeded sampler."""

    def __init__(
        self,
        vertices: int,
        support: Optional[np.ndarray] = None,
        weights: Optional[np.ndarray] = None,
        sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None,
    ):
        if (support is None) == (sampler is None):
            raise ValueError("exactly one of support and sampler is required")
        self.vertices = vertices
        self.sampler = sampler
        if support is not None:
            sup = np.ascontiguousarray(support, dtype=np.uint8)
            if sup.ndim != 2 or sup.shape[1] != vertices:
                raise ValueError("support must be a (k, |V|) array")
            if np.unique(sup, axis=0).shape[0] != sup.shape[0]:
                raise ValueError("support entries must be distinct")
            w = (
                np.full(sup.shape[0], 1.0 / sup.shape[0])
                if weights is None
                else np.asarray(weights, dtype=np.float64)
            )
            if w.shape != (sup.shape[0],) or np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-12:
                raise ValueError("weights must be nonnegative and sum to 1")
            self.support: Optional[np.ndarray] = sup
            self.weights: Optional[np.ndarray] = w
        else:
            self.support = None
            self.weights = None

    @property
    def explicit(self) -> bool:
        return self.support is not None

    @staticmethod
    def from_support(support, weights=None) -> "ModelMeasure":
        sup = np.ascontiguousarray(support, dtype=np.uint8)
        return ModelMeasure(sup.shape[1], support=sup, weights=weights)

    @staticmethod
    def from_samples(samples) -> "ModelMeasure":
        """Empirical measure of a sample list; duplicate rows merge."""
        arr = np.ascontiguousarray(samples, dtype=np.uint8)
        uniq, counts = np.unique(arr, axis=0, return_counts=True)
        return ModelMeasure(arr.shape[1], support=uniq, weights=counts / counts.sum())

    @staticmethod
    def from_sampler(vertices: int, sampler: Callable[[np.random.Generator, int], np.ndarray]) -> "ModelMeasure":
        return ModelMeasure(vertices, sampler=sampler)

    @staticmethod
    def point_mass(config) -> "ModelMeasure":
        arr = np.ascontiguousarray(config, dtype=np.uint8)
        return ModelMeasure(arr.size, support=arr[None, :], weights=np.ones(1))

    def require_explicit(self, op: str) -> Tuple[np.ndarray, np.ndarray]:
        if self.support is None or self.weights is None:
            raise ValueError(f"{op} needs an explicit-support measure, got a sampler")
        return self.support, self.weights

    def sample(self, gen: np.random.Generator, count: int) -> np.ndarray:
        if self.sampler is not None:
            out = np.ascontiguousarray(self.sampler(gen, count), dtype=np.uint8)
            if out.shape != (count, self.vertices):
                raise ValueError("sampler returned a wrong-shape block")
            return out
        cdf = np.cumsum(self.weights)
        cdf[-1] = 1.0
        idx = np.searchsorted(cdf, gen.random(count), side="right")
        return self.support[idx]


# -- exact set cover ---------------------------------------------------------------


def _greedy_cover_masks(masks: List[int], universe: int) -> int:
    uncovered = universe
    picks = 0
    while uncovered:
        best_gain = -1
        best_i = -1
        for i, m in enumerate(masks):
            gain = (m & uncovered).bit_count()
            if gain > best_gain:
                best_gain = gain
                best_i = i
        if best_gain <= 0:
            raise ValueError("points exist that no candidate ball covers")
        uncovered &= ~masks[best_i]
        picks += 1
    return picks


def _min_cover_masks(masks: List[int], universe: int) -> int:
    """Exact minimum set cover by branch and bound on an uncovered point."""
    if universe == 0:
        return 0
    live = [m & universe for m in masks if m & universe]
    if len(live) <= 1024:  # dominated-candidate removal is quadratic
        live.sort(key=lambda m: -m.bit_count())
        kept: List[int] = []
        for m in live:
            if not any(m | k == k for k in kept):
                kept.append(m)
        live = kept
    if not live:
        raise ValueError("points exist that no candidate ball covers")
    best = _greedy_cover_masks(live, universe)
    max_ball = max(m.bit_count() for m in live)

    def dfs(uncovered: int, used: int) -> None:
        nonlocal best
        if uncovered == 0:
            best = min(best, used)
            return
        if used + -(-uncovered.bit_count() // max_ball) >= best:
            return
        point = uncovered & -uncovered
        options = sorted(
            (m for m in live if m & point),
            key=lambda m: -(m & uncovered).bit_count(),
        )
        for m in options:
            dfs(uncovered & ~m, used + 1)

    dfs(universe, 0)
    return best


def _mis_branch(adj: List[int], pool: int, current: int, best: List[int]) -> None:
    if current + pool.bit_count() <= best[0]:
        return
    if pool == 0:
        best[0] = max(best[0], current)
        return
    # branch on a maximum-degree vertex: taking it removes its neighbourhood
    v = -1
    vdeg = -1
    p = pool
    while p:
        bit = p & -p
        i = bit.bit_length() - 1
        deg = (adj[i] & pool).bit_count()
        if deg > vdeg:
            vdeg = deg
            v = i
        p ^= bit
    if vdeg <= 1:
        # pool is a union of isolated vertices and disjoint edges
        edges = 0
        p = pool
        while p:
            bit = p & -p
            i = bit.bit_length() - 1
            if adj[i] & pool:
                edges += 1
            p ^= bit
        best[0] = max(best[0], current + pool.bit_count() - edges // 2)
        return
    take = pool & ~(1 << v) & ~adj[v]
    _mis_branch(adj, take, current + 1, best)
    _mis_branch(adj, pool & ~(1 << v), current, best)


def _max_separated_exact(dist: np.ndarray, delta: float) -> int:
    """Maximum strictly delta-separated subset = MIS of the <=delta graph."""
    k = dist.shape[0]
    conflict = dist <= delta
    adj = []
    for i in range(k):
        row = 0
        for j in range(k):
            if j != i and conflict[i, j]:
                row |= 1 << j
        adj.append(row)
    best = [0]
    _mis_branch(adj, (1 << k) - 1, 0, best)
    return best[0]


# -- set quantities ----------------------------------------------------------------


def cov_delta_matrix(dist: np.ndarray, delta: float, method: str = "auto", exact_budget: int = COV_EXACT_BUDGET) -> CovResult:
    """min |F| with closed delta-balls around F covering all points.

    dist is square: dist[i, j] between candidate center i and point j.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    m = dist.shape[0]
    tag = _checksum(np.round(dist, 12), delta)
    cover = dist <= delta
    masks = [int.from_bytes(np.packbits(cover[i]).tobytes(), "big") for i in range(m)]
    padded = (8 - dist.shape[1] % 8) % 8
    universe = ((1 << dist.shape[1]) - 1) << padded
    if method == "exact" or (method == "auto" and m <= exact_budget):
        return CovResult(_min_cover_masks(masks, universe), "exact", tag)
    return CovResult(_greedy_cover_masks(masks, universe), "greedy", tag)


def cov_delta(points, delta: float, method: str = "auto", exact_budget: int = COV_EXACT_BUDGET) -> CovResult:
    return cov_delta_matrix(pairwise_hamming(np.asarray(points, dtype=np.uint8)), delta, method, exact_budget)


def pack_delta_matrix(dist: np.ndarray, delta: float, method: str = "auto", exact_budget: int = PACK_EXACT_BUDGET) -> CovResult:
    """Largest subset with pairwise distance strictly greater than delta."""
    if delta <= 0:
        raise ValueError("delta must be > 0")
    k = dist.shape[0]
    tag = _checksum(np.round(dist, 12), delta)
    if method == "exact" or (method == "auto" and k <= exact_budget):
        return CovResult(_max_separated_exact(dist, delta), "exact", tag)
    kept: List[int] = []
    for i in range(k):
        if all(dist[i, j] > delta for j in kept):
            kept.append(i)
    return CovResult(len(kept), "greedy", tag)


def pack_delta(points, delta: float, method: str = "auto", exact_budget: int = PACK_EXACT_BUDGET) -> CovResult:
    return pack_delta_matrix(pairwise_hamming(np.asarray(points, dtype=np.uint8)), delta, method, exact_budget)


# -- measure quantities ------------------------------------------------------------


def _partial_cover_exact(cover: np.ndarray, weights: np.ndarray, need: float) -> int:
    """Smallest center count whose covered atoms carry mass strictly > need.

    Iterative deepening over cover size with a union-bound prune.
    """
    c, k = cover.shape
    masses = cover @ weights
    order = np.argsort(-masses, kind="stable")
    masks = []
    seen = set()
    for i in order:
        m = 0
        for j in range(k):
            if cover[i, j]:
                m |= 1 << j
        if m not in seen:
            seen.add(m)
            masks.append(m)
    # dominated removal: keep only masks not contained in an earlier (heavier) one
    kept: List[int] = []
    for m in masks:
        if not any(m | other == other for other in kept):
            kept.append(m)
    masks = kept
    mass_of = {m: sum(weights[j] for j in range(k) if m >> j & 1) for m in masks}
    tops = sorted((mass_of[m] for m in masks), reverse=True)
    if not masks:
        raise ValueError("no candidate center covers any atom")

    def covered_mass(m: int) -> float:
        return sum(weights[j] for j in range(k) if m >> j & 1)

    for size in range(1, len(masks) + 1):

        def dfs(start: int, chosen: int, depth: int) -> bool:
            got = covered_mass(chosen)
            if got > need:
                return True
            slots = size - depth
            if slots == 0:
                return False
            if got + sum(tops[:slots]) <= need:
                return False
            for i in range(start, len(masks)):
                if dfs(i + 1, chosen | masks[i], depth + 1):
                    return True
            return False

        found = dfs(0, 0, 0)
        if found:
            return size
    raise ValueError("mass target unreachable: total covered mass <= 1 - eps")


def cov_eps_delta_matrix(
    dist: np.ndarray,
    weights: np.ndarray,
    eps: float,
    delta: float,
    method: str = "auto",
    exact_budget: int = COV_EPS_EXACT_BUDGET,
) -> CovResult:
    """min |F| with nu(closed delta-neighbourhood of F) > 1 - eps.

    dist is (centers, atoms); weights are the atom masses.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0,1)")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    w = np.asarray(weights, dtype=np.float64)
    cover = dist <= delta
    tag = _checksum(np.round(dist, 12), np.round(w, 15), eps, delta)
    need = 1.0 - eps
    if method == "exact" or (method == "auto" and w.size <= exact_budget):
        return CovResult(_partial_cover_exact(cover, w, need), "exact", tag)
    covered = np.zeros(w.size, dtype=bool)
    picks = 0
    while float(w[covered].sum()) <= need:
        gains = (cover & ~covered[None, :]) @ w
        i = int(np.argmax(gains))
        if gains[i] <= 0:
            raise ValueError("mass target unreachable: no center adds coverage")
        covered |= cover[i]
        picks += 1
    return CovResult(picks, "greedy", tag)


def cov_eps_delta(
    nu: ModelMeasure,
    eps: float,
    delta: float,
    centers: Optional[np.ndarray] = None,
    method: str = "auto",
    exact_budget: int = COV_EPS_EXACT_BUDGET,
) -> CovResult:
    """Covering number of a measure; centers default to its own support.

    Pass an explicit center pool (e.g. the full configuration space at toy
    sizes) to realize the ambient-center definition exactly.
    """
    support, weights = nu.require_explicit("cov_eps_delta")
    pool = support if centers is None else np.ascontiguousarray(centers, dtype=np.uint8)
    return cov_eps_delta_matrix(pairwise_hamming(pool, support), weights, eps, delta, method, exact_budget)


def pack_eps_delta_matrix(
    dist: np.ndarray,
    weights: np.ndarray,
    eps: float,
    delta: float,
    exact_budget: int = PACK_EPS_EXACT_BUDGET,
) -> CovResult:
    """min over atom subsets of mass > 1 - eps of the max separated subset.

    Exact only, and exponential in the atom count: full DP over subsets.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0,1)")
    w = np.asarray(weights, dtype=np.float64)
    k = w.size
    if k > exact_budget:
        raise ValueError(f"pack_eps_delta is exact-only and capped at {exact_budget} atoms")
    tag = _checksum(np.round(dist, 12), np.round(w, 15), eps, delta)
    conflict = dist <= delta
    adj = []
    for i in range(k):
        row = 0
        for j in range(k):
            if j != i and conflict[i, j]:
                row |= 1 << j
        adj.append(row)
    size = 1 << k
    mis = np.zeros(size, dtype=np.int32)
    for m in range(1, size):
        bit = m & -m
        v = bit.bit_length() - 1
        skip = mis[m ^ bit]
        take = 1 + mis[m & ~bit & ~adj[v]]
        mis[m] = max(skip, take)
    mass = np.zeros(size)
    for m in range(1, size):
        bit = m & -m
        mass[m] = mass[m ^ bit] + w[bit.bit_length() - 1]
    eligible = mass > 1.0 - eps
    if not eligible.any():
        raise ValueError("no atom subset reaches mass 1 - eps")
    return CovResult(int(mis[eligible].min()), "exact", tag)


def pack_eps_delta(nu: ModelMeasure, eps: float, delta: float, exact_budget: int = PACK_EPS_EXACT_BUDGET) -> CovResult:
    support, weights = nu.require_explicit("pack_eps_delta")
    return pack_eps_delta_matrix(pairwise_hamming(support), weights, eps, delta, exact_budget)


def cov_eps(nu: ModelMeasure, eps: float) -> CovResult:
    """min |F| with nu(F) > 1 - eps: shortest prefix of atoms by weight."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0,1)")
    support, weights = nu.require_explicit("cov_eps")
    order = np.argsort(-weights, kind="stable")
    tag = _checksum(support, np.round(weights, 15), eps)
    total = 0.0
    for count, i in enumerate(order, start=1):
        total += float(weights[i])
        if total > 1.0 - eps:
            return CovResult(count, "exact", tag)
    raise ValueError("weights sum below the 1 - eps target")


def bernoulli_cov_eps(weights: Sequence[float], vertices: int, eps: float) -> Tuple[Optional[int], float]:
    """cov_eps of the product measure weights^V, exactly, by letter type.

    Atoms of equal letter counts share a probability, so the minimal set of
    mass > 1 - eps is a run of whole types in decreasing atom-probability
    order plus part of one deciding type. Returns (count, log_count_nats);
    count is None when it exceeds exact integer range (the log is always
    finite and computed in log space).
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0,1)")
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or np.any(w <= 0) or abs(float(w.sum()) - 1.0) > 1e-9:
        raise ValueError("weights must be strictly positive and sum to 1")
    log_w = np.log(w)
    lg = math.lgamma

    def comps(total: int, parts: int):
        if parts == 1:
            yield (total,)
            return
        for head in range(total + 1):
            for rest in comps(total - head, parts - 1):
                yield (head,) + rest

    types = []
    for comp in comps(vertices, w.size):
        log_p = float(np.dot(comp, log_w))
        log_size = lg(vertices + 1) - sum(lg(c + 1) for c in comp)
        types.append((log_p, log_size, comp))
    types.sort(key=lambda t: (-t[0], t[2]))

    need = 1.0 - eps
    cum = 0.0
    log_counts: List[float] = []
    exact: Optional[int] = 0
    for log_p, log_size, comp in types:
        mass = math.exp(log_p + log_size)
        size_exact = None
        if exact is not None:
            size_exact = 1
            rem = vertices
            for c in comp[:-1]:
                size_exact *= math.comb(rem, c)
                rem -= c
        if cum + mass > need:
            remainder = need - cum
            if log_p > -700:
                m = int(math.floor(remainder / math.exp(log_p))) + 1
                if size_exact is not None:
                    m = min(m, size_exact)
                log_counts.append(math.log(m))
                if exact is not None:
                    exact += m
            else:
                # counts too large for exact integers; log-space only
                log_counts.append(max(math.log(remainder) - log_p, 0.0))
                exact = None
            return exact, _logsumexp(log_counts)
        cum += mass
        log_counts.append(log_size)
        if exact is not None and size_exact is not None:
            exact += size_exact
    raise ValueError("total mass failed to reach 1 - eps")


# -- ball volumes ------------------------------------------------------------------


def _logsumexp(terms: Sequence[float]) -> float:
    top = max(terms)
    return top + math.log(sum(math.exp(t - top) for t in terms))


def hamming_ball_volume(vertices: int, delta: float, base: int) -> float:
    """log |B_delta(x)| in X^V under normalized Hamming, in nats."""
    if not 0 <= delta <= 1:
        raise ValueError("delta must lie in [0,1]")
    if base < 2:
        raise ValueError("alphabet must have at least 2 symbols")
    j_max = int(math.floor(delta * vertices + 1e-12))
    if j_max >= vertices:
        return vertices * math.log(base)
    lg = math.lgamma
    terms = [
        lg(vertices + 1) - lg(j + 1) - lg(vertices - j + 1) + j * math.log(base - 1)
        for j in range(j_max + 1)
    ]
    return _logsumexp(terms)


def largest_small_ball_delta(eta: float, vertices: int, base: int) -> float:
    """Largest delta = j/|V| with log-ball-volume <= eta |V|.

    The volume is a step function of delta, so the cumulative scan is exact
    (sharper than bisection between grid points).
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    lg = math.lgamma
    log_sum = 0.0  # j = 0 term: log C(n,0) = 0
    best = 0
    for j in range(1, vertices + 1):
        term = lg(vertices + 1) - lg(j + 1) - lg(vertices - j + 1) + j * math.log(base - 1)
        top = max(log_sum, term)
        log_sum = top + math.log(math.exp(log_sum - top) + math.exp(term - top))
        if log_sum <= eta * vertices:
            best = j
        else:
            break
    return best / vertices


# -- couplings ---------------------------------------------------------------------


def pair_configs(xs: np.ndarray, ys: np.ndarray, base_y: int) -> np.ndarray:
    """Combine configuration blocks into pair-alphabet configurations
    (row-major symbol order, matching product_process)."""
    return (np.asarray(xs, dtype=np.int64) * base_y + np.asarray(ys, dtype=np.int64)).astype(np.uint8)


def random_coupling(seed: int, mu_weights: np.ndarray, nu_weights: np.ndarray, label: str = "coupling") -> np.ndarray:
    """A random exact coupling matrix via the northwest-corner rule on
    shuffled atom orders; marginals are exact up to float subtraction."""
    gen = stream(seed, label)
    wx = np.asarray(mu_weights, dtype=np.float64)
    wy = np.asarray(nu_weights, dtype=np.float64)
    ox = gen.permutation(wx.size)
    oy = gen.permutation(wy.size)
    plan = np.zeros((wx.size, wy.size))
    rx = wx[ox].copy()
    ry = wy[oy].copy()
    i = j = 0
    while i < rx.size and j < ry.size:
        move = min(rx[i], ry[j])
        plan[ox[i], oy[j]] = move
        rx[i] -= move
        ry[j] -= move
        if rx[i] <= 1e-15:
            i += 1
        else:
            j += 1
    return plan / plan.sum()


__all__ = [
    "CovResult",
    "ModelMeasure",
    "hamming_distance",
    "pairwise_hamming",
    "cov_delta",
    "cov_delta_matrix",
    "pack_delta",
    "pack_delta_matrix",
    "cov_eps_delta",
    "cov_eps_delta_matrix",
    "pack_eps_delta",
    "pack_eps_delta_matrix",
    "cov_eps",
    "bernoulli_cov_eps",
    "hamming_ball_volume",
    "largest_small_ball_delta",
    "pair_configs",
    "random_coupling",
]
