"""Pullback names, empirical distributions, and good-model combinatorics.

Configurations are arrays of alphabet indices over the vertex set of a sofic
approximation. The empirical distribution of a configuration counts pullback
patterns over all vertices; a configuration is an (F, eps)-good model when
that empirical F-marginal is within TV distance strictly less than eps of the
process marginal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .groups import Element, Window
from .processes import (
    Alphabet,
    MarginalOracle,
    PatternDistribution,
    pattern_count,
    tv_distance,
)
from .randomness import stream
from .sofic import SoficMap

ENUM_BUDGET = 1 << 26
ENUM_BLOCK = 1 << 14


class BudgetExceededError(RuntimeError):
    def __init__(self, required: int, budget: int):
        super().__init__(
            f"exhaustive scan needs {required} configurations, over the budget of {budget}; "
            "raise the budget or use count_good_models_mc"
        )
        self.required = required
        self.budget = budget


@dataclass(frozen=True)
class Configuration:
    """A point of X^V attached to its sofic approximation."""

    sigma: SoficMap
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.ascontiguousarray(self.values, dtype=np.uint8)
        if vals.shape != (self.sigma.n,):
            raise ValueError("configuration length must equal the vertex count")
        object.__setattr__(self, "values", vals)


def _as_values(x) -> np.ndarray:
    if isinstance(x, Configuration):
        return x.values
    return np.ascontiguousarray(x, dtype=np.uint8)


def pattern_codes(sigma: SoficMap, x, window: Window, base: int) -> np.ndarray:
    """Per-vertex pattern code of the F-restricted pullback name.

    Code of vertex v is sum_i x[sigma^{f_i}(v)] * base^(m-1-i), matching the
    pattern indexing of PatternDistribution.
    """
    vals = _as_values(x)
    perms = sigma.window_perms(window)
    m = perms.shape[0]
    codes = np.zeros(sigma.n, dtype=np.int64)
    for i in range(m):
        codes = codes * base + vals[perms[i]]
    return codes


def pullback_name(sigma: SoficMap, x, v: int, window: Window) -> Tuple[int, ...]:
    vals = _as_values(x)
    if not (0 <= v < sigma.n):
        raise ValueError(f"vertex {v} out of range for |V| = {sigma.n}")
    return tuple(int(vals[sigma.evaluate(g, v)]) for g in window)


@dataclass
class EmpiricalDistribution:
    """Exact pattern counts of a configuration over a window."""

    window: Window
    alphabet: Alphabet
    counts: np.ndarray
    vertices: int

    @property
    def probs(self) -> np.ndarray:
        return self.counts / float(self.vertices)

    def tv_to(self, probs: np.ndarray) -> float:
        return tv_distance(self.probs, probs)

    def pattern_distribution(self) -> PatternDistribution:
        return PatternDistribution(self.window, self.alphabet, self.probs)


def counts_over_elements(sigma: SoficMap, x, elements: Sequence[Element], base: int) -> np.ndarray:
    """Pattern counts of ((x at sigma^g(v)) for g in elements) over all v.

    The element tuple need not contain the identity; this is the workhorse
    behind empirical distributions and the shifted empiricals in the
    approximate-invariance bound.
    """
    vals = _as_values(x)
    total = pattern_count(base, len(elements))
    codes = np.zeros(sigma.n, dtype=np.int64)
    for g in elements:
        codes = codes * base + vals[sigma.perm_of(g)]
    return np.bincount(codes, minlength=total)


def empirical_distribution(sigma: SoficMap, x, window: Window, alphabet: Alphabet) -> EmpiricalDistribution:
    counts = counts_over_elements(sigma, x, window.elements, alphabet.size)
    return EmpiricalDistribution(window, alphabet, counts, sigma.n)


def is_good_model(sigma: SoficMap, x, mu: MarginalOracle, window: Window, eps: float) -> bool:
    if eps <= 0:
        raise ValueError("eps must be positive")
    emp = empirical_distribution(sigma, x, window, mu.alphabet)
    return emp.tv_to(mu.marginal_elems(window.elements)) < eps


def _exp_nats_to_int(log_value: float) -> int:
    """Round exp(log_value) to an integer without float overflow."""
    if log_value == float("-inf"):
        return 0
    if log_value <= 700.0:
        return int(round(math.exp(log_value)))
    bits = log_value / math.log(2.0)
    ip = int(bits)
    mant = 2.0 ** (bits - ip)
    return int(mant * (1 << 62)) << (ip - 62)


@dataclass
class GoodModelCount:
    count: int
    log_count_nats: float
    configs: Optional[np.ndarray] = None  # (count, |V|) uint8 when kept
    standard_error: Optional[float] = None

    def to_json(self) -> dict:
        log = self.log_count_nats
        out = {"count": self.count, "log_count_nats": log if math.isfinite(log) else "-inf"}
        if self.standard_error is not None:
            out["standard_error"] = self.standard_error
        return out


def _scan_blocks(n: int, base: int) -> Iterator[Tuple[int, np.ndarray]]:
    total = base**n
    powers = base ** np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, ENUM_BLOCK):
        idx = np.arange(start, min(start + ENUM_BLOCK, total), dtype=np.int64)
        yield start, (idx[:, None] // powers[None, :]) % base


def _good_mask(
    block: np.ndarray,
    perms: np.ndarray,
    base: int,
    npat: int,
    target: np.ndarray,
    n: int,
    eps: float,
) -> np.ndarray:
    """Strict TV test per row, sub-sliced to bound the histogram and code
    matrix footprints."""
    rows = block.shape[0]
    step = max(1, (1 << 22) // max(npat, n))
    good = np.empty(rows, dtype=bool)
    for lo in range(0, rows, step):
        sub = block[lo : lo + step]
        b = sub.shape[0]
        codes = np.zeros((b, n), dtype=np.int64)
        for i in range(perms.shape[0]):
            codes = codes * base + sub[:, perms[i]]
        flat = (np.arange(b, dtype=np.int64)[:, None] * npat + codes).ravel()
        counts = np.bincount(flat, minlength=b * npat).reshape(b, npat)
        tvs = 0.5 * np.abs(counts / float(n) - target[None, :]).sum(axis=1)
        good[lo : lo + b] = tvs < eps
    return good


def enumerate_good_models(
    sigma: SoficMap,
    mu: MarginalOracle,
    window: Window,
    eps: float,
    budget: int = ENUM_BUDGET,
    keep_configs: bool = True,
) -> GoodModelCount:
    """Exhaustive scan of X^V in lexicographic order (vertex 0 most significant)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    base = mu.alphabet.size
    total = base**sigma.n
    if total > budget:
        raise BudgetExceededError(total, budget)
    target = mu.marginal_elems(window.elements)
    perms = sigma.window_perms(window)
    npat = pattern_count(base, len(window))
    n = sigma.n
    count = 0
    kept: List[np.ndarray] = []
    for _, block in _scan_blocks(n, base):
        good = _good_mask(block, perms, base, npat, target, n, eps)
        count += int(good.sum())
        if keep_configs and good.any():
            kept.append(block[good].astype(np.uint8))
    configs = np.concatenate(kept, axis=0) if kept else np.zeros((0, n), dtype=np.uint8)
    log = math.log(count) if count > 0 else float("-inf")
    return GoodModelCount(count, log, configs if keep_configs else None)


MC_CHUNK = 1 << 14


def count_good_models_mc(
    sigma: SoficMap,
    mu: MarginalOracle,
    window: Window,
    eps: float,
    proposal: Sequence[float],
    samples: int,
    seed: int,
    threads: int = 1,
) -> GoodModelCount:
    """Importance-sampling estimate of |Omega(F, eps, sigma)|.

    Draws x ~ proposal^V and averages 1{good}/q(x); accumulation is in log
    space per fixed-size chunk with one named substream per chunk, so the
    result is identical for any thread count.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    q = np.asarray(proposal, dtype=np.float64)
    base = mu.alphabet.size
    if q.shape != (base,) or np.any(q <= 0) or abs(float(q.sum()) - 1.0) > 1e-9:
        raise ValueError("proposal must be a strictly positive distribution on X")
    q = q / float(q.sum())
    if samples < 2:
        raise ValueError("need at least 2 samples")
    target = mu.marginal_elems(window.elements)
    perms = sigma.window_perms(window)
    npat = pattern_count(base, len(window))
    n = sigma.n
    log_q = np.log(q)
    cdf = np.cumsum(q)
    cdf[-1] = 1.0

    def run_chunk(chunk_index: int, count: int) -> Tuple[np.ndarray, int]:
        gen = stream(seed, "mc", chunk_index)
        u = gen.random((count, n))
        block = np.searchsorted(cdf, u, side="right").astype(np.int64)
        good = _good_mask(block, perms, base, npat, target, n, eps)
        log_w = -log_q[block].sum(axis=1)
        return log_w[good], int(good.sum())

    chunks = [(ci, min(MC_CHUNK, samples - ci * MC_CHUNK)) for ci in range((samples + MC_CHUNK - 1) // MC_CHUNK)]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda a: run_chunk(*a), chunks))
    else:
        results = [run_chunk(*a) for a in chunks]

    good_logs = np.concatenate([r[0] for r in results]) if results else np.zeros(0)
    hits = sum(r[1] for r in results)
    log_n = math.log(samples)
    if hits == 0:
        return GoodModelCount(0, float("-inf"), None, 0.0)
    shift = float(good_logs.max())
    sum_w = float(np.exp(good_logs - shift).sum())
    sum_w2 = float(np.exp(2.0 * (good_logs - shift)).sum())
    log_est = shift + math.log(sum_w) - log_n
    # SE of the mean over all samples (zeros included for bad draws); it can
    # overflow to inf for enormous weights while log_est stays finite.
    with np.errstate(over="ignore"):
        mean_sq = float(np.exp(2.0 * log_est))
        second = float(np.exp(2.0 * shift)) * sum_w2 / samples
        var = max(second - mean_sq, 0.0) / (samples - 1)
    se = math.sqrt(var) if math.isfinite(var) and var >= 0.0 else float("inf")
    return GoodModelCount(_exp_nats_to_int(log_est), log_est, None, se)


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def letter_frequency_count(weights: Sequence[float], vertices: int, eps: float) -> GoodModelCount:
    """Exact |Omega({e}, eps, sigma)| for a product measure, by letter type.

    For F = {e} membership depends only on the letter counts, so the count is
    a sum of multinomial coefficients over types with TV strictly below eps.
    The TV test reuses the same float expression as the exhaustive scan so the
    two paths make bitwise-identical decisions.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    w = np.asarray(weights, dtype=np.float64)
    count = 0
    nf = float(vertices)
    for comp in _compositions(vertices, w.size):
        tv = 0.5 * np.abs(np.asarray(comp, dtype=np.float64) / nf - w).sum()
        if tv < eps:
            coeff = 1
            rem = vertices
            for c in comp[:-1]:
                coeff *= math.comb(rem, c)
                rem -= c
            count += coeff
    log = math.log(count) if count > 0 else float("-inf")
    return GoodModelCount(count, log)


@dataclass(frozen=True)
class BlockMap:
    """A D-local code X^D -> Y given by a full lookup table."""

    window: Window
    source: Alphabet
    target: Alphabet
    table: np.ndarray

    def __post_init__(self) -> None:
        tab = np.ascontiguousarray(self.table, dtype=np.uint8)
        expected = pattern_count(self.source.size, len(self.window))
        if tab.shape != (expected,):
            raise ValueError("table must cover X^D")
        if tab.size and int(tab.max()) >= self.target.size:
            raise ValueError("table value outside the target alphabet")
        object.__setattr__(self, "table", tab)

    def apply_pattern(self, pattern: Sequence[int]) -> int:
        code = 0
        for s in pattern:
            code = code * self.source.size + int(s)
        return int(self.table[code])


def apply_block_map(psi: BlockMap, sigma: SoficMap, x) -> np.ndarray:
    """psi^sigma: y_v = psi(pullback name of x at v restricted to D)."""
    codes = pattern_codes(sigma, x, psi.window, psi.source.size)
    return psi.table[codes]


def adjoint_shift(st: SoficMap, h: Element, x) -> np.ndarray:
    """rho^h on configurations over V x W: permute columns by tau^{h^{-1}}."""
    if st.product_of is None:
        raise ValueError("adjoint_shift needs a product sofic approximation")
    left, right = st.product_of
    vals = _as_values(x)
    if vals.shape != (st.n,):
        raise ValueError("configuration length must equal |V x W|")
    tw = right.perm_of(right.group.inverse(h))
    grid = vals.reshape(left.n, right.n)
    return np.ascontiguousarray(grid[:, tw]).ravel()


def shift_invariance_tv(sigma: SoficMap, x, window: Window, g: Element, base: int) -> float:
    """TV between the empirical F-marginal and its g-shifted pushforward."""
    plain = counts_over_elements(sigma, x, window.elements, base)
    shifted = counts_over_elements(sigma, x, window.translate(g), base)
    return tv_distance(plain / float(sigma.n), shifted / float(sigma.n))


def shift_invariance_bound(sigma: SoficMap, window: Window, g: Element) -> float:
    """2 x fraction of vertices where the g-shift of the pullback name differs
    from the pullback name at sigma^g(v), restricted to F. Zero for exact
    quotients; bounded by accumulated defect in general."""
    pg = sigma.perm_of(g)
    bad = np.zeros(sigma.n, dtype=bool)
    for f in window:
        lhs = sigma.perm_of(f)[pg]
        rhs = sigma.perm_of(sigma.group.multiply(f, g))
        bad |= lhs != rhs
    return 2.0 * float(bad.mean())


__all__ = [
    "Configuration",
    "EmpiricalDistribution",
    "GoodModelCount",
    "BlockMap",
    "BudgetExceededError",
    "pattern_codes",
    "pullback_name",
    "counts_over_elements",
    "empirical_distribution",
    "is_good_model",
    "enumerate_good_models",
    "count_good_models_mc",
    "letter_frequency_count",
    "apply_block_map",
    "adjoint_shift",
    "shift_invariance_tv",
    "shift_invariance_bound",
    "ENUM_BUDGET",
]
