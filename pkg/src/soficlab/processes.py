"""Shift-invariant processes on X^G via exact finite-window marginal oracles.

Every process is represented by its alphabet and a function from finite
windows F to the exact marginal distribution on X^F, stored as a dense vector
of |X|^|F| doubles. Pattern indexing is mixed-radix with window position 0
most significant: pattern (x_0, ..., x_{m-1}) has index sum x_i |X|^(m-1-i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .groups import Element, GroupSpec, Window

PATTERN_CAP = 1 << 24


@dataclass(frozen=True)
class Alphabet:
    size: int
    labels: Tuple[str, ...]

    def __post_init__(self) -> None:
        if not (1 <= self.size <= 256):
            raise ValueError("alphabet size must be in 1..256")
        if len(self.labels) != self.size or len(set(self.labels)) != self.size:
            raise ValueError("need one distinct label per symbol")

    @staticmethod
    def of_size(size: int) -> "Alphabet":
        return Alphabet(size, tuple(str(i) for i in range(size)))

    def pair_with(self, other: "Alphabet") -> "Alphabet":
        size = self.size * other.size
        labels = tuple(a + b for a in self.labels for b in other.labels)
        return Alphabet(size, labels)

    def string_of(self, symbols: Sequence[int]) -> str:
        parts = [self.labels[s] for s in symbols]
        if all(len(lab) == 1 for lab in self.labels):
            return "".join(parts)
        return ",".join(parts)


def pattern_count(base: int, length: int) -> int:
    total = base**length
    if total > PATTERN_CAP:
        raise ValueError(f"pattern space {base}^{length} exceeds the {PATTERN_CAP} cap")
    return total


def decode_patterns(base: int, length: int) -> np.ndarray:
    """All patterns as a (base^length, length) symbol matrix, index order."""
    total = pattern_count(base, length)
    idx = np.arange(total, dtype=np.int64)
    powers = base ** np.arange(length - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % base


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation distance: half the l1 distance of the pattern vectors."""
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


@dataclass
class PatternDistribution:
    """Exact marginal on X^F in window order."""

    window: Window
    alphabet: Alphabet
    probs: np.ndarray

    def __post_init__(self) -> None:
        self.probs = np.asarray(self.probs, dtype=np.float64)
        expected = pattern_count(self.alphabet.size, len(self.window))
        if self.probs.shape != (expected,):
            raise ValueError("probability vector length must be |X|^|F|")
        if np.any(self.probs < -1e-12) or abs(float(self.probs.sum()) - 1.0) > 1e-12:
            raise ValueError("marginal must be a probability vector")

    def tv(self, other: "PatternDistribution") -> float:
        return tv_distance(self.probs, other.probs)

    def pattern_tuple(self, index: int) -> Tuple[int, ...]:
        base = self.alphabet.size
        out = []
        for pos in range(len(self.window) - 1, -1, -1):
            out.append((index // base**pos) % base)
        return tuple(out)

    def project(self, positions: Sequence[int]) -> np.ndarray:
        """Marginal prob vector over the sub-window at the given positions."""
        m = len(self.window)
        base = self.alphabet.size
        shaped = self.probs.reshape((base,) * m)
        drop = tuple(i for i in range(m) if i not in positions)
        reduced = shaped.sum(axis=drop) if drop else shaped
        kept_sorted = sorted(positions)
        perm = [kept_sorted.index(p) for p in positions]
        return np.transpose(reduced, axes=perm).ravel()

    def csv_rows(self) -> List[Tuple[str, float]]:
        rows = []
        for i, p in enumerate(self.probs):
            rows.append((self.alphabet.string_of(self.pattern_tuple(i)), float(p)))
        return rows


class MarginalOracle:
    """Base class: exact marginals for arbitrary finite element tuples."""

    alphabet: Alphabet
    group: GroupSpec

    def __init__(self, alphabet: Alphabet, group: GroupSpec):
        self.alphabet = alphabet
        self.group = group
        self._cache: Dict[Tuple[Element, ...], np.ndarray] = {}

    def marginal_elems(self, elements: Tuple[Element, ...]) -> np.ndarray:
        key = tuple(elements)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._compute(key)
            hit.setflags(write=False)
            self._cache[key] = hit
        return hit

    def marginal(self, window: Window) -> PatternDistribution:
        probs = self.marginal_elems(window.elements)
        return PatternDistribution(window, self.alphabet, probs)

    def one_dim(self) -> np.ndarray:
        return self.marginal_elems((self.group.identity(),))

    def _compute(self, elements: Tuple[Element, ...]) -> np.ndarray:
        raise NotImplementedError


def _validate_weights(weights: Sequence[float]) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size < 1:
        raise ValueError("weights must be a nonempty vector")
    if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
        raise ValueError("weights must be nonnegative and sum to 1")
    return w / float(w.sum())


class BernoulliOracle(MarginalOracle):
    """Product measure weights^(x G): iid coordinates."""

    def __init__(self, weights: Sequence[float], group: GroupSpec, alphabet: Optional[Alphabet] = None):
        self.weights = _validate_weights(weights)
        alpha = alphabet if alphabet is not None else Alphabet.of_size(self.weights.size)
        if alpha.size != self.weights.size:
            raise ValueError("alphabet size must match the weight vector")
        super().__init__(alpha, group)

    def _compute(self, elements: Tuple[Element, ...]) -> np.ndarray:
        pattern_count(self.alphabet.size, len(elements))
        probs = np.ones(1)
        for _ in elements:
            probs = np.outer(probs, self.weights).ravel()
        return probs


class TreeMarkovOracle(MarginalOracle):
    """Tree-indexed Markov chain on the Cayley tree of a free group.

    Requires the initial vector to be stationary and in detailed balance with
    the transition matrix, so the measure is independent of edge orientation
    and shift-invariant.
    """

    def __init__(self, transition: Sequence[Sequence[float]], initial: Sequence[float], group: GroupSpec):
        if group.kind != "free":
            raise ValueError("tree_markov is defined over free groups")
        P = np.asarray(transition, dtype=np.float64)
        pi = np.asarray(initial, dtype=np.float64)
        k = pi.size
        if P.shape != (k, k):
            raise ValueError("transition must be square and match the initial vector")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-10):
            raise ValueError("transition must be row-stochastic")
        if np.any(pi < 0) or abs(float(pi.sum()) - 1.0) > 1e-10:
            raise ValueError("initial must be a probability vector")
        if np.max(np.abs(pi @ P - pi)) > 1e-10:
            raise ValueError("initial vector is not stationary for the transition")
        balance = pi[:, None] * P - (pi[:, None] * P).T
        if np.max(np.abs(balance)) > 1e-10:
            raise ValueError("transition violates detailed balance beyond 1e-10")
        self.P = P
        self.pi = pi
        super().__init__(Alphabet.of_size(k), group)

    def _compute(self, elements: Tuple[Element, ...]) -> np.ndarray:
        base = self.alphabet.size
        m = len(elements)
        total = pattern_count(base, m)
        # Minimal spanning subtree of the left Cayley tree: all suffixes of
        # the reduced words. Left-tree distance |u v^-1| is unchanged by
        # right translation, which is what keeps the Fg-marginal equal to
        # the F-marginal.
        nodes = {(): None}
        for w in elements:
            for i in range(1, len(w) + 1):
                nodes[tuple(w[len(w) - i :])] = None
        children: Dict[Tuple[int, ...], List[Tuple[int, ...]]] = {w: [] for w in nodes}
        for w in nodes:
            if w:
                children[tuple(w[1:])].append(w)
        for kids in children.values():
            kids.sort()
        clamp_pos = {tuple(w): i for i, w in enumerate(elements)}
        patterns = decode_patterns(base, m)
        probs = np.empty(total)
        P = self.P
        for idx in range(total):
            pat = patterns[idx]

            def subtree(node: Tuple[int, ...]) -> np.ndarray:
                # Likelihood vector over the node's state given the clamped
                # leaves below it; detailed balance makes the edge direction
                # irrelevant, so P serves for both orientations.
                vec = np.ones(base)
                for child in children[node]:
                    cvec = subtree(child)
                    vec = vec * (P @ cvec)
                if node in clamp_pos:
                    s = pat[clamp_pos[node]]
                    mask = np.zeros(base)
                    mask[s] = vec[s]
                    vec = mask
                return vec

            probs[idx] = float(self.pi @ subtree(()))
        return probs


class CosetIidOracle(MarginalOracle):
    """Constant on right cosets of a free factor H, iid across cosets."""

    def __init__(self, mu0: Sequence[float], group: GroupSpec, factor: int = 0):
        if group.kind != "free_product":
            raise ValueError("coset_iid is defined over free products")
        self.mu0 = _validate_weights(mu0)
        self.factor = factor
        group.right_coset_key((), factor)  # validates the factor index
        super().__init__(Alphabet.of_size(self.mu0.size), group)

    def _compute(self, elements: Tuple[Element, ...]) -> np.ndarray:
        base = self.alphabet.size
        m = len(elements)
        total = pattern_count(base, m)
        keys = [self.group.right_coset_key(g, self.factor) for g in elements]
        classes: Dict[Tuple[int, ...], List[int]] = {}
        for pos, key in enumerate(keys):
            classes.setdefault(key, []).append(pos)
        patterns = decode_patterns(base, m)
        probs = np.zeros(total)
        for idx in range(total):
            pat = patterns[idx]
            p = 1.0
            for positions in classes.values():
                s = pat[positions[0]]
                if any(pat[q] != s for q in positions[1:]):
                    p = 0.0
                    break
                p *= self.mu0[s]
            probs[idx] = p
        return probs


class PeriodicOrbitOracle(MarginalOracle):
    """Uniform measure on the shift orbit of a p-periodic point of X^Z."""

    def __init__(self, pattern: str, group: GroupSpec, alphabet_size: Optional[int] = None):
        if not group.is_integers():
            raise ValueError("periodic_orbit is defined over the integers")
        if not pattern or not pattern.isdigit():
            raise ValueError("pattern must be a nonempty digit string")
        symbols = tuple(int(c) for c in pattern)
        p = len(symbols)
        for d in range(1, p):
            if p % d == 0 and all(symbols[i] == symbols[i % d] for i in range(p)):
                raise ValueError(f"pattern has least period {d}, not {p}")
        size = alphabet_size if alphabet_size is not None else max(max(symbols) + 1, 2)
        if any(s >= size for s in symbols):
            raise ValueError("pattern symbol out of alphabet range")
        self.symbols = symbols
        self.period = p
        super().__init__(Alphabet.of_size(size), group)

    def _compute(self, elements: Tuple[Element, ...]) -> np.ndarray:
        base = self.alphabet.size
        m = len(elements)
        total = pattern_count(base, m)
        offsets = [sum(1 if s > 0 else -1 for s in w) for w in elements]
        powers = [base ** (m - 1 - i) for i in range(m)]
        probs = np.zeros(total)
        p = self.period
        for shift in range(p):
            idx = sum(self.symbols[(off + shift) % p] * pw for off, pw in zip(offsets, powers))
            probs[idx] += 1.0 / p
        return probs


class CoinducedOracle(MarginalOracle):
    """Independent copies of a base G-process along the fibers of G x H."""

    def __init__(self, base: MarginalOracle, h_spec: GroupSpec):
        self.base = base
        super().__init__(base.alphabet, GroupSpec.direct_product(base.group, h_spec))

    def _compute(self, elements: Tuple[Element, ...]) -> np.ndarray:
        basealpha = self.alphabet.size
        m = len(elements)
        total = pattern_count(basealpha, m)
        fibers: Dict[Element, List[int]] = {}
        for pos, (g, h) in enumerate(elements):
            fibers.setdefault(h, []).append(pos)
        fiber_data = []
        for h, positions in fibers.items():
            g_parts = tuple(elements[q][0] for q in positions)
            fiber_data.append((positions, self.base.marginal_elems(g_parts)))
        patterns = decode_patterns(basealpha, m)
        probs = np.ones(total)
        for positions, local in fiber_data:
            local_m = len(positions)
            powers = basealpha ** np.arange(local_m - 1, -1, -1, dtype=np.int64)
            local_idx = patterns[:, positions] @ powers
            probs *= local[local_idx]
        return probs


class ProductOracle(MarginalOracle):
    """Independent joining of two processes over the same group."""

    def __init__(self, mu: MarginalOracle, nu: MarginalOracle):
        if mu.group != nu.group:
            raise ValueError("product_process requires a common group")
        self.mu = mu
        self.nu = nu
        super().__init__(mu.alphabet.pair_with(nu.alphabet), mu.group)

    def _compute(self, elements: Tuple[Element, ...]) -> np.ndarray:
        bx = self.mu.alphabet.size
        by = self.nu.alphabet.size
        m = len(elements)
        pattern_count(bx * by, m)
        pm = self.mu.marginal_elems(elements)
        pn = self.nu.marginal_elems(elements)
        combined = decode_patterns(bx * by, m)
        x_digits = combined // by
        y_digits = combined % by
        powx = bx ** np.arange(m - 1, -1, -1, dtype=np.int64)
        powy = by ** np.arange(m - 1, -1, -1, dtype=np.int64)
        return pm[x_digits @ powx] * pn[y_digits @ powy]


# -- constructor helpers -----------------------------------------------------------


def bernoulli(weights: Sequence[float], group: GroupSpec) -> BernoulliOracle:
    return BernoulliOracle(weights, group)


def tree_markov(transition: Sequence[Sequence[float]], initial: Sequence[float], group: GroupSpec) -> TreeMarkovOracle:
    return TreeMarkovOracle(transition, initial, group)


def coset_iid(mu0: Sequence[float], group: GroupSpec, factor: int = 0) -> CosetIidOracle:
    return CosetIidOracle(mu0, group, factor)


def periodic_orbit(pattern: str, group: GroupSpec) -> PeriodicOrbitOracle:
    return PeriodicOrbitOracle(pattern, group)


def coinduced(base: MarginalOracle, h_spec: GroupSpec) -> CoinducedOracle:
    return CoinducedOracle(base, h_spec)


def product_process(mu: MarginalOracle, nu: MarginalOracle) -> ProductOracle:
    return ProductOracle(mu, nu)


def power_process(mu: MarginalOracle, k: int) -> MarginalOracle:
    if k < 1:
        raise ValueError("power must be >= 1")
    if mu.alphabet.size**k > 256:
        raise ValueError(f"alphabet overflow: {mu.alphabet.size}^{k} > 256")
    out = mu
    for _ in range(k - 1):
        out = ProductOracle(out, mu)
    return out


def process_from_json(obj: Dict[str, Any], group: GroupSpec) -> MarginalOracle:
    kind = obj.get("process")
    if kind == "bernoulli":
        return bernoulli(obj["weights"], group)
    if kind == "tree_markov":
        return tree_markov(obj["transition"], obj["initial"], group)
    if kind == "coset_iid":
        return coset_iid(obj["mu0"], group, int(obj.get("factor", 0)))
    if kind == "periodic_orbit":
        return periodic_orbit(obj["pattern"], group)
    if kind == "product":
        factors = [process_from_json(f, group) for f in obj["factors"]]
        if len(factors) != 2:
            raise ValueError("product takes exactly two factor processes")
        return product_process(*factors)
    if kind == "power":
        return power_process(process_from_json(obj["base"], group), int(obj["k"]))
    raise ValueError(f"unknown process kind {kind!r}")


def shift_invariance_gap(mu: MarginalOracle, window: Window, g: Element) -> float:
    """TV between the F-marginal and the g-translated Fg-marginal (0 exactly
    for shift-invariant oracles, up to float round-off)."""
    base_probs = mu.marginal_elems(window.elements)
    translated = mu.marginal_elems(window.translate(g))
    return tv_distance(base_probs, translated)


__all__ = [
    "Alphabet",
    "PatternDistribution",
    "MarginalOracle",
    "BernoulliOracle",
    "TreeMarkovOracle",
    "CosetIidOracle",
    "PeriodicOrbitOracle",
    "CoinducedOracle",
    "ProductOracle",
    "bernoulli",
    "tree_markov",
    "coset_iid",
    "periodic_orbit",
    "coinduced",
    "product_process",
    "power_process",
    "process_from_json",
    "tv_distance",
    "pattern_count",
    "decode_patterns",
    "shift_invariance_gap",
]
