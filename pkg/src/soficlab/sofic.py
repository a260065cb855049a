"""Sofic approximations sigma: G -> Sym(V) and their diagnostics.

A SoficMap stores one permutation per group generator; sigma^g for a general
element is composed on the fly along the canonical word of g. Multiplicativity
and freeness are audited as exact defect fractions, and the Schreier graph of
a chosen generator set exposes a spectral-gap estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .groups import Element, GroupSpec, Window, coind_group
from .randomness import fisher_yates, partitioned_permutation, stream


def _inverse_perm(perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size, dtype=perm.dtype)
    return inv


class SoficMap:
    """A finite vertex set with one permutation per group generator."""

    __slots__ = ("group", "n", "perms", "inv_perms", "partition", "product_of")

    def __init__(
        self,
        group: GroupSpec,
        perms: Dict[str, np.ndarray],
        partition: Optional[Dict[str, np.ndarray]] = None,
        product_of: Optional[Tuple["SoficMap", "SoficMap"]] = None,
    ):
        labels = group.generator_labels()
        if set(perms) != set(labels):
            raise ValueError(f"need exactly one permutation per generator {labels}")
        sizes = {len(p) for p in perms.values()}
        if len(sizes) != 1:
            raise ValueError("all permutations must act on the same vertex set")
        self.n = sizes.pop()
        self.group = group
        self.perms: Dict[str, np.ndarray] = {}
        self.inv_perms: Dict[str, np.ndarray] = {}
        for lab in labels:
            p = np.asarray(perms[lab], dtype=np.int64)
            if not np.array_equal(np.sort(p), np.arange(self.n)):
                raise ValueError(f"permutation for {lab!r} is not a bijection")
            self.perms[lab] = p
            self.inv_perms[lab] = _inverse_perm(p)
        self.partition = None
        if partition is not None:
            self.partition = {k: np.asarray(v, dtype=np.int64) for k, v in partition.items()}
        self.product_of = product_of

    # -- evaluation -----------------------------------------------------------

    def _letter_perm(self, letter: int, labels: Sequence[str]) -> np.ndarray:
        lab = labels[abs(letter) - 1]
        return self.perms[lab] if letter > 0 else self.inv_perms[lab]

    def perm_of(self, g: Element) -> np.ndarray:
        """The full permutation array of sigma^g (sigma^g[v] = image of v)."""
        if self.group.kind == "product":
            if self.product_of is None:
                raise ValueError("this map over a product group lacks product structure")
            left, right = self.product_of
            pl = left.perm_of(g[0])
            pr = right.perm_of(g[1])
            return (pl[:, None] * right.n + pr[None, :]).ravel()
        word = self.group.word_of(g)
        labels = self.group.generator_labels()
        out = np.arange(self.n, dtype=np.int64)
        # sigma^{s1..sm} = sigma^{s1} o ... o sigma^{sm}: apply s_m first.
        for letter in reversed(word):
            out = self._letter_perm(letter, labels)[out]
        return out

    def evaluate(self, g: Element, v: int) -> int:
        if not (0 <= v < self.n):
            raise ValueError(f"vertex {v} out of range for |V| = {self.n}")
        if self.group.kind == "product":
            return int(self.perm_of(g)[v])
        word = self.group.word_of(g)
        labels = self.group.generator_labels()
        out = v
        for letter in reversed(word):
            out = int(self._letter_perm(letter, labels)[out])
        return out

    def window_perms(self, window: Window) -> np.ndarray:
        """Stacked permutations for a window: row i is sigma^{window[i]}."""
        return np.stack([self.perm_of(g) for g in window.elements])

    # -- defects ----------------------------------------------------------------

    def defect(
        self,
        pairs: Iterable[Tuple[Element, Element]] = (),
        elements: Iterable[Element] = (),
    ) -> "DefectReport":
        mult = []
        for g, h in pairs:
            lhs = self.perm_of(g)[self.perm_of(h)]
            rhs = self.perm_of(self.group.multiply(g, h))
            frac = float(np.count_nonzero(lhs != rhs)) / self.n
            mult.append((self.group.element_to_string(g), self.group.element_to_string(h), frac))
        fixed = []
        for g in elements:
            frac = float(np.count_nonzero(self.perm_of(g) == np.arange(self.n))) / self.n
            fixed.append((self.group.element_to_string(g), frac))
        return DefectReport(tuple(mult), tuple(fixed))

    def window_defect(self, window: Window) -> "DefectReport":
        """Defects for all window pairs and all non-identity window elements."""
        e = self.group.identity()
        pairs = [(g, h) for g in window for h in window]
        elems = [g for g in window if g != e]
        return self.defect(pairs, elems)

    # -- serialization ------------------------------------------------------------

    def to_json(self) -> Dict[str, Any]:
        obj: Dict[str, Any] = {
            "n": int(self.n),
            "perms": {lab: [int(x) for x in p] for lab, p in self.perms.items()},
        }
        if self.partition is not None:
            obj["partition"] = {k: [int(x) for x in v] for k, v in self.partition.items()}
        return obj

    @staticmethod
    def from_json(obj: Dict[str, Any], group: GroupSpec) -> "SoficMap":
        perms = {lab: np.asarray(p, dtype=np.int64) for lab, p in obj["perms"].items()}
        partition = None
        if obj.get("partition") is not None:
            partition = {k: np.asarray(v, dtype=np.int64) for k, v in obj["partition"].items()}
        return SoficMap(group, perms, partition=partition)


@dataclass(frozen=True)
class DefectReport:
    """Exact defect fractions: multiplicativity per pair, fixed points per element."""

    multiplicativity: Tuple[Tuple[str, str, float], ...]
    fixed_points: Tuple[Tuple[str, float], ...]

    def max_multiplicativity(self) -> float:
        return max((f for _, _, f in self.multiplicativity), default=0.0)

    def max_fixed_points(self) -> float:
        return max((f for _, f in self.fixed_points), default=0.0)

    def csv_rows(self) -> List[Tuple[str, str, float]]:
        """Rows (g, h, defect); fixed-point rows carry an empty h."""
        rows = list(self.multiplicativity)
        rows.extend((g, "", f) for g, f in self.fixed_points)
        return rows


# -- constructors ------------------------------------------------------------------


def random_uniform(spec: GroupSpec, n: int, seed: int) -> SoficMap:
    """Independent uniform permutations per generator (seeded Fisher-Yates)."""
    if spec.kind not in ("free", "free_product"):
        raise ValueError("random_uniform draws generator permutations for free kinds")
    if n < 1:
        raise ValueError("n must be >= 1")
    perms = {}
    for lab in spec.generator_labels():
        perms[lab] = fisher_yates(stream(seed, "sofic", lab), n)
    return SoficMap(spec, perms)


def partitioned_random(n: int, seed: int) -> SoficMap:
    """The partitioned random model on V = U | W with |U| = 3n, |W| = n.

    The group is the free product of <a,b> and <a',b'>. a and b are uniform
    among permutations preserving {U, W} setwise; a' and b' are uniform on all
    of Sym(V). Partition labels are retained on the result.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    group = coind_group()
    size = 4 * n
    u_block = np.arange(3 * n, dtype=np.int64)
    w_block = np.arange(3 * n, size, dtype=np.int64)
    perms = {}
    for lab in ("a", "b"):
        perms[lab] = partitioned_permutation(stream(seed, "sofic", lab), [u_block, w_block], size)
    for lab in ("a'", "b'"):
        perms[lab] = fisher_yates(stream(seed, "sofic", lab), size)
    return SoficMap(group, perms, partition={"U": u_block, "W": w_block})


def quotient_map(spec: GroupSpec, n: Optional[int] = None) -> SoficMap:
    """Exact finite quotients: Z/nZ cycles for the integers, left rotation for
    finite groups. Defects are identically zero (true homomorphisms)."""
    if spec.is_integers():
        if n is None or n < 1:
            raise ValueError("cycle length n >= 1 required")
        perm = (np.arange(n, dtype=np.int64) + 1) % n
        return SoficMap(spec, {spec.labels[0]: perm})
    if spec.kind == "finite":
        assert spec.table is not None and spec.generator_elems is not None
        m = len(spec.table)
        if n is not None and n != m:
            raise ValueError(f"finite quotient acts on the group itself (|V| = {m})")
        tab = np.asarray(spec.table, dtype=np.int64)
        perms = {lab: tab[g] for lab, g in zip(spec.labels, spec.generator_elems)}
        return SoficMap(spec, perms)
    raise ValueError("quotient_map supports the integers and finite-table groups")


def product(sigma: SoficMap, tau: SoficMap) -> SoficMap:
    """Product approximation on V x W: (g,h) acts as sigma^g x tau^h.

    Vertices are row-major: (v, w) -> v * |W| + w.
    """
    group = GroupSpec.direct_product(sigma.group, tau.group)
    labels = group.generator_labels()
    left_labels = sigma.group.generator_labels()
    nw = tau.n
    identity_w = np.arange(nw, dtype=np.int64)
    identity_v = np.arange(sigma.n, dtype=np.int64)
    perms = {}
    for i, lab in enumerate(labels):
        if i < len(left_labels):
            pl, pr = sigma.perms[left_labels[i]], identity_w
        else:
            right_lab = tau.group.generator_labels()[i - len(left_labels)]
            pl, pr = identity_v, tau.perms[right_lab]
        perms[lab] = (pl[:, None] * nw + pr[None, :]).ravel()
    return SoficMap(group, perms, product_of=(sigma, tau))


# -- Schreier spectral diagnostics ------------------------------------------------


@dataclass(frozen=True)
class SpectralReport:
    """Second eigenvalue of the normalized Schreier adjacency.

    lambda2 is the modulus of the second-largest (signed) eigenvalue;
    cheeger_lower = (1 - signed value)/2 lower-bounds the edge expansion.
    """

    lambda2: float
    lambda2_signed: float
    cheeger_lower: float
    converged: bool
    iterations: int
    residual: float
    vertices: int = field(default=0)


def schreier_spectral_gap(
    sigma: SoficMap,
    generators: Sequence[str],
    restriction: Optional[np.ndarray] = None,
    seed: int = 0,
    tol: float = 1e-9,
    max_iters: int = 100_000,
) -> SpectralReport:
    """Power iteration for the second-largest eigenvalue of the normalized
    adjacency of the Schreier multigraph on the chosen generators.

    Each generator contributes the undirected edges {v, pi_s(v)}, giving a
    2k-regular multigraph; the normalized adjacency has spectrum in [-1, 1]
    with the constant vector at eigenvalue 1. That top vector is deflated by
    projection and the iteration runs on (M + I)/2, so it converges to the
    second-largest signed eigenvalue even when that eigenvalue is negative.
    If `restriction` is given, only edges inside the subset are kept (the
    intended use restricts to a block preserved by the chosen generators).
    """
    if not generators:
        raise ValueError("generator set must be nonempty")
    if restriction is None:
        verts = np.arange(sigma.n, dtype=np.int64)
    else:
        verts = np.asarray(restriction, dtype=np.int64)
    m = verts.size
    if m < 2:
        raise ValueError("need at least two vertices for a second eigenvalue")
    pos = -np.ones(sigma.n, dtype=np.int64)
    pos[verts] = np.arange(m)

    rows_list: List[np.ndarray] = []
    cols_list: List[np.ndarray] = []
    for lab in generators:
        img = pos[sigma.perms[lab][verts]]
        src = np.arange(m, dtype=np.int64)
        keep = img >= 0
        rows_list.extend([src[keep], img[keep]])
        cols_list.extend([img[keep], src[keep]])
    rows = np.concatenate(rows_list)
    cols = np.concatenate(cols_list)
    deg = 2.0 * len(generators)

    def apply_m(x: np.ndarray) -> np.ndarray:
        return np.bincount(rows, weights=x[cols], minlength=m) / deg

    gen = stream(seed, "spectral")
    x = gen.standard_normal(m)
    x -= x.mean()
    x /= np.linalg.norm(x)
    prev = np.inf
    lam = 0.0
    iterations = 0
    converged = False
    for iterations in range(1, max_iters + 1):
        mx = apply_m(x)
        lam = float(x @ mx)
        if abs(lam - prev) < tol:
            converged = True
            break
        prev = lam
        y = 0.5 * (mx + x)
        y -= y.mean()
        norm = np.linalg.norm(y)
        if norm < 1e-300:
            # x was (numerically) in the kernel of (M+I)/2 on the mean-zero
            # subspace. The Rayleigh quotient is already exact there.
            converged = True
            break
        x = y / norm
    mx = apply_m(x)
    res_vec = mx - lam * x
    res_vec -= res_vec.mean()
    residual = float(np.linalg.norm(res_vec))
    return SpectralReport(
        lambda2=abs(lam),
        lambda2_signed=lam,
        cheeger_lower=(1.0 - lam) / 2.0,
        converged=converged,
        iterations=iterations,
        residual=residual,
        vertices=m,
    )


__all__ = [
    "SoficMap",
    "DefectReport",
    "SpectralReport",
    "random_uniform",
    "partitioned_random",
    "quotient_map",
    "product",
    "schreier_spectral_gap",
]
