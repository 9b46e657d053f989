"""Shared generators and independent oracle implementations.

The oracles here deliberately take different routes than the library:
mutual information via direct log-ratio sums instead of entropy
combinations, partitions via block lists instead of growth strings,
distances via stdlib math, AUROC via explicit pair comparison.
"""

from __future__ import annotations

import math

import numpy as np

from oodbench.infotheory import DiscreteJoint, Encoder, product_joint

MI_TOL = 1e-12


# ---------------------------------------------------------------------------
# random discrete joints


def bounded_probs(rng: np.random.Generator, n: int, floor: float = 0.2) -> np.ndarray:
    """A pmf whose entries stay well away from zero (no near-degenerate cells)."""
    w = rng.uniform(floor, 1.0, size=n)
    return w / w.sum()


def surjective_labeling(rng: np.random.Generator, n: int, n_labels: int) -> tuple[int, ...]:
    """A labeling of n values using every label in range(n_labels); needs n >= n_labels."""
    f = list(range(n_labels)) + [int(rng.integers(0, n_labels)) for _ in range(n - n_labels)]
    perm = rng.permutation(n)
    return tuple(f[p] for p in perm)


def random_product_joint(rng: np.random.Generator, n1: int, n2: int) -> DiscreteJoint:
    """Independent joint with nontrivial surrogate labels y1 = f1(x1)."""
    k1 = int(rng.integers(2, n1 + 1)) if n1 >= 2 else 1
    k2 = int(rng.integers(2, n2 + 1)) if n2 >= 2 else 1
    return product_joint(
        bounded_probs(rng, n1),
        bounded_probs(rng, n2),
        f1=surjective_labeling(rng, n1, k1),
        f2=surjective_labeling(rng, n2, k2),
    )


def random_dependent_joint(rng: np.random.Generator, n1: int, n2: int) -> DiscreteJoint:
    pmf = bounded_probs(rng, n1 * n2).reshape(n1, n2)
    k1 = int(rng.integers(2, n1 + 1)) if n1 >= 2 else 1
    k2 = int(rng.integers(2, n2 + 1)) if n2 >= 2 else 1
    return DiscreteJoint(
        pmf=pmf,
        f1=surjective_labeling(rng, n1, k1),
        f2=surjective_labeling(rng, n2, k2),
    )


def random_encoder(rng: np.random.Generator, joint: DiscreteJoint) -> Encoder:
    cells = joint.support()
    codes = [0]
    used = 1
    for _ in range(len(cells) - 1):
        c = int(rng.integers(0, used + 1))
        codes.append(c)
        if c == used:
            used += 1
    return Encoder(cells=cells, codes=tuple(codes))


# ---------------------------------------------------------------------------
# information-theory oracles (log-ratio route)


def _values(joint: DiscreteJoint, sel: str, encoder: Encoder | None):
    cells = joint.support()
    if sel == "x1":
        return [c[0] for c in cells]
    if sel == "x2":
        return [c[1] for c in cells]
    if sel == "y1":
        return [joint.f1[c[0]] for c in cells]
    if sel == "y2":
        return [joint.f2[c[1]] for c in cells]
    if sel == "x":
        return list(cells)
    if sel == "z":
        return [encoder.mapping()[c] for c in cells]
    raise ValueError(sel)


def _dist(joint: DiscreteJoint, sels, encoder: Encoder | None = None) -> dict:
    sels = (sels,) if isinstance(sels, str) else tuple(sels)
    cols = [_values(joint, s, encoder) for s in sels]
    probs = [float(joint.pmf[c]) for c in joint.support()]
    out: dict = {}
    for idx, p in enumerate(probs):
        key = tuple(col[idx] for col in cols)
        out[key] = out.get(key, 0.0) + p
    return out


def oracle_entropy(joint: DiscreteJoint, sel, encoder: Encoder | None = None) -> float:
    return -sum(p * math.log2(p) for p in _dist(joint, sel, encoder).values() if p > 0)


def oracle_cond_entropy(joint: DiscreteJoint, a, given, encoder: Encoder | None = None) -> float:
    """H(a|given) = sum_g p(g) H(a | given=g), computed slice by slice."""
    a = (a,) if isinstance(a, str) else tuple(a)
    g = (given,) if isinstance(given, str) else tuple(given)
    joint_d = _dist(joint, a + g, encoder)
    given_d = _dist(joint, g, encoder)
    total = 0.0
    for key, p in joint_d.items():
        if p > 0:
            pg = given_d[key[len(a):]]
            total -= p * math.log2(p / pg)
    return total


def oracle_mi(joint: DiscreteJoint, a, b, encoder: Encoder | None = None) -> float:
    """I(a;b) = sum p(a,b) log2[p(a,b) / (p(a) p(b))]."""
    a = (a,) if isinstance(a, str) else tuple(a)
    b = (b,) if isinstance(b, str) else tuple(b)
    d_ab = _dist(joint, a + b, encoder)
    d_a = _dist(joint, a, encoder)
    d_b = _dist(joint, b, encoder)
    total = 0.0
    for key, p in d_ab.items():
        if p > 0:
            total += p * math.log2(p / (d_a[key[: len(a)]] * d_b[key[len(a):]]))
    return total


def oracle_cond_mi(joint: DiscreteJoint, a, b, c, encoder: Encoder | None = None) -> float:
    """I(a;b|c) = sum p(a,b,c) log2[p(c) p(a,b,c) / (p(a,c) p(b,c))]."""
    a = (a,) if isinstance(a, str) else tuple(a)
    b = (b,) if isinstance(b, str) else tuple(b)
    c = (c,) if isinstance(c, str) else tuple(c)
    d_abc = _dist(joint, a + b + c, encoder)
    d_ac = _dist(joint, a + c, encoder)
    d_bc = _dist(joint, b + c, encoder)
    d_c = _dist(joint, c, encoder)
    total = 0.0
    for key, p in d_abc.items():
        if p > 0:
            ka = key[: len(a)]
            kb = key[len(a): len(a) + len(b)]
            kc = key[len(a) + len(b):]
            total += p * math.log2(d_c[kc] * p / (d_ac[ka + kc] * d_bc[kb + kc]))
    return total


# ---------------------------------------------------------------------------
# partition oracle (block-list route)


def oracle_partitions(n: int):
    """All set partitions of range(n) as lists of blocks."""

    def rec(items):
        if not items:
            yield []
            return
        head, rest = items[0], items[1:]
        for part in rec(rest):
            for i in range(len(part)):
                yield part[:i] + [[head] + part[i]] + part[i + 1:]
            yield [[head]] + part

    yield from rec(list(range(n)))


def blocks_to_codes(blocks, n: int) -> tuple[int, ...]:
    """Canonical growth-string labels: blocks numbered by first occurrence."""
    codes = [0] * n
    order = sorted(blocks, key=min)
    for label, block in enumerate(order):
        for item in block:
            codes[item] = label
    return tuple(codes)


# ---------------------------------------------------------------------------
# metric oracles


def pairwise_auroc(id_scores, ood_scores) -> float:
    """Explicit all-pairs count: wins plus half ties, averaged."""
    id_arr = np.asarray(id_scores, dtype=np.float64)
    ood_arr = np.asarray(ood_scores, dtype=np.float64)
    wins = (ood_arr[:, None] > id_arr[None, :]).sum()
    ties = (ood_arr[:, None] == id_arr[None, :]).sum()
    return float((wins + 0.5 * ties) / (id_arr.size * ood_arr.size))


def fpr_threshold_scan(id_scores, ood_scores, target: float) -> float:
    """Walk the sorted ID scores and stop at the first that reaches the TPR."""
    id_arr = np.asarray(id_scores, dtype=np.float64)
    ood_arr = np.asarray(ood_scores, dtype=np.float64)
    for t in np.sort(np.unique(id_arr)):
        if np.mean(id_arr <= t) >= target - 1e-9:
            return float(np.mean(ood_arr <= t))
    return 1.0


def knn_kth_distance(reference, query, k: int) -> float:
    """Full sort of all query-to-reference distances via stdlib math."""
    dists = sorted(math.dist(tuple(query), tuple(row)) for row in reference)
    return dists[k - 1]


def random_tied_scores(rng: np.random.Generator, max_n: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """Score pairs mixing continuous values with a coarse grid to force ties."""
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(1, max_n + 1))
    if rng.random() < 0.5:
        id_s = np.round(rng.normal(0, 1, n), 1)
        ood_s = np.round(rng.normal(rng.uniform(0, 1.5), 1, m), 1)
    else:
        id_s = rng.normal(0, 1, n)
        ood_s = rng.normal(rng.uniform(0, 1.5), 1, m)
    return id_s, ood_s
