"""Exact information theory on finite discrete joints.

The model is a joint distribution over two factors (x1, x2) given as a
pmf matrix, with deterministic labelings y1 = f1(x1) (the surrogate task)
and y2 = f2(x2) (the semantic labels). Representations z are deterministic
encoders of the support cells. Everything is computed in bits (log base 2)
by exact summation, so identities are checked at 1e-12 rather than by
sampling.

Provided here:
  * entropy / mutual information / conditional MI over any selection of
    the variables x1, x2, y1, y2, x = (x1, x2), and z under an encoder;
  * the bottleneck objective I(x;z) - beta * I(z;y1) and its exhaustive
    minimization over deterministic encoders (set partitions of the
    support), restricted to sufficient encoders (I(x;y1|z) = 0);
  * label filtering (condition on f2(x2) falling in an allowed set) and a
    blindness audit that measures how much information the minimizing
    encoders carry about the independent factor and its labels;
  * a Fano-style lower bound on prediction error and a Monte Carlo
    estimate of the risk that a fresh sample's label was never seen among
    n draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import TheoryError

__all__ = [
    "DiscreteJoint",
    "Encoder",
    "IBConfig",
    "product_joint",
    "entropy",
    "binary_entropy",
    "variable_entropy",
    "mutual_information",
    "conditional_mi",
    "is_sufficient",
    "ib_loss",
    "ib_loss_terms",
    "LossTerms",
    "enumerate_encoders",
    "minimize_ib",
    "filter_distribution",
    "verify_label_blindness",
    "EncoderAudit",
    "BlindnessReport",
    "fano_error_lower_bound",
    "overlap_risk_exact",
    "simulate_overlap_risk",
]

MI_TOLERANCE = 1e-12
DEFAULT_MAX_CELLS = 12

_PMF_TOL = 1e-12
Cell = tuple[int, int]


@dataclass(frozen=True)
class DiscreteJoint:
    """Joint pmf over (x1, x2) plus the two deterministic labelings."""

    pmf: np.ndarray
    f1: tuple[int, ...]
    f2: tuple[int, ...]

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=np.float64)
        if pmf.ndim != 2:
            raise TheoryError("pmf must be a 2-d matrix over (x1, x2)")
        if np.any(pmf < 0):
            raise TheoryError("pmf entries must be >= 0")
        if abs(float(pmf.sum()) - 1.0) > _PMF_TOL:
            raise TheoryError(f"pmf must sum to 1 within {_PMF_TOL}, got {float(pmf.sum())!r}")
        f1 = tuple(int(v) for v in self.f1)
        f2 = tuple(int(v) for v in self.f2)
        if len(f1) != pmf.shape[0]:
            raise TheoryError(f"f1 must label all {pmf.shape[0]} x1 values")
        if len(f2) != pmf.shape[1]:
            raise TheoryError(f"f2 must label all {pmf.shape[1]} x2 values")
        object.__setattr__(self, "pmf", pmf)
        object.__setattr__(self, "f1", f1)
        object.__setattr__(self, "f2", f2)

    @property
    def alphabet_sizes(self) -> tuple[int, int]:
        return self.pmf.shape

    def support(self) -> tuple[Cell, ...]:
        """Cells with positive probability, in row-major order."""
        return tuple((int(i), int(j)) for i, j in np.argwhere(self.pmf > 0.0))

    @classmethod
    def from_unnormalized(cls, weights, f1, f2) -> "DiscreteJoint":
        w = np.asarray(weights, dtype=np.float64)
        total = float(w.sum())
        if total <= 0:
            raise TheoryError("weights must have positive total mass")
        return cls(pmf=w / total, f1=tuple(f1), f2=tuple(f2))


def product_joint(p1, p2, f1, f2) -> DiscreteJoint:
    """Independent joint with marginals p1, p2: pmf[i, j] = p1[i] * p2[j]."""
    a = np.asarray(p1, dtype=np.float64)
    b = np.asarray(p2, dtype=np.float64)
    return DiscreteJoint.from_unnormalized(np.outer(a, b), f1, f2)


@dataclass(frozen=True)
class Encoder:
    """Deterministic code over the support cells of one joint."""

    cells: tuple[Cell, ...]
    codes: tuple[int, ...]

    def __post_init__(self):
        if len(self.cells) != len(self.codes):
            raise TheoryError("encoder must assign exactly one code per cell")

    @property
    def code_size(self) -> int:
        return len(set(self.codes))

    def mapping(self) -> dict[Cell, int]:
        return dict(zip(self.cells, self.codes))

    @classmethod
    def from_mapping(cls, joint: DiscreteJoint, mapping: Mapping[Cell, int]) -> "Encoder":
        cells = joint.support()
        missing = [c for c in cells if c not in mapping]
        if missing:
            raise TheoryError(f"encoder is not total on the support; missing cell {missing[0]}")
        return cls(cells=cells, codes=tuple(int(mapping[c]) for c in cells))

    @classmethod
    def identity(cls, joint: DiscreteJoint) -> "Encoder":
        cells = joint.support()
        return cls(cells=cells, codes=tuple(range(len(cells))))

    @classmethod
    def constant(cls, joint: DiscreteJoint) -> "Encoder":
        cells = joint.support()
        return cls(cells=cells, codes=(0,) * len(cells))


# ---------------------------------------------------------------------------
# entropies and mutual information


def entropy(pmf) -> float:
    """Shannon entropy in bits of a pmf array of any shape; 0 log 0 = 0."""
    p = np.asarray(pmf, dtype=np.float64).ravel()
    if np.any(p < 0) or abs(float(p.sum()) - 1.0) > _PMF_TOL:
        raise TheoryError("invalid pmf")
    return _entropy_of_probs(p[p > 0.0])


def binary_entropy(e: float) -> float:
    """H_b(e) in bits; defined as 0 at both endpoints."""
    if not (0.0 <= e <= 1.0):
        raise TheoryError(f"binary entropy argument must be in [0, 1], got {e}")
    if e in (0.0, 1.0):
        return 0.0
    return -e * math.log2(e) - (1.0 - e) * math.log2(1.0 - e)


def _entropy_of_probs(probs: Iterable[float]) -> float:
    return -sum(p * math.log2(p) for p in probs if p > 0.0)


def _cell_values(joint: DiscreteJoint, sel: str, encoder: Encoder | None):
    if sel == "x1":
        return [c[0] for c in joint.support()]
    if sel == "x2":
        return [c[1] for c in joint.support()]
    if sel == "y1":
        return [joint.f1[c[0]] for c in joint.support()]
    if sel == "y2":
        return [joint.f2[c[1]] for c in joint.support()]
    if sel == "x":
        return list(joint.support())
    if sel == "z":
        if encoder is None:
            raise TheoryError("selector 'z' requires an encoder")
        support = joint.support()
        if encoder.cells != support:
            mapping = encoder.mapping()
            missing = [c for c in support if c not in mapping]
            if missing:
                raise TheoryError(f"encoder is not total on the support; missing {missing[0]}")
            return [mapping[c] for c in support]
        return list(encoder.codes)
    raise TheoryError(f"invalid selector {sel!r}")


def _selector_tuple(sel) -> tuple[str, ...]:
    if isinstance(sel, str):
        return (sel,)
    return tuple(sel)


def _joint_probs(joint: DiscreteJoint, sels, encoder: Encoder | None) -> list[float]:
    """Probabilities of the joint value assignment over the selected variables."""
    names = _selector_tuple(sels)
    columns = [_cell_values(joint, s, encoder) for s in names]
    probs = [float(joint.pmf[c]) for c in joint.support()]
    acc: dict[tuple, float] = {}
    for idx, p in enumerate(probs):
        key = tuple(col[idx] for col in columns)
        acc[key] = acc.get(key, 0.0) + p
    return list(acc.values())


def variable_entropy(joint: DiscreteJoint, sel, encoder: Encoder | None = None) -> float:
    """H(sel) in bits; sel is a variable name or a tuple of names."""
    return _entropy_of_probs(_joint_probs(joint, sel, encoder))


def _clamp_mi(raw: float, clamp: bool, what: str) -> float:
    if raw < -MI_TOLERANCE:
        raise TheoryError(f"{what} = {raw!r} is negative beyond tolerance")
    if clamp and raw < 0.0:
        return 0.0
    return raw


def mutual_information(joint: DiscreteJoint, a, b, encoder: Encoder | None = None,
                       clamp: bool = True) -> float:
    """I(a;b) = H(a) + H(b) - H(a,b), clamped to 0 within 1e-12."""
    ea = variable_entropy(joint, a, encoder)
    eb = variable_entropy(joint, b, encoder)
    eab = variable_entropy(joint, _selector_tuple(a) + _selector_tuple(b), encoder)
    return _clamp_mi(ea + eb - eab, clamp, f"I({a};{b})")


def conditional_mi(joint: DiscreteJoint, a, b, given, encoder: Encoder | None = None,
                   clamp: bool = True) -> float:
    """I(a;b|given) = H(a,c) + H(b,c) - H(a,b,c) - H(c)."""
    ta, tb, tc = _selector_tuple(a), _selector_tuple(b), _selector_tuple(given)
    h_ac = variable_entropy(joint, ta + tc, encoder)
    h_bc = variable_entropy(joint, tb + tc, encoder)
    h_abc = variable_entropy(joint, ta + tb + tc, encoder)
    h_c = variable_entropy(joint, tc, encoder)
    return _clamp_mi(h_ac + h_bc - h_abc - h_c, clamp, f"I({a};{b}|{given})")


def is_sufficient(joint: DiscreteJoint, encoder: Encoder, tol: float = MI_TOLERANCE) -> bool:
    """Sufficiency for the surrogate labels: I(x;y1|z) = 0 within tol."""
    return conditional_mi(joint, "x", "y1", "z", encoder) <= tol


# ---------------------------------------------------------------------------
# bottleneck objective and encoder enumeration


@dataclass(frozen=True)
class IBConfig:
    beta: float = 4.0
    max_code_size: int | None = None

    def __post_init__(self):
        if not self.beta > 1.0:
            raise TheoryError(f"beta must be > 1, got {self.beta}")
        if self.max_code_size is not None and self.max_code_size < 1:
            raise TheoryError(f"max_code_size must be >= 1, got {self.max_code_size}")


@dataclass(frozen=True)
class LossTerms:
    i_x_z: float
    i_z_y1: float
    h_z: float
    loss: float               # I(x;z) - beta I(z;y1)
    loss_entropy_form: float  # H(z)   - beta I(z;y1)


def ib_loss_terms(joint: DiscreteJoint, encoder: Encoder, beta: float) -> LossTerms:
    i_x_z = mutual_information(joint, "x", "z", encoder)
    i_z_y1 = mutual_information(joint, "z", "y1", encoder)
    h_z = variable_entropy(joint, "z", encoder)
    return LossTerms(
        i_x_z=i_x_z,
        i_z_y1=i_z_y1,
        h_z=h_z,
        loss=i_x_z - beta * i_z_y1,
        loss_entropy_form=h_z - beta * i_z_y1,
    )


def ib_loss(joint: DiscreteJoint, encoder: Encoder, beta: float) -> float:
    """Bottleneck objective I(x;z) - beta I(z;y1).

    For deterministic encoders H(z|x) = 0, so the entropy form
    H(z) - beta I(z;y1) must agree; both are computed and compared as a
    self-check.
    """
    terms = ib_loss_terms(joint, encoder, beta)
    if abs(terms.loss - terms.loss_entropy_form) > 1e-9:
        raise TheoryError(
            "loss factorization violated for a deterministic encoder: "
            f"{terms.loss!r} vs {terms.loss_entropy_form!r}"
        )
    return terms.loss


def _iter_partition_codes(n: int) -> Iterator[tuple[int, ...]]:
    """All set partitions of range(n) as canonical restricted-growth strings."""
    codes = [0] * n

    def rec(i: int, used: int) -> Iterator[tuple[int, ...]]:
        if i == n:
            yield tuple(codes)
            return
        for c in range(used + 1):
            codes[i] = c
            yield from rec(i + 1, used + (1 if c == used else 0))

    if n == 0:
        return iter(())
    return rec(1, 1) if n > 1 else iter([(0,)])


def enumerate_encoders(joint: DiscreteJoint, max_cells: int = DEFAULT_MAX_CELLS) -> Iterator[Encoder]:
    """Every deterministic encoder of the support, up to code relabeling."""
    cells = joint.support()
    if len(cells) > max_cells:
        raise TheoryError(
            f"support has {len(cells)} cells, enumeration budget is {max_cells}"
        )
    if len(cells) == 1:
        yield Encoder(cells=cells, codes=(0,))
        return
    for codes in _iter_partition_codes(len(cells)):
        yield Encoder(cells=cells, codes=codes)


def minimize_ib(
    joint: DiscreteJoint,
    config: IBConfig | None = None,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> list[Encoder]:
    """All loss-minimizing sufficient encoders, up to code relabeling.

    Equivalent to enumerating every set partition of the support, keeping
    the sufficient ones (blocks never mix y1 values, which for
    deterministic y1 is exactly I(x;y1|z) = 0), and returning the argmin
    set of the bottleneck loss. Insufficient branches are pruned during
    enumeration rather than generated and discarded.
    """
    cfg = config or IBConfig()
    cells = joint.support()
    n = len(cells)
    if n == 0:
        raise TheoryError("joint has empty support")
    if n > max_cells:
        raise TheoryError(f"support has {n} cells, enumeration budget is {max_cells}")

    probs = [float(joint.pmf[c]) for c in cells]
    y1 = [joint.f1[c[0]] for c in cells]
    h_y1 = _entropy_of_probs(_joint_probs(joint, "y1", None))
    cap = cfg.max_code_size if cfg.max_code_size is not None else n

    best: list[tuple[int, ...]] = []
    best_loss = math.inf
    codes = [0] * n
    block_y1: list[int] = []
    block_prob: list[float] = []

    def rec(i: int) -> None:
        nonlocal best_loss
        if i == n:
            h_z = -sum(p * math.log2(p) for p in block_prob if p > 0.0)
            loss = h_z - cfg.beta * h_y1
            if loss < best_loss - MI_TOLERANCE:
                best_loss = loss
                best.clear()
                best.append(tuple(codes))
            elif loss <= best_loss + MI_TOLERANCE:
                best.append(tuple(codes))
            return
        for c in range(len(block_y1)):
            if block_y1[c] == y1[i]:
                codes[i] = c
                block_prob[c] += probs[i]
                rec(i + 1)
                block_prob[c] -= probs[i]
        if len(block_y1) < cap:
            codes[i] = len(block_y1)
            block_y1.append(y1[i])
            block_prob.append(probs[i])
            rec(i + 1)
            block_y1.pop()
            block_prob.pop()

    rec(0)
    if not best:
        raise TheoryError(
            f"no sufficient encoder exists with max_code_size={cfg.max_code_size}"
        )
    return [Encoder(cells=cells, codes=c) for c in sorted(best)]


# ---------------------------------------------------------------------------
# label filtering and the blindness audit


def filter_distribution(joint: DiscreteJoint, allowed_labels: Iterable[int]) -> DiscreteJoint:
    """Condition on f2(x2) falling in the allowed label set, renormalized."""
    allowed = {int(v) for v in allowed_labels}
    if not allowed:
        raise TheoryError("allowed label set is empty")
    keep = np.array([1.0 if v in allowed else 0.0 for v in joint.f2])
    masked = joint.pmf * keep[None, :]
    total = float(masked.sum())
    if total <= 0.0:
        raise TheoryError("filtered support is empty: no mass on the allowed labels")
    return DiscreteJoint(pmf=masked / total, f1=joint.f1, f2=joint.f2)


def _as_x1_function(encoder: Encoder) -> dict[int, int] | None:
    """The encoder as a map of x1 values, or None if it mixes x2 within an x1."""
    g: dict[int, int] = {}
    for (i, _), code in zip(encoder.cells, encoder.codes):
        if g.setdefault(i, code) != code:
            return None
    return g


@dataclass(frozen=True)
class EncoderAudit:
    """Measured information quantities for one minimizing encoder."""

    encoder: Encoder
    loss: float
    h_z: float
    i_x_z: float
    predictive_info: float        # I(z;y1), the useful part of I(x;z)
    superfluous_info: float       # I(x;z|y1), the rest
    i_x2_z: float                 # on the filtered joint
    i_y2_z: float
    i_x2_z_original: float | None  # encoder extended back to the unfiltered joint
    i_y2_z_original: float | None


@dataclass(frozen=True)
class BlindnessReport:
    blind: bool
    mi_threshold: float
    beta: float
    allowed_labels: tuple[int, ...]
    i_x1_x2: float
    i_x1_x2_filtered: float
    h_y1_filtered: float
    h_y2: float
    min_loss: float
    audits: tuple[EncoderAudit, ...]


def verify_label_blindness(
    joint: DiscreteJoint,
    allowed_labels: Iterable[int],
    config: IBConfig | None = None,
    mi_threshold: float = MI_TOLERANCE,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> BlindnessReport:
    """Filter to the allowed semantic labels, minimize the bottleneck loss,
    and measure whether any minimizing encoder carries information about
    the independent factor or its labels.

    `blind` is True when every minimizer satisfies I(x2;z) <= threshold and
    I(y2;z) <= threshold on the filtered joint and, where the encoder
    extends to the original joint (it always does when the minimizer is a
    function of x1), on the original joint as well.
    """
    cfg = config or IBConfig()
    filtered = filter_distribution(joint, allowed_labels)
    minimizers = minimize_ib(filtered, cfg, max_cells=max_cells)

    audits = []
    blind = True
    for enc in minimizers:
        terms = ib_loss_terms(filtered, enc, cfg.beta)
        superfluous = conditional_mi(filtered, "x", "z", "y1", enc)
        i_x2_z = mutual_information(filtered, "x2", "z", enc)
        i_y2_z = mutual_information(filtered, "y2", "z", enc)
        g = _as_x1_function(enc)
        i_x2_z_orig = i_y2_z_orig = None
        if g is not None and all(i in g for i, _ in joint.support()):
            extended = Encoder(
                cells=joint.support(),
                codes=tuple(g[i] for i, _ in joint.support()),
            )
            i_x2_z_orig = mutual_information(joint, "x2", "z", extended)
            i_y2_z_orig = mutual_information(joint, "y2", "z", extended)
        audits.append(
            EncoderAudit(
                encoder=enc,
                loss=terms.loss,
                h_z=terms.h_z,
                i_x_z=terms.i_x_z,
                predictive_info=terms.i_z_y1,
                superfluous_info=superfluous,
                i_x2_z=i_x2_z,
                i_y2_z=i_y2_z,
                i_x2_z_original=i_x2_z_orig,
                i_y2_z_original=i_y2_z_orig,
            )
        )
        ok = i_x2_z <= mi_threshold and i_y2_z <= mi_threshold
        if i_x2_z_orig is not None:
            ok = ok and i_x2_z_orig <= mi_threshold and i_y2_z_orig <= mi_threshold
        else:
            ok = False  # cannot certify blindness without the extension
        blind = blind and ok

    return BlindnessReport(
        blind=blind,
        mi_threshold=mi_threshold,
        beta=cfg.beta,
        allowed_labels=tuple(sorted({int(v) for v in allowed_labels})),
        i_x1_x2=mutual_information(joint, "x1", "x2"),
        i_x1_x2_filtered=mutual_information(filtered, "x1", "x2"),
        h_y1_filtered=variable_entropy(filtered, "y1"),
        h_y2=variable_entropy(joint, "y2"),
        min_loss=min(a.loss for a in audits),
        audits=tuple(audits),
    )


# ---------------------------------------------------------------------------
# error lower bound and overlap risk


def fano_error_lower_bound(h_y: float, i_xy: float, card: int) -> float:
    """Smallest error probability e compatible with
    H_b(e) + e log2(card - 1) >= h_y - i_xy, for a card-ary label.

    The left side is strictly increasing on [0, 1 - 1/card], so the root is
    found by bisection to 1e-10. Returns 0 when i_xy >= h_y.
    """
    if card < 2:
        raise TheoryError(f"label cardinality must be >= 2, got {card}")
    slack = 1e-9
    if not (-slack <= i_xy <= h_y + slack):
        raise TheoryError(f"need 0 <= i_xy <= h_y, got i_xy={i_xy}, h_y={h_y}")
    if h_y > math.log2(card) + slack:
        raise TheoryError(f"h_y={h_y} exceeds log2(card)={math.log2(card)}")
    target = h_y - i_xy
    if target <= 0.0:
        return 0.0
    e_max = 1.0 - 1.0 / card
    log_rest = math.log2(card - 1) if card > 2 else 0.0

    def lhs(e: float) -> float:
        return binary_entropy(e) + e * log_rest

    if target >= lhs(e_max):
        return e_max
    lo, hi = 0.0, e_max
    while hi - lo > 1e-10:
        mid = (lo + hi) / 2.0
        if lhs(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def _validated_label_pmf(label_pmf) -> np.ndarray:
    p = np.asarray(label_pmf, dtype=np.float64).ravel()
    if p.size < 2:
        raise TheoryError("need at least 2 classes")
    if np.any(p < 0) or abs(float(p.sum()) - 1.0) > 1e-9:
        raise TheoryError("invalid label pmf")
    if int(np.count_nonzero(p)) < 2:
        raise TheoryError("need at least 2 labels with positive probability")
    return p / p.sum()


def overlap_risk_exact(label_pmf, n_id: int) -> float:
    """P(fresh label unseen among n_id i.i.d. draws) = sum_y p_y (1 - p_y)^n."""
    p = _validated_label_pmf(label_pmf)
    if n_id < 1:
        raise TheoryError(f"n_id must be >= 1, got {n_id}")
    return float(np.sum(p * (1.0 - p) ** n_id))


def simulate_overlap_risk(
    label_pmf,
    n_id: int,
    trials: int,
    seed: int,
) -> tuple[float, float]:
    """Monte Carlo estimate of the unseen-label risk.

    Each trial draws n_id labels i.i.d. from label_pmf as the ID label set,
    then one fresh label; a miss is a fresh label absent from the draws.
    Returns (miss rate, binomial standard error).
    """
    p = _validated_label_pmf(label_pmf)
    if n_id < 1:
        raise TheoryError(f"n_id must be >= 1, got {n_id}")
    if trials < 1:
        raise TheoryError(f"trials must be >= 1, got {trials}")
    rng = np.random.Generator(np.random.Philox(seed))
    cum = np.cumsum(p)
    cum[-1] = 1.0
    misses = 0
    chunk = max(1, int(2e7) // (n_id + 1))
    done = 0
    while done < trials:
        t = min(chunk, trials - done)
        u = rng.random((t, n_id + 1))
        draws = np.minimum(np.searchsorted(cum, u, side="right"), p.size - 1)
        fresh = draws[:, -1]
        seen = (draws[:, :-1] == fresh[:, None]).any(axis=1)
        misses += int(np.count_nonzero(~seen))
        done += t
    estimate = misses / trials
    std_error = math.sqrt(max(estimate * (1.0 - estimate), 0.0) / trials)
    return estimate, std_error
