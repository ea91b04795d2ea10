"""Affine score-level fusion trained with prior-weighted logistic regression.

The fused score for trial j over N component systems is

    f_j = a0 + a1 * s_1j + ... + aN * s_Nj

and training minimizes the convex objective

      (prior / |G|)       * sum_genuine  log(1 + exp(-(f_j + logit prior)))
    + ((1 - prior) / |I|)  * sum_impostor log(1 + exp(+(f_j + logit prior)))
    + (regularization / 2) * ||a1..aN||^2        (bias unpenalized)

by damped Newton iteration from an all-zero start, run to a gradient norm
of 1e-8 or an iteration cap. The per-class weighting keeps the heavily
imbalanced impostor mass (tens of impostors per genuine trial) from
dominating the fit, and makes the minimizer estimate the log-likelihood
ratio of the score vector independently of the class mix. The small default
ridge keeps desk-scale separable problems well posed; with regularization 0
and separable classes the weight norm diverges, training stops early, and
the model is flagged ``separable`` (its decision ranking is still usable).

Cross-validation here is subject-disjoint: subjects are dealt into k folds
by a stable hash, a pair is held out by fold f when either of its subjects
is in fold f, and fold-f training pairs touch neither.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import AlignmentError, DomainError, ParseError, UsageError
from .metrics import ScoreSet
from .protocol import LABEL_GENUINE, ComparisonPair

GRADIENT_TOL = 1e-8
MAX_ITERATIONS = 10000
DEFAULT_RIDGE = 1e-6
_DIVERGENCE_NORM = 1e8


@dataclass(frozen=True)
class FusionModel:
    """Affine fusion rule: bias plus one weight per component system."""

    bias: float
    weights: np.ndarray
    system_names: tuple[str, ...]
    trained_on: str = ""
    separable: bool = False

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True)
        names = tuple(self.system_names)
        if w.ndim != 1 or w.size == 0:
            raise UsageError("fusion weights must be a non-empty vector")
        if len(names) != w.size:
            raise UsageError(
                f"{w.size} weights need {w.size} system names, got {len(names)}")
        if len(set(names)) != len(names):
            raise UsageError("system names must be unique")
        if not (np.isfinite(self.bias) and np.all(np.isfinite(w))):
            raise DomainError("fusion parameters must be finite")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "system_names", names)


def _system_names(score_sets: Sequence[ScoreSet]) -> tuple[str, ...]:
    names = [ss.system or f"system{k + 1}" for k, ss in enumerate(score_sets)]
    if len(set(names)) != len(names):
        raise UsageError(f"score sets carry duplicate system names {names}")
    return tuple(names)


def _aligned_matrix(score_sets: Sequence[ScoreSet]):
    """Common pair tuple and the (n, N) score matrix of aligned score sets."""
    if not score_sets:
        raise UsageError("at least one score set is required")
    base = score_sets[0].pairs
    for ss in score_sets[1:]:
        if ss.pairs is not base and ss.pairs != base:
            raise AlignmentError("score sets are not aligned to one pair list")
    matrix = np.column_stack([ss.values for ss in score_sets])
    if not np.all(np.isfinite(matrix)):
        raise DomainError("scores must be finite")
    return base, matrix


def apply_fusion(model: FusionModel, score_sets: Sequence[ScoreSet]) -> ScoreSet:
    """Fuse aligned per-system scores; order must match the model's systems."""
    if len(score_sets) != len(model.system_names):
        raise UsageError(
            f"model fuses {len(model.system_names)} systems, got {len(score_sets)}")
    pairs, matrix = _aligned_matrix(score_sets)
    fused = model.bias + matrix @ model.weights
    return ScoreSet(pairs, fused, metric="fused", system="+".join(model.system_names))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _training_arrays(pairs, matrix, prior):
    n = matrix.shape[0]
    is_genuine = np.fromiter(
        (p.label == LABEL_GENUINE for p in pairs), dtype=bool, count=n)
    n_g = int(is_genuine.sum())
    n_i = n - n_g
    if n_g == 0 or n_i == 0:
        raise UsageError("training requires both genuine and impostor trials")
    design = np.column_stack([np.ones(n), matrix])
    sign = np.where(is_genuine, 1.0, -1.0)
    sample_w = np.where(is_genuine, prior / n_g, (1.0 - prior) / n_i)
    offset = float(np.log(prior / (1.0 - prior)))
    return design, sign, sample_w, offset


def fusion_loss(
    bias: float,
    weights,
    score_sets: Sequence[ScoreSet],
    prior: float = 0.5,
    regularization: float = 0.0,
) -> float:
    """The training objective at the given parameters (for diagnostics/tests)."""
    if not 0.0 < prior < 1.0:
        raise DomainError(f"prior must lie strictly inside (0, 1), got {prior}")
    if regularization < 0.0:
        raise DomainError("regularization must be >= 0")
    pairs, matrix = _aligned_matrix(score_sets)
    design, sign, sample_w, offset = _training_arrays(pairs, matrix, prior)
    a = np.concatenate(([float(bias)], np.asarray(weights, dtype=np.float64)))
    if a.size != design.shape[1]:
        raise UsageError(f"expected {design.shape[1] - 1} weights")
    z = design @ a + offset
    penalty = 0.5 * regularization * float(np.dot(a[1:], a[1:]))
    return float(np.sum(sample_w * np.logaddexp(0.0, -sign * z))) + penalty


def train_fusion(
    score_sets: Sequence[ScoreSet],
    prior: float = 0.5,
    regularization: float = DEFAULT_RIDGE,
    trained_on: str = "all",
) -> FusionModel:
    """Fit fusion weights on labelled, aligned per-system score sets."""
    if not 0.0 < prior < 1.0:
        raise DomainError(f"prior must lie strictly inside (0, 1), got {prior}")
    if regularization < 0.0:
        raise DomainError("regularization must be >= 0")
    names = _system_names(score_sets)
    pairs, matrix = _aligned_matrix(score_sets)
    design, sign, sample_w, offset = _training_arrays(pairs, matrix, prior)
    n_params = design.shape[1]
    reg_mask = np.ones(n_params)
    reg_mask[0] = 0.0

    def loss(a):
        z = design @ a + offset
        return (float(np.sum(sample_w * np.logaddexp(0.0, -sign * z)))
                + 0.5 * regularization * float(np.dot(a[1:], a[1:])))

    a = np.zeros(n_params)
    value = loss(a)
    separable = False
    converged = False
    for _ in range(MAX_ITERATIONS):
        z = design @ a + offset
        residual = sample_w * (-sign) * _sigmoid(-sign * z)
        gradient = design.T @ residual + regularization * (reg_mask * a)
        if float(np.linalg.norm(gradient)) <= GRADIENT_TOL:
            converged = True
            break
        p = _sigmoid(z)
        curvature = sample_w * p * (1.0 - p)
        hessian = (design * curvature[:, None]).T @ design
        hessian[np.arange(n_params), np.arange(n_params)] += regularization * reg_mask
        try:
            step = np.linalg.solve(hessian, -gradient)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(hessian, -gradient, rcond=None)
        if not np.all(np.isfinite(step)):
            separable = True
            break
        descent = float(gradient @ step)
        shrink = 1.0
        moved = False
        for _ in range(60):
            candidate = a + shrink * step
            candidate_value = loss(candidate)
            if candidate_value <= value + 1e-4 * shrink * descent:
                a = candidate
                value = candidate_value
                moved = True
                break
            shrink *= 0.5
        if not moved:
            # loss flat at float precision while the gradient is not yet
            # below tolerance: separable data driving weights outward
            separable = True
            break
        if float(np.linalg.norm(a)) > _DIVERGENCE_NORM:
            separable = True
            break
    if not converged and not separable:
        separable = True
    if regularization == 0.0 and not separable:
        # a fitted rule that strictly separates the training scores proves
        # the unregularized optimum sits at infinity; the returned iterate
        # still defines a usable decision boundary
        z = design @ a + offset
        genuine_side = sign > 0
        if float(np.min(z[genuine_side])) > float(np.max(z[~genuine_side])):
            separable = True
    return FusionModel(
        bias=float(a[0]),
        weights=a[1:],
        system_names=names,
        trained_on=trained_on,
        separable=separable,
    )


def subject_disjoint_folds(
    pairs: Sequence[ComparisonPair], k: int,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """(train_indices, test_indices) per fold, disjoint at the subject level.

    Subjects are ordered by the SHA-256 of their id (stable across runs and
    processes) and dealt round-robin into k folds. A pair lands in test fold
    f when either subject belongs to fold f; fold-f training pairs touch no
    fold-f subject. k equal to the subject count gives leave-one-subject-out.
    """
    if k < 2:
        raise UsageError(f"k must be >= 2, got {k}")
    pairs = list(pairs)
    if not pairs:
        raise UsageError("no pairs to split")
    subjects = sorted(
        {p.probe.subject_id for p in pairs} | {p.gallery.subject_id for p in pairs})
    if len(subjects) < k:
        raise UsageError(f"cannot split {len(subjects)} subjects into {k} folds")
    dealt = sorted(
        subjects,
        key=lambda s: (hashlib.sha256(s.encode("utf-8")).hexdigest(), s))
    fold_of = {s: i % k for i, s in enumerate(dealt)}
    n = len(pairs)
    probe_fold = np.fromiter(
        (fold_of[p.probe.subject_id] for p in pairs), dtype=np.int64, count=n)
    gallery_fold = np.fromiter(
        (fold_of[p.gallery.subject_id] for p in pairs), dtype=np.int64, count=n)
    folds = []
    for f in range(k):
        in_test = (probe_fold == f) | (gallery_fold == f)
        folds.append((np.nonzero(~in_test)[0], np.nonzero(in_test)[0]))
    return folds


def crossval_fused_scores(
    score_sets: Sequence[ScoreSet],
    k: int = 2,
    prior: float = 0.5,
    regularization: float = DEFAULT_RIDGE,
) -> ScoreSet:
    """Held-out fused scores pooled over subject-disjoint folds.

    Each fold's model is trained on pairs touching no test-fold subject and
    applied to that fold's held-out pairs. A pair whose two subjects land in
    different folds is held out twice, once under each covering fold's model,
    so the pooled set can exceed the input pair count.
    """
    names = _system_names(score_sets)
    pairs, matrix = _aligned_matrix(score_sets)
    folds = subject_disjoint_folds(pairs, k)
    pooled_pairs: list[ComparisonPair] = []
    pooled_values = []
    for fold_index, (train_idx, test_idx) in enumerate(folds):
        train_pairs = tuple(pairs[j] for j in train_idx)
        train_sets = [
            ScoreSet(train_pairs, ss.values[train_idx], ss.metric, ss.system)
            for ss in score_sets
        ]
        model = train_fusion(
            train_sets, prior, regularization,
            trained_on=f"complement of fold {fold_index}")
        pooled_values.append(model.bias + matrix[test_idx] @ model.weights)
        pooled_pairs.extend(pairs[j] for j in test_idx)
    return ScoreSet(
        tuple(pooled_pairs), np.concatenate(pooled_values),
        metric="fused", system="+".join(names))


# --------------------------------------------------------------------------
# model files


def write_fusion_model(model: FusionModel, path) -> None:
    lines = [f"bias = {repr(model.bias)}"]
    for name, weight in zip(model.system_names, model.weights):
        lines.append(f"weight.{name} = {repr(float(weight))}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_fusion_model(path) -> FusionModel:
    bias = None
    names: list[str] = []
    weights: list[float] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError("expected 'key = value'", line=lineno)
            key, _, value = line.partition("=")
            key = key.strip()
            try:
                number = float(value.strip())
            except ValueError:
                raise ParseError(
                    f"value for {key!r} must be a decimal number", line=lineno
                ) from None
            if key == "bias":
                if bias is not None:
                    raise ParseError("duplicate bias entry", line=lineno)
                bias = number
            elif key.startswith("weight."):
                name = key[len("weight."):]
                if not name:
                    raise ParseError("weight entry is missing a system name", line=lineno)
                names.append(name)
                weights.append(number)
            else:
                raise ParseError(f"unknown model key {key!r}", line=lineno)
    if bias is None:
        raise ParseError("model file is missing a bias entry")
    if not names:
        raise ParseError("model file has no weight entries")
    return FusionModel(bias, np.array(weights), tuple(names))
