"""Model-agnostic relevance maps for a black-box pair scorer.

The image is partitioned by a regular cell grid; binary masks switch cells
off; the black-box similarity of the masked probe against a fixed reference
is summarised by a locally weighted linear surrogate whose per-cell
coefficients, clamped at zero, broadcast back to pixels as the relevance
map. The scorer is an arbitrary callable ``scorer(probe_id, reference_id,
masks) -> scores`` so the pipeline never needs the model in-process; a
file-and-subprocess adapter and a planted linear scorer (for tests and
demos) are included.

Surrogate weighting: a mask that keeps fraction rho of the cells sits at
distance d = 1 - rho from the unperturbed image and gets weight
exp(-d^2 / kernel_width^2). The fit solves the weighted least squares with
an optional ridge penalty on the cell coefficients (never on the
intercept). With ridge 0 a rank-deficient design raises instead of
returning one of many solutions.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .datamodel import Heatmap, SampleKey
from .errors import DomainError, ParseError, ScorerError, SingularityError, UsageError

Scorer = Callable[[object, object, np.ndarray], np.ndarray]


@dataclass(frozen=True, slots=True)
class SegmentationGrid:
    """Regular cell grid over an image; the last row/column absorb remainders."""

    image_w: int
    image_h: int
    cells_x: int
    cells_y: int

    def __post_init__(self):
        for label, value in (
            ("image_w", self.image_w), ("image_h", self.image_h),
            ("cells_x", self.cells_x), ("cells_y", self.cells_y),
        ):
            if value < 1:
                raise DomainError(f"{label} must be >= 1, got {value}")
        if self.cells_x > self.image_w or self.cells_y > self.image_h:
            raise DomainError("cannot have more cells than pixels along an axis")

    @property
    def n_cells(self) -> int:
        return self.cells_x * self.cells_y

    def cell_index_map(self) -> np.ndarray:
        """(image_h, image_w) array of flat cell indices, row-major over cells."""
        base_w = self.image_w // self.cells_x
        base_h = self.image_h // self.cells_y
        col = np.minimum(np.arange(self.image_w) // base_w, self.cells_x - 1)
        row = np.minimum(np.arange(self.image_h) // base_h, self.cells_y - 1)
        return row[:, None] * self.cells_x + col[None, :]


@dataclass(frozen=True)
class MaskSample:
    """One perturbation: the cell mask that was kept and its black-box score."""

    mask: np.ndarray
    score: float


@dataclass(frozen=True)
class SurrogateFit:
    """Signed per-cell coefficients and intercept of the local linear fit."""

    coefficients: np.ndarray
    intercept: float


@dataclass(frozen=True)
class ExplainOutcome:
    heatmap: Heatmap
    surrogate: SurrogateFit
    samples: tuple[MaskSample, ...]


@dataclass(frozen=True)
class LimeConfig:
    grid: SegmentationGrid
    n_samples: int = 1000
    keep_prob: float = 0.5
    kernel_width: float = 0.25
    ridge: float = 1e-3
    seed: int = 0
    batch_size: int = 256

    def __post_init__(self):
        if self.batch_size < 1:
            raise DomainError("batch_size must be >= 1")


def sample_masks(n: int, cells: int, keep_prob: float, seed: int) -> np.ndarray:
    """(n, cells) 0/1 masks; row 0 is always the unperturbed all-ones mask,
    rows 1..n-1 keep each cell independently with probability keep_prob."""
    if n < 1:
        raise UsageError(f"need at least one mask, got n={n}")
    if cells < 1:
        raise UsageError(f"need at least one cell, got cells={cells}")
    if not 0.0 < keep_prob < 1.0:
        raise DomainError(f"keep_prob must lie strictly inside (0, 1), got {keep_prob}")
    rng = np.random.default_rng(seed)
    masks = np.ones((n, cells), dtype=np.uint8)
    if n > 1:
        masks[1:] = rng.random((n - 1, cells)) < keep_prob
    return masks


def fit_surrogate(
    masks, scores, kernel_width: float = 0.25, ridge: float = 1e-3,
) -> SurrogateFit:
    """Weighted linear surrogate of scores as a function of the cell mask."""
    mask_matrix = np.asarray(masks, dtype=np.float64)
    score_vector = np.asarray(scores, dtype=np.float64)
    if mask_matrix.ndim != 2 or mask_matrix.size == 0:
        raise UsageError("masks must form a non-empty 2-D array")
    if score_vector.ndim != 1 or score_vector.shape[0] != mask_matrix.shape[0]:
        raise UsageError(
            f"got {score_vector.shape} scores for {mask_matrix.shape[0]} masks")
    if not np.all(np.isfinite(score_vector)):
        raise DomainError("scores must be finite")
    if kernel_width <= 0.0:
        raise DomainError("kernel_width must be positive")
    if ridge < 0.0:
        raise DomainError("ridge must be >= 0")
    n, cells = mask_matrix.shape
    distance = 1.0 - mask_matrix.mean(axis=1)
    sqrt_w = np.exp(-(distance ** 2) / (2.0 * kernel_width ** 2))
    # sqrt of exp(-d^2/kw^2) keeps the weighted normal equations implicit
    design = np.column_stack([np.ones(n), mask_matrix]) * sqrt_w[:, None]
    target = score_vector * sqrt_w
    if ridge > 0.0:
        penalty = np.zeros((cells, cells + 1))
        penalty[:, 1:] = np.sqrt(ridge) * np.eye(cells)
        design = np.vstack([design, penalty])
        target = np.concatenate([target, np.zeros(cells)])
    solution, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if ridge == 0.0 and rank < cells + 1:
        raise SingularityError(
            f"surrogate design has rank {rank} < {cells + 1}; "
            f"add masks or use ridge > 0")
    return SurrogateFit(coefficients=solution[1:].copy(), intercept=float(solution[0]))


def coefficients_to_heatmap(
    coefficients, grid: SegmentationGrid, key: SampleKey | None = None,
) -> Heatmap:
    """Broadcast per-cell coefficients to pixels, clamping negatives to zero."""
    coeffs = np.asarray(coefficients, dtype=np.float64)
    if coeffs.ndim != 1 or coeffs.shape[0] != grid.n_cells:
        raise UsageError(
            f"expected {grid.n_cells} coefficients, got shape {coeffs.shape}")
    if not np.all(np.isfinite(coeffs)):
        raise DomainError("coefficients must be finite")
    relevance = np.maximum(coeffs, 0.0)
    return Heatmap(relevance[grid.cell_index_map()], key=key)


def explain_full(
    probe_id, reference_id, scorer: Scorer, config: LimeConfig,
) -> ExplainOutcome:
    """Run the full mask/score/fit pipeline and keep every intermediate."""
    masks = sample_masks(
        config.n_samples, config.grid.n_cells, config.keep_prob, config.seed)
    scores = np.empty(masks.shape[0], dtype=np.float64)
    for start in range(0, masks.shape[0], config.batch_size):
        batch = masks[start:start + config.batch_size]
        batch_index = start // config.batch_size
        try:
            out = np.asarray(
                scorer(probe_id, reference_id, batch), dtype=np.float64)
        except Exception as exc:
            raise ScorerError(f"scorer failed on batch {batch_index}: {exc}") from exc
        if out.shape != (batch.shape[0],):
            raise ScorerError(
                f"scorer returned shape {out.shape} for batch {batch_index} "
                f"of {batch.shape[0]} masks")
        bad = np.nonzero(~np.isfinite(out))[0]
        if bad.size:
            raise ScorerError(
                f"non-finite score at mask row {start + int(bad[0])} "
                f"(batch {batch_index})")
        scores[start:start + batch.shape[0]] = out
    fit = fit_surrogate(masks, scores, config.kernel_width, config.ridge)
    key = probe_id if isinstance(probe_id, SampleKey) else None
    heatmap = coefficients_to_heatmap(fit.coefficients, config.grid, key=key)
    samples = tuple(
        MaskSample(masks[i], float(scores[i])) for i in range(masks.shape[0]))
    return ExplainOutcome(heatmap=heatmap, surrogate=fit, samples=samples)


def explain(probe_id, reference_id, scorer: Scorer, config: LimeConfig) -> Heatmap:
    """Relevance map of the probe under the given black-box pair scorer."""
    return explain_full(probe_id, reference_id, scorer, config).heatmap


class PlantedLinearScorer:
    """Deterministic in-process scorer: score = intercept + mask . weights.

    Stands in for a real masked-image scorer in tests and demos; the fitted
    surrogate of this scorer is the planted linear rule itself.
    """

    def __init__(self, weights, intercept: float = 0.0):
        self.weights = np.asarray(weights, dtype=np.float64)
        if self.weights.ndim != 1:
            raise UsageError("planted weights must be a vector")
        self.intercept = float(intercept)

    def __call__(self, probe_id, reference_id, masks) -> np.ndarray:
        return self.intercept + np.asarray(masks, dtype=np.float64) @ self.weights


# --------------------------------------------------------------------------
# file wire protocol for out-of-process scorers


def write_mask_batch(masks, path) -> None:
    """Masks file: header ``M <n_rows> <cells>`` then one 0/1 row per mask."""
    mask_matrix = np.asarray(masks)
    if mask_matrix.ndim != 2:
        raise UsageError("masks must form a 2-D array")
    lines = [f"M {mask_matrix.shape[0]} {mask_matrix.shape[1]}"]
    for row in mask_matrix:
        lines.append(",".join("1" if v else "0" for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_mask_batch(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().split()
        if len(head) != 3 or head[0] != "M":
            raise ParseError("expected header 'M <n_rows> <cells>'", line=1)
        try:
            n, cells = int(head[1]), int(head[2])
        except ValueError:
            raise ParseError("mask counts must be integers", line=1) from None
        masks = np.empty((n, cells), dtype=np.uint8)
        for r in range(n):
            line = fh.readline()
            if not line:
                raise ParseError(f"expected {n} mask rows, found {r}", line=r + 1)
            entries = line.strip().split(",")
            if len(entries) != cells:
                raise ParseError(
                    f"mask row {r} has {len(entries)} entries, expected {cells}",
                    line=r + 2)
            for c, text in enumerate(entries):
                if text == "0":
                    masks[r, c] = 0
                elif text == "1":
                    masks[r, c] = 1
                else:
                    raise ParseError(
                        f"mask entries must be 0 or 1, got {text!r}", line=r + 2)
    return masks


def write_score_lines(scores, path) -> None:
    """Scores file: one decimal score per line, aligned with the mask rows."""
    values = np.asarray(scores, dtype=np.float64).ravel()
    Path(path).write_text(
        "\n".join(repr(float(v)) for v in values) + "\n",
        encoding="utf-8", newline="\n")


def read_score_lines(path, expected: int) -> np.ndarray:
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise ScorerError(
                    f"scores line {lineno} is not a decimal number: {text!r}"
                ) from None
    if len(values) != expected:
        raise ScorerError(
            f"scorer wrote {len(values)} scores for {expected} masks")
    return np.array(values, dtype=np.float64)


class ExternalCommandScorer:
    """Scorer adapter that shells out per batch over the file wire protocol.

    For each batch the masks file is written into a fresh temporary
    directory, the command is invoked with the masks path and the scores
    path appended as its two final arguments, and the scores file is read
    back. The command must exit 0 and write one decimal score per mask line.
    """

    def __init__(self, command: str | Sequence[str]):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise UsageError("scorer command must not be empty")
        self.argv = tuple(str(part) for part in argv)

    def __call__(self, probe_id, reference_id, masks) -> np.ndarray:
        mask_matrix = np.asarray(masks)
        with tempfile.TemporaryDirectory(prefix="perifuse-scorer-") as tmp:
            masks_path = str(Path(tmp) / "masks.csv")
            scores_path = str(Path(tmp) / "scores.csv")
            write_mask_batch(mask_matrix, masks_path)
            proc = subprocess.run(
                [*self.argv, masks_path, scores_path],
                capture_output=True, text=True)
            if proc.returncode != 0:
                detail = proc.stderr.strip()[:500]
                raise ScorerError(
                    f"scorer command exited {proc.returncode}"
                    + (f": {detail}" if detail else ""))
            try:
                return read_score_lines(scores_path, expected=mask_matrix.shape[0])
            except FileNotFoundError:
                raise ScorerError(
                    "scorer command exited 0 but wrote no scores file") from None
