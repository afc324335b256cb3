"""Closed-form mask and field metrics.

Mask quality: confusion counts, IoU, F1, pooled precision-recall area.
Field quality: MSE, PSNR (inf sentinel on exact match), mean local SSIM
over 8x8 sliding windows. Empty-vs-empty masks score IoU = F1 = 1 so
sequence averages stay meaningful on unburned frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import BadRange, GridTooSmall, NoPositives, SpecMismatch
from .fields import MaskFrame, MaskSequence, ScalarField

SSIM_WINDOW = 8


@dataclass(frozen=True)
class ScoredFrame:
    """Per-cell real-valued prediction paired with its binary truth."""

    scores: ScalarField
    truth: MaskFrame

    def __post_init__(self):
        if self.scores.spec != self.truth.spec:
            raise SpecMismatch("score and truth grids differ")


def confusion(pred: MaskFrame, truth: MaskFrame) -> tuple[int, int, int, int]:
    """(TP, FP, FN, TN) cell counts."""
    if pred.spec != truth.spec:
        raise SpecMismatch("prediction and truth grids differ")
    p = pred.bits.astype(bool)
    t = truth.bits.astype(bool)
    tp = int(np.sum(p & t))
    fp = int(np.sum(p & ~t))
    fn = int(np.sum(~p & t))
    tn = int(np.sum(~p & ~t))
    return tp, fp, fn, tn


def iou(pred: MaskFrame, truth: MaskFrame) -> float:
    """Intersection over union; 1.0 when both masks are empty."""
    tp, fp, fn, _ = confusion(pred, truth)
    union = tp + fp + fn
    return 1.0 if union == 0 else tp / union


def f1(pred: MaskFrame, truth: MaskFrame) -> float:
    """Harmonic mean of precision and recall; 1.0 on empty-vs-empty."""
    tp, fp, fn, _ = confusion(pred, truth)
    if tp + fp + fn == 0:
        return 1.0
    denom = 2 * tp + fp + fn  # == (TP+FP) + (TP+FN)
    return 2 * tp / denom


def pr_curve(frames: list[ScoredFrame]) -> tuple[np.ndarray, np.ndarray]:
    """(recall, precision) at every distinct pooled score, descending.

    Cells are pooled over all frames in frame order then row-major cell
    order; tied scores share one threshold.
    """
    if not frames:
        raise NoPositives("no frames given")
    scores = np.concatenate([f.scores.values.ravel() for f in frames])
    labels = np.concatenate([f.truth.bits.ravel() for f in frames]).astype(np.int64)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise NoPositives("precision-recall area is undefined without positive cells")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    tp = np.cumsum(y)
    fp = np.cumsum(1 - y)
    # last index of each tie group = positions where the next score differs
    group_end = np.nonzero(np.append(s[1:] != s[:-1], True))[0]
    precision = tp[group_end] / (tp[group_end] + fp[group_end])
    recall = tp[group_end] / n_pos
    return recall, precision


def auprc(frames: list[ScoredFrame]) -> float:
    """Area under the precision-recall curve, cells pooled across frames.

    Step-rule integration of precision over recall:
    AP = sum_i (R_i - R_{i-1}) * P_i with right-continuous precision.
    """
    recall, precision = pr_curve(frames)
    prev = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev) * precision))


def mse_frames(pred: ScalarField, truth: ScalarField) -> float:
    """Mean squared cellwise difference."""
    if pred.spec != truth.spec:
        raise SpecMismatch("prediction and truth grids differ")
    d = pred.values - truth.values
    return float(np.mean(d * d))


def psnr(pred: ScalarField, truth: ScalarField, max_value: float) -> float:
    """10*log10(MAX^2 / MSE); math.inf when the frames match exactly."""
    if max_value <= 0:
        raise BadRange(f"max_value must be > 0, got {max_value}")
    mse = mse_frames(pred, truth)
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(max_value * max_value / mse)


def _window_stats(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    win = sliding_window_view(a, (SSIM_WINDOW, SSIM_WINDOW))
    flat = win.reshape(win.shape[0], win.shape[1], -1)
    return flat.mean(axis=2), flat


def ssim(pred: ScalarField, truth: ScalarField, max_value: float) -> float:
    """Mean structural similarity over 8x8 sliding windows (stride 1).

    Window statistics are population moments; C1 = (0.01*MAX)^2 and
    C2 = (0.03*MAX)^2 stabilize the ratio.
    """
    if pred.spec != truth.spec:
        raise SpecMismatch("prediction and truth grids differ")
    if max_value <= 0:
        raise BadRange(f"max_value must be > 0, got {max_value}")
    h, w = pred.spec.shape
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise GridTooSmall(f"SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}")
    mu_x, fx = _window_stats(pred.values)
    mu_y, fy = _window_stats(truth.values)
    var_x = (fx * fx).mean(axis=2) - mu_x * mu_x
    var_y = (fy * fy).mean(axis=2) - mu_y * mu_y
    cov = (fx * fy).mean(axis=2) - mu_x * mu_y
    c1 = (0.01 * max_value) ** 2
    c2 = (0.03 * max_value) ** 2
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


@dataclass(frozen=True)
class FrameMetrics:
    """Metrics of one frame; fields not applicable to the modality are None."""

    index: int
    iou: float | None = None
    f1: float | None = None
    mse: float | None = None
    psnr: float | None = None
    ssim: float | None = None


@dataclass(frozen=True)
class MetricReport:
    """Aggregate metrics plus the per-frame table.

    Mask aggregates are means over frames; the precision-recall area pools
    cells across all frames; PSNR is computed from the pooled MSE.
    """

    auprc: float | None = None
    f1: float | None = None
    iou: float | None = None
    mse: float | None = None
    psnr: float | None = None
    ssim: float | None = None
    per_frame: tuple = ()

    def __post_init__(self):
        for name in ("auprc", "f1", "iou"):
            v = getattr(self, name)
            if v is not None and not (0.0 <= v <= 1.0):
                raise BadRange(f"{name}={v} outside [0, 1]")
        if self.mse is not None and self.mse < 0:
            raise BadRange(f"mse={self.mse} must be >= 0")
        if self.ssim is not None and not (-1.0 <= self.ssim <= 1.0):
            raise BadRange(f"ssim={self.ssim} outside [-1, 1]")


def evaluate_mask_sequences(
    pred: MaskSequence,
    truth: MaskSequence,
    scores: list[ScalarField] | None = None,
) -> MetricReport:
    """Frame-paired mask metrics; optional soft scores feed the PR sweep.

    Without soft scores the PR sweep runs on the binary prediction bits.
    AUPRC is None when the truth contains no positive cell at all.
    """
    if len(pred) != len(truth):
        raise SpecMismatch(f"{len(pred)} predicted vs {len(truth)} truth frames")
    if pred.spec != truth.spec:
        raise SpecMismatch("prediction and truth grids differ")
    per = []
    mses = []
    for i, (p, t) in enumerate(zip(pred.frames, truth.frames)):
        m = float(np.mean((p.bits.astype(np.float64) - t.bits) ** 2))
        mses.append(m)
        per.append(FrameMetrics(index=i, iou=iou(p, t), f1=f1(p, t), mse=m))
    if scores is None:
        scored = [
            ScoredFrame(ScalarField(p.spec, p.bits.astype(np.float64)), t)
            for p, t in zip(pred.frames, truth.frames)
        ]
    else:
        scored = [ScoredFrame(s, t) for s, t in zip(scores, truth.frames)]
    try:
        area = auprc(scored)
    except NoPositives:
        area = None
    return MetricReport(
        auprc=area,
        f1=float(np.mean([fm.f1 for fm in per])),
        iou=float(np.mean([fm.iou for fm in per])),
        mse=float(np.mean(mses)),
        per_frame=tuple(per),
    )


def evaluate_field_sequences(
    pred: list[ScalarField], truth: list[ScalarField], max_value: float
) -> MetricReport:
    """Frame-paired field metrics: MSE, PSNR (pooled), mean SSIM."""
    if len(pred) != len(truth):
        raise SpecMismatch(f"{len(pred)} predicted vs {len(truth)} truth frames")
    per = []
    for i, (p, t) in enumerate(zip(pred, truth)):
        per.append(
            FrameMetrics(
                index=i,
                mse=mse_frames(p, t),
                psnr=psnr(p, t, max_value),
                ssim=ssim(p, t, max_value),
            )
        )
    pooled_mse = float(np.mean([fm.mse for fm in per]))
    pooled_psnr = (
        math.inf if pooled_mse == 0 else 10.0 * math.log10(max_value**2 / pooled_mse)
    )
    return MetricReport(
        mse=pooled_mse,
        psnr=pooled_psnr,
        ssim=float(np.mean([fm.ssim for fm in per])),
        per_frame=tuple(per),
    )
