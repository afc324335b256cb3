"""Matplotlib renderings written next to the delimited report files.

Everything draws through the Agg backend so the CLI works headless; each
function writes one PNG and returns its path.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fields import MaskFrame, MaskSequence


def save_metric_curves(report, path):
    """Per-frame metric lines (whichever of iou/f1/mse/ssim are present)."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    idx = [fm.index for fm in report.per_frame]
    drew = False
    for name, style in (("iou", "o-"), ("f1", "s-"), ("ssim", "^-"), ("mse", "d--")):
        vals = [getattr(fm, name) for fm in report.per_frame]
        if any(v is not None for v in vals):
            ax.plot(idx, vals, style, label=name.upper(), markersize=3)
            drew = True
    ax.set_xlabel("frame")
    ax.set_ylabel("score")
    ax.grid(alpha=0.3)
    if drew:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_pr_curve(recall, precision, area, path):
    """Step-style precision-recall curve with the integrated area."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5, 4.5))
    ax.step(recall, precision, where="post")
    ax.fill_between(recall, precision, step="post", alpha=0.2)
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.set_xlim(0, 1.02)
    ax.set_ylim(0, 1.02)
    ax.set_title(f"AUPRC = {area:.4f}")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_mask_overlay(pred: MaskFrame, truth: MaskFrame, path, title: str = ""):
    """Agreement map: hits white, false alarms red, misses blue."""
    path = Path(path)
    p = pred.bits.astype(bool)
    t = truth.bits.astype(bool)
    rgb = np.zeros(p.shape + (3,))
    rgb[p & t] = (1.0, 1.0, 1.0)
    rgb[p & ~t] = (0.9, 0.2, 0.2)
    rgb[~p & t] = (0.25, 0.45, 0.95)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.imshow(rgb, interpolation="nearest")
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_mask_strip(seq: MaskSequence, path, max_frames: int = 8, title: str = ""):
    """Evenly sampled frames of a sequence in one horizontal strip."""
    path = Path(path)
    n = len(seq.frames)
    picks = sorted(set(np.linspace(0, n - 1, min(max_frames, n)).astype(int)))
    fig, axes = plt.subplots(1, len(picks), figsize=(2.0 * len(picks), 2.4))
    if len(picks) == 1:
        axes = [axes]
    for ax, i in zip(axes, picks):
        ax.imshow(seq.frames[i].bits, cmap="gray", vmin=0, vmax=1, interpolation="nearest")
        ax.set_title(f"frame {i}", fontsize=8)
        ax.set_xticks([])
        ax.set_yticks([])
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_fit_summary(fit, path):
    """Fitted weights per history frame and the objective trace."""
    path = Path(path)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    w = fit.weights.w
    ax1.bar(np.arange(len(w)), w)
    ax1.set_xlabel("history frame")
    ax1.set_ylabel("weight")
    ax1.set_title(f"residual = {fit.residual_norm:.4g}")
    trace = np.asarray(fit.objective_trace)
    if trace.size:
        ax2.plot(trace)
        if trace.min() > 0:
            ax2.set_yscale("log")
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("objective")
    ax2.set_title("converged" if fit.converged else "not converged")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
