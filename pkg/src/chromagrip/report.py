"""Figure rendering for the CLI report paths.

Every reporting subcommand writes its delimited output (CSV / JSON-lines)
and drops matplotlib PNGs next to it.  Figures are deliberately plain:
time series for episodes and sessions, the accuracy curve for training,
a bar chart for evaluation.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .gesturenet import CurvePoint, EvaluationReport
from .gripsim import EpisodeRecord


def episode_figure(record: EpisodeRecord, path: str | Path) -> Path:
    t = np.asarray(record.times)
    pressures = np.asarray([s.pressures for s in record.states])
    forces = np.asarray([f.contact_forces for f in record.frames])

    fig, (ax_p, ax_f) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    for i in range(3):
        ax_p.plot(t, pressures[:, i], label=f"finger {i + 1}")
        ax_f.plot(t, forces[:, i], label=f"finger {i + 1}")
    _shade_phases(ax_p, t, record.phases)
    _shade_phases(ax_f, t, record.phases)
    ax_p.set_ylabel("pressure [kPa]")
    ax_f.set_ylabel("contact force [N]")
    ax_f.set_xlabel("time [s]")
    ax_p.legend(loc="lower right", fontsize=8)
    ax_p.set_title(f"{record.target.kind} target, "
                   f"k={record.target.stiffness:.0f} N/m, "
                   f"mean hold force {record.mean_hold_force():.2f} N")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def _shade_phases(ax, t, phases):
    spans = []
    start = 0
    for i in range(1, len(phases) + 1):
        if i == len(phases) or phases[i] != phases[start]:
            spans.append((phases[start], t[start], t[i - 1]))
            start = i
    colors = {"inflate": "#fff3d6", "hold": "#e4f2e4", "vent": "#e8e8f5"}
    for name, t0, t1 in spans:
        ax.axvspan(t0, t1, color=colors.get(name, "#f0f0f0"), zorder=0)


def session_figure(steps: list[dict], path: str | Path) -> Path:
    t = np.asarray([s["t"] for s in steps])
    pressures = np.asarray([s["pressures"] for s in steps])
    hue = np.asarray([s["hue"] for s in steps])
    est = np.asarray([s["force_estimate"] if s["force_estimate"] is not None
                      else np.nan for s in steps])
    truth = np.asarray([s["estimate_truth"] if s.get("estimate_truth") is not None
                        else np.nan for s in steps])
    limit = np.asarray([s.get("safety_limit", np.nan) for s in steps])

    fig, (ax_p, ax_e, ax_h) = plt.subplots(3, 1, sharex=True, figsize=(8, 8))
    for i in range(3):
        ax_p.plot(t, pressures[:, i], label=f"finger {i + 1}")
    ax_p.set_ylabel("pressure [kPa]")
    ax_p.legend(loc="lower right", fontsize=8)

    ax_e.plot(t, est, label="estimate", color="tab:blue")
    ax_e.plot(t, truth, label="encoded truth", color="tab:gray", ls="--")
    ax_e.plot(t, limit, label="safety limit", color="tab:red", ls=":")
    ax_e.set_ylabel("force [0-4 scale]")
    ax_e.set_ylim(-0.1, 4.3)
    ax_e.legend(loc="lower right", fontsize=8)

    ax_h.plot(t, hue, color="tab:purple")
    ax_h.set_ylabel("LED hue [byte]")
    ax_h.set_xlabel("time [s]")
    ax_h.set_ylim(40, 215)

    # Mark phase changes along the top axis.
    last = None
    for step, ti in zip(steps, t):
        if step["phase"] != last:
            ax_p.annotate(step["phase"], (ti, ax_p.get_ylim()[1]),
                          fontsize=7, rotation=45, va="bottom")
            last = step["phase"]
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def training_curve_csv(curve: list[CurvePoint]) -> str:
    lines = ["loop,holdout_accuracy,train_loss"]
    for p in curve:
        lines.append(f"{p.loop},{p.holdout_accuracy!r},{p.train_loss!r}")
    return "\n".join(lines) + "\n"


def training_curve_figure(curve: list[CurvePoint], path: str | Path) -> Path:
    loops = [p.loop for p in curve]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(loops, [100.0 * p.holdout_accuracy for p in curve],
            marker="o", color="tab:blue", label="held-out accuracy")
    ax.set_xlabel("training loops")
    ax.set_ylabel("accuracy [%]")
    ax.set_ylim(0, 102)
    ax2 = ax.twinx()
    ax2.plot(loops, [p.train_loss for p in curve],
             marker="s", color="tab:orange", label="training loss")
    ax2.set_ylabel("mean squared-error loss")
    lines = ax.get_lines() + ax2.get_lines()
    ax.legend(lines, [ln.get_label() for ln in lines], loc="center right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def evaluation_figure(report: EvaluationReport, path: str | Path) -> Path:
    rows = [r for r in report.rows if r.rate is not None]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.bar([r.gesture for r in rows], [100.0 * r.rate for r in rows],
           color="tab:blue")
    ax.axhline(100.0 * report.average, color="tab:red", ls="--",
               label=f"average {100.0 * report.average:.1f}%")
    ax.set_ylabel("recognition rate [%]")
    ax.set_ylim(0, 105)
    ax.tick_params(axis="x", rotation=30)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
