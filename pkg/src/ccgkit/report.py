"""Run artifacts: delimited step logs, JSON reports/snapshots and figures.

CSV and JSON are the primary outputs for external tooling; matplotlib
figures are rendered to files next to them when requested.  Wall-time
columns are the only nondeterministic fields, so golden-file comparisons
should drop ``step_ms`` / ``time_*``.
"""

from __future__ import annotations

import csv
import json
from importlib import resources
from pathlib import Path

import numpy as np

from .estimator import StepLog
from .unicycle import ScenarioResult

__all__ = [
    "STEP_COLUMNS",
    "COMPARE_COLUMNS",
    "write_steps_csv",
    "write_snapshots_json",
    "summarize",
    "write_report_json",
    "write_compare_csv",
    "report_schema",
    "plot_volume",
    "plot_trajectory",
    "plot_compare_volume",
]

STEP_COLUMNS = [
    "k", "volume", "step_ms", "n_g_pre", "n_g_post", "n_c_post",
    "contained", "beacon_active",
]

COMPARE_COLUMNS = [
    "k", "true_p", "true_q", "volume_ccg", "volume_cz", "time_ccg", "time_cz",
    "contained_ccg", "contained_cz", "beacon_active",
]


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_steps_csv(path, logs: list[StepLog]):
    """One row per filter step, columns as in STEP_COLUMNS."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STEP_COLUMNS)
        for log in logs:
            writer.writerow(
                _fmt(v)
                for v in (
                    log.k, log.volume, log.step_ms, log.n_g_pre,
                    log.n_g_post, log.n_c_post, log.contained, log.beacon_active,
                )
            )


def write_snapshots_json(path, result: ScenarioResult):
    data = [
        {
            "k": snap.k,
            "polygon": np.asarray(snap.polygon).tolist(),
            "truth": np.asarray(snap.truth).tolist(),
        }
        for snap in result.snapshots
    ]
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)


def summarize(result: ScenarioResult) -> dict:
    logs = result.logs
    contained = [log.contained for log in logs if log.contained is not None]
    step_ms = [log.step_ms for log in logs]
    return {
        "steps": len(logs),
        "volume_integral": float(
            sum(log.volume for log in logs) * result.config.Ts
        ),
        "mean_step_ms": float(np.mean(step_ms)) if step_ms else 0.0,
        "max_step_ms": float(np.max(step_ms)) if step_ms else 0.0,
        "containment_ok": bool(all(contained)) if contained else True,
        "contained_steps": int(sum(contained)),
        "beacon_steps": int(sum(log.beacon_active for log in logs)),
        "wall_time_s": result.wall_time,
    }


def write_report_json(path, result: ScenarioResult, extra: dict | None = None):
    """Summary + resolved config echo + truth trajectory, schema-validated shape."""
    report = {
        "config": result.config.to_dict(),
        "summary": summarize(result),
        "truth": result.truth.tolist(),
    }
    if extra:
        report.update(extra)
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2)
    return report


def report_schema() -> dict:
    """The published JSON schema for report.json."""
    text = resources.files("ccgkit").joinpath("schemas/report.schema.json").read_text()
    return json.loads(text)


def write_compare_csv(path, result_ccg: ScenarioResult, result_cz: ScenarioResult):
    """Merged per-step table for a paired CCG / CZ run (shared seed).

    Raises when the two truth trajectories differ: with shared seeds they
    must be bitwise identical.
    """
    if not np.array_equal(result_ccg.truth, result_cz.truth):
        raise ValueError("paired runs disagree on the truth trajectory; seeds differ?")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COMPARE_COLUMNS)
        for log_a, log_b in zip(result_ccg.logs, result_cz.logs):
            truth = result_ccg.truth[log_a.k]
            writer.writerow(
                _fmt(v)
                for v in (
                    log_a.k, truth[0], truth[1],
                    log_a.volume, log_b.volume,
                    log_a.step_ms, log_b.step_ms,
                    log_a.contained, log_b.contained,
                    log_a.beacon_active,
                )
            )


# ---------------------------------------------------------------------------
# Figures (rendered to files; Agg backend, no display required)
# ---------------------------------------------------------------------------

def _new_axes():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt, plt.subplots(figsize=(7.0, 4.5))


def plot_volume(path, logs: list[StepLog], label: str = "estimate"):
    plt, (fig, ax) = _new_axes()
    ks = [log.k for log in logs]
    ax.plot(ks, [log.volume for log in logs], label=label)
    _shade_beacon_steps(ax, logs)
    ax.set_xlabel("iteration k")
    ax.set_ylabel("outer polygon area")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_compare_volume(path, logs_ccg: list[StepLog], logs_cz: list[StepLog]):
    plt, (fig, ax) = _new_axes()
    ax.plot([l.k for l in logs_ccg], [l.volume for l in logs_ccg], label="ccg")
    ax.plot([l.k for l in logs_cz], [l.volume for l in logs_cz], label="cz", linestyle="--")
    _shade_beacon_steps(ax, logs_ccg)
    ax.set_xlabel("iteration k")
    ax.set_ylabel("outer polygon area")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _shade_beacon_steps(ax, logs):
    active = [log.k for log in logs if log.beacon_active]
    if not active:
        return
    start = prev = active[0]
    spans = []
    for k in active[1:]:
        if k != prev + 1:
            spans.append((start, prev))
            start = k
        prev = k
    spans.append((start, prev))
    for lo, hi in spans:
        ax.axvspan(lo - 0.5, hi + 0.5, color="0.85", zorder=0)


def plot_trajectory(path, result: ScenarioResult):
    plt, (fig, ax) = _new_axes()
    ax.plot(result.truth[:, 0], result.truth[:, 1], color="k", lw=1.0,
            label="true trajectory")
    for snap in result.snapshots:
        poly = np.vstack([snap.polygon, snap.polygon[:1]])
        ax.plot(poly[:, 0], poly[:, 1], lw=0.8)
        ax.annotate(f"k={snap.k}", snap.polygon[0], fontsize=7)
    for beacon in result.config.beacons:
        circle = plt.Circle(beacon.position, beacon.detect_radius,
                            fill=False, linestyle=":", color="tab:red")
        ax.add_patch(circle)
        ax.plot(*beacon.position, marker="^", color="tab:red")
    ax.set_aspect("equal")
    ax.set_xlabel("p")
    ax.set_ylabel("q")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
