"""Report rendering: delimited files plus matplotlib figures.

Writers return the list of files they produced. CSVs are byte-stable
for a given session or batch; figures are written next to them.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .batch import BatchResult, outcomes_csv, summary_csv
from .metrics import ideal_line
from .model import hours
from .service.exports import burndown_csv, leaderboard_csv


def _write_text(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def _burndown_figure(state, path: Path) -> Path:
    config = state.config
    teams = list(state.teams.values())
    fig, axes = plt.subplots(
        len(teams), 1, figsize=(8, 3.2 * len(teams)), squeeze=False
    )
    for ax, team in zip(axes[:, 0], teams):
        sprints = [(i + 1, pts) for i, pts in enumerate(team.burndown_history)]
        if team.burndown_actual:
            sprints.append((len(team.burndown_history) + 1, team.burndown_actual))
        for sprint, points in sprints:
            if not points:
                continue
            xs = [d for d, _ in points]
            ys = [float(hours(t)) for _, t in points]
            ax.plot(xs, ys, marker="o", label=f"sprint {sprint} actual")
            ideal = ideal_line(
                points[0][1], config.sprint_length_days, config.team_size,
                config.ideal_line,
            )
            ax.plot(
                [float(x) for x, _ in ideal.points],
                [float(y) for _, y in ideal.points],
                linestyle="--", alpha=0.6, label=f"sprint {sprint} ideal",
            )
        ax.set_title(f"{team.id} burndown")
        ax.set_xlabel("sprint day")
        ax.set_ylabel("remaining hours")
        ax.legend(loc="upper right", fontsize=8)
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def _leaderboard_figure(state, path: Path) -> Path:
    from .metrics import leaderboard

    rows = leaderboard(state.teams.values(), state.config.policy)
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.bar([r.team_id for r in rows], [r.value for r in rows], color="#4878a8")
    ax.set_ylabel("value delivered")
    ax.set_title("leaderboard")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def write_session_report(state, out_dir: Path | str) -> list[Path]:
    """Burndown and leaderboard, as CSVs and rendered figures."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    produced = [
        _write_text(out / "burndown.csv", burndown_csv(state)),
        _write_text(out / "leaderboard.csv", leaderboard_csv(state)),
        _burndown_figure(state, out / "burndown.png"),
        _leaderboard_figure(state, out / "leaderboard.png"),
    ]
    return produced


def _histogram_figure(values: list[float], title: str, xlabel: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 3.5))
    bins = min(30, max(5, len(set(values))))
    ax.hist(values, bins=bins, color="#4878a8", edgecolor="white")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("runs")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def _scatter_figure(result: BatchResult, path: Path) -> Path:
    rows = result.clean_rows()
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.scatter(
        [float(r.cost_hours) for r in rows],
        [r.value for r in rows],
        s=14, alpha=0.6, color="#a85048",
    )
    ax.set_xlabel("labor cost (weighted hours)")
    ax.set_ylabel("value delivered")
    ax.set_title("cost against value per run")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def write_batch_report(result: BatchResult, out_dir: Path | str) -> list[Path]:
    """Per-run outcomes, the summary table, and distribution figures."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = result.clean_rows()
    produced = [
        _write_text(out / "outcomes.csv", outcomes_csv(result)),
        _write_text(out / "summary.csv", summary_csv(result)),
        _histogram_figure(
            [float(r.value) for r in rows],
            "value delivered per run", "value", out / "value_histogram.png",
        ),
        _scatter_figure(result, out / "cost_vs_value.png"),
    ]
    return produced
