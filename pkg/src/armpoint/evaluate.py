"""Model evaluation: per-clip pointing-reward statistics, reward-signal
smoothness metrics, side-by-side model comparison on a fixed target list,
and time-normalized profile exports for plotting.

Aggregates across clips are reported as mean +/- sample (n-1) standard
deviation; profile bands use the population sd so a single series shows a
zero-width band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geom, mocap
from .env import EnvConfig, PDArmEnv
from .errors import EmptyInput, IncompatibleCheckpoint
from .learn import GaussianPolicy, policy_from_checkpoint


def reward_stats(series_per_clip) -> tuple[list[tuple[float, float, float]], dict]:
    """Per-clip (r_max, r_min, r_mean) plus aggregate mean +/- sd per column.

    Each metric is computed per clip first, then summarized across clips
    with the sample-sd convention (sd is 0 for a single clip).
    """
    series_per_clip = [np.asarray(s, dtype=np.float64) for s in series_per_clip]
    if not series_per_clip or any(s.size == 0 for s in series_per_clip):
        raise EmptyInput("reward_stats needs at least one non-empty series per clip")
    rows = [(float(s.max()), float(s.min()), float(s.mean())) for s in series_per_clip]
    cols = np.asarray(rows)
    aggregate = {}
    for i, name in enumerate(("r_max", "r_min", "r_mean")):
        sd = float(cols[:, i].std(ddof=1)) if cols.shape[0] > 1 else 0.0
        aggregate[name] = (float(cols[:, i].mean()), sd)
    return rows, aggregate


def smoothness(series, dt: float) -> tuple[float, float, float]:
    """(vel_r, acc_r, jerk_r): mean absolute finite differences of the
    series at orders 1..3, each carrying its 1/dt^k scale.

    Constant series score (0, 0, 0); a linear ramp of slope m scores
    (|m|, 0, 0).
    """
    series = np.asarray(series, dtype=np.float64)
    out = []
    for order in (1, 2, 3):
        out.append(float(np.mean(np.abs(geom.finite_difference(series, dt, order)))))
    return tuple(out)


@dataclass(frozen=True)
class ClipRow:
    clip_id: str
    r_max: float
    r_min: float
    r_mean: float
    vel_r: float
    acc_r: float
    jerk_r: float
    theta_final: float

    def __post_init__(self):
        if not self.r_min <= self.r_mean <= self.r_max:
            raise ValueError("per-clip reward ordering violated")


REPORT_COLUMNS = ("r_max", "r_min", "r_mean", "vel_r", "acc_r", "jerk_r")


@dataclass
class EvalReport:
    model: str
    rows: list[ClipRow]
    aggregate: dict[str, tuple[float, float]]
    dt: float
    config_hash: str
    seeds: list[int]

    @property
    def theta_final_mean(self) -> float:
        return float(np.mean([r.theta_final for r in self.rows]))


def build_report(model: str, rows: list[ClipRow], dt: float, config_hash: str, seeds) -> EvalReport:
    if not rows:
        raise EmptyInput("a report needs at least one clip row")
    aggregate = {}
    for col in REPORT_COLUMNS:
        values = np.array([getattr(r, col) for r in rows])
        sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
        aggregate[col] = (float(values.mean()), sd)
    return EvalReport(
        model=model, rows=rows, aggregate=aggregate, dt=dt,
        config_hash=config_hash, seeds=list(seeds),
    )


def run_policy_episode(env: PDArmEnv, policy, target, seed: int, clip_index: int = 0):
    """Deterministic (mean action) episode; returns the per-step terms."""
    obs = env.reset(target=target, clip_index=clip_index, seed=seed)
    terms = []
    done = False
    while not done:
        obs, _, step_terms, done = env.step(policy.act_deterministic(obs))
        terms.append(step_terms)
    return terms


def compare_models(
    models: dict[str, object],
    env_config: EnvConfig,
    targets,
    seed: int = 0,
    clip_index: int = 0,
    config_hash: str = "",
) -> dict[str, EvalReport]:
    """Evaluate each model on the identical target list from identical
    resets (deterministic mean actions). Output is independent of the order
    in which models are listed."""
    if not targets:
        raise EmptyInput("need at least one evaluation target")
    env = PDArmEnv(env_config)
    reports = {}
    for name in models:
        policy = models[name]
        if getattr(policy, "obs_dim", env.obs_dim) != env.obs_dim or getattr(
            policy, "act_dim", env.act_dim
        ) != env.act_dim:
            raise IncompatibleCheckpoint(
                f"model {name!r} dims do not match the environment"
            )
        rows = []
        seeds = []
        for i, target in enumerate(targets):
            episode_seed = seed + i
            seeds.append(episode_seed)
            terms = run_policy_episode(env, policy, target, episode_seed, clip_index)
            series = np.array([t["r_task"] for t in terms])
            vel_r, acc_r, jerk_r = smoothness(series, env.control_dt)
            rows.append(
                ClipRow(
                    clip_id=f"target-{i:02d}",
                    r_max=float(series.max()),
                    r_min=float(series.min()),
                    r_mean=float(series.mean()),
                    vel_r=vel_r,
                    acc_r=acc_r,
                    jerk_r=jerk_r,
                    theta_final=float(terms[-1]["theta_hat"]),
                )
            )
        reports[name] = build_report(name, rows, env.control_dt, config_hash, seeds)
    return reports


def load_checkpoint_policy(doc: dict, env_config: EnvConfig) -> GaussianPolicy:
    """Deserialize a checkpoint policy, validating its dimensions."""
    if doc.get("format") != "armpoint-checkpoint-v1":
        raise IncompatibleCheckpoint("unrecognized checkpoint format")
    policy = policy_from_checkpoint(doc)
    probe = PDArmEnv(env_config)
    if policy.obs_dim != probe.obs_dim or policy.act_dim != probe.act_dim:
        raise IncompatibleCheckpoint(
            f"checkpoint dims ({policy.obs_dim}, {policy.act_dim}) do not match the "
            f"environment ({probe.obs_dim}, {probe.act_dim})"
        )
    return policy


# ---------------------------------------------------------------------------
# profiles


def export_profiles(series_list, bins: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Time-normalize each series to ``bins`` samples and return per-bin
    mean and population sd across series."""
    if not series_list:
        raise EmptyInput("need at least one series")
    rows = [mocap.resample_series(np.asarray(s, dtype=np.float64), bins) for s in series_list]
    stack = np.stack(rows)
    return stack.mean(axis=0), stack.std(axis=0)


def fmt(value: float) -> str:
    return f"{float(value):.12g}"


def profile_csv(mean: np.ndarray, sd: np.ndarray) -> str:
    lines = ["bin,mean,sd"]
    for i in range(mean.shape[0]):
        lines.append(f"{i},{fmt(mean[i])},{fmt(sd[i])}")
    return "\n".join(lines) + "\n"


def report_clips_csv(reports: dict[str, EvalReport]) -> str:
    """One row per (model, clip) plus one aggregate row per model."""
    lines = ["model,clip,r_max,r_min,r_mean,vel_r,acc_r,jerk_r,theta_final"]
    for name in sorted(reports):
        report = reports[name]
        for row in report.rows:
            lines.append(
                ",".join(
                    [name, row.clip_id]
                    + [fmt(getattr(row, c)) for c in REPORT_COLUMNS]
                    + [fmt(row.theta_final)]
                )
            )
        agg = report.aggregate
        lines.append(
            ",".join(
                [name, "aggregate"]
                + [fmt(agg[c][0]) for c in REPORT_COLUMNS]
                + [fmt(report.theta_final_mean)]
            )
        )
    return "\n".join(lines) + "\n"


def model_table_csv(reports: dict[str, EvalReport], columns, dt_column: bool = False) -> str:
    """Model-per-row summary with 'mean +/- sd' cells."""
    header = ["model"] + list(columns) + (["dt"] if dt_column else [])
    lines = [",".join(header)]
    for name in sorted(reports):
        report = reports[name]
        cells = [name]
        for col in columns:
            mean, sd = report.aggregate[col]
            cells.append(f"{fmt(mean)} ± {fmt(sd)}")
        if dt_column:
            cells.append(fmt(report.dt))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def report_json(reports: dict[str, EvalReport]) -> dict:
    return {
        name: {
            "config_hash": report.config_hash,
            "dt": report.dt,
            "seeds": report.seeds,
            "aggregate": {
                col: {"mean": report.aggregate[col][0], "sd": report.aggregate[col][1]}
                for col in REPORT_COLUMNS
            },
            "theta_final_mean": report.theta_final_mean,
            "clips": [
                {
                    "clip": row.clip_id,
                    **{col: getattr(row, col) for col in REPORT_COLUMNS},
                    "theta_final": row.theta_final,
                }
                for row in report.rows
            ],
        }
        for name, report in sorted(reports.items())
    }


# ---------------------------------------------------------------------------
# minimal SVG line plots

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def polyline_svg(curves: dict[str, np.ndarray], title: str, y_max: float = 0.7) -> str:
    """Plain polyline plot (one line per named curve) with axes and legend."""
    width, height = 640, 360
    left, right, top, bottom = 50, 10, 28, 30
    plot_w, plot_h = width - left - right, height - top - bottom
    n = max((len(c) for c in curves.values()), default=2)

    def x_of(i, m):
        return left + plot_w * (i / max(1, m - 1))

    def y_of(v):
        return top + plot_h * (1.0 - min(max(v / y_max, 0.0), 1.0))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left}" y="18" font-size="13" font-family="sans-serif">{title}</text>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" '
        'stroke="black"/>',
        f'<text x="8" y="{top + 8}" font-size="10" font-family="sans-serif">{y_max:g}</text>',
        f'<text x="8" y="{top + plot_h}" font-size="10" font-family="sans-serif">0</text>',
        f'<text x="{left + plot_w - 30}" y="{height - 8}" font-size="10" '
        'font-family="sans-serif">step</text>',
    ]
    for idx, name in enumerate(sorted(curves)):
        series = np.asarray(curves[name], dtype=np.float64)
        color = _PALETTE[idx % len(_PALETTE)]
        points = " ".join(
            f"{x_of(i, series.shape[0]):.1f},{y_of(v):.1f}" for i, v in enumerate(series)
        )
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>'
        )
        parts.append(
            f'<text x="{left + plot_w - 150}" y="{top + 14 + 14 * idx}" font-size="11" '
            f'font-family="sans-serif" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
