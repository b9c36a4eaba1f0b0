"""Step-table serialization and run summaries.

The step table is plain CSV: one row per fixed-dt step, a header row
naming every column, and a leading comment documenting the layout.
Rotations are flattened row-major (r{i}00..r{i}22). Every number in the
summary is recomputable from the step table plus the scenario constants;
there is no hidden state.
"""

import json
import math

import numpy as np

from .deployment import (
    covariance_perturbation_bound,
    deployment_stats,
    pairwise_displacement_bound,
    plan_gains,
)

TABLE_COMMENT = (
    "# step table: one row per fixed-dt step; rotations row-major; "
    "angles in radians; nan marks quantities without a configured field\n"
)


def table_columns(n_agents: int) -> list:
    cols = ["t"]
    for i in range(n_agents):
        cols += [f"p{i}x", f"p{i}y", f"p{i}z"]
        cols += [f"r{i}{a}{b}" for a in range(3) for b in range(3)]
        cols += [f"mu{i}", f"delta{i}"]
    cols += [
        "lambda_min",
        "sigma_centroid",
        "dist_to_source",
        "max_pair_disp",
        "unknown_rate",
        "hold",
        "rate_violation",
    ]
    return cols


def _fmt(v: float) -> str:
    if math.isnan(v):
        return "nan"
    return repr(float(v))


def step_table_text(log) -> str:
    """Render a SimLog to CSV text (byte-deterministic)."""
    n = log.config.n_agents
    lines = [TABLE_COMMENT + ",".join(table_columns(n))]
    for k in range(len(log)):
        row = [_fmt(log.t[k])]
        for i in range(n):
            row += [_fmt(v) for v in log.p[k, i]]
            row += [_fmt(v) for v in log.r[k, i].reshape(9)]
            row += [_fmt(log.mu[k, i]), _fmt(log.delta[k, i])]
        row += [
            _fmt(log.lambda_min[k]),
            _fmt(log.sigma_centroid[k]),
            _fmt(log.dist_to_source[k]),
            _fmt(log.max_pair_disp[k]),
            _fmt(log.unknown_rate[k]),
            str(int(log.hold_flag[k])),
            str(int(log.rate_violation[k])),
        ]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_step_table(log, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(step_table_text(log))


def fit_decay_slope(t, mu, lo: float, hi: float):
    """Least-squares slope of log(mu) over samples with mu in (lo, hi].

    Returns (slope, n_samples); slope is nan with fewer than two samples.
    """
    mask = (mu > lo) & (mu <= hi) & np.isfinite(mu)
    if int(mask.sum()) < 2:
        return float("nan"), int(mask.sum())
    coef = np.polyfit(t[mask], np.log(mu[mask]), 1)
    return float(coef[0]), int(mask.sum())


def summarize(log) -> dict:
    """Headline quantities and pass/fail flags for one run.

    Decay slopes are fitted on log(mu): against the window mu in
    [1e-6, mu(0)] when the reference rate is fully known, else on the
    approach segment above mu_star (samples before the first entry).
    """
    cfg = log.config
    n = cfg.n_agents
    k_w = log.k_w
    mu_star = cfg.controller.mu_star
    delta_star = cfg.controller.delta_star
    band_slack = 5.0 * cfg.dt * k_w

    disturbed = cfg.trajectory.mode == "source-seeking" or (
        float(np.linalg.norm(cfg.trajectory.omega_unknown)) > 0.0
    )
    slopes, rel_errs, windows = [], [], []
    entered, max_after_entry, stay_ok = [], [], []
    for i in range(n):
        mu_i = log.mu[:, i]
        if disturbed:
            above = np.nonzero(mu_i <= mu_star)[0]
            cut = int(above[0]) if above.size else len(log)
            slope, _ = fit_decay_slope(log.t[:cut], mu_i[:cut], mu_star, np.inf)
            windows.append("above_mu_star")
        else:
            slope, _ = fit_decay_slope(log.t, mu_i, 1e-6, mu_i[0] if len(log) else 1.0)
            windows.append("mu_above_1e-6")
        slopes.append(slope)
        rel_errs.append(
            abs(slope + k_w) / k_w if math.isfinite(slope) else float("nan")
        )
        delta_i = log.delta[:, i]
        inb = np.nonzero(delta_i <= delta_star)[0]
        if inb.size:
            entered.append(True)
            after = delta_i[int(inb[0]) :]
            max_after_entry.append(float(after.max()))
            stay_ok.append(bool(after.max() <= delta_star + band_slack))
        else:
            entered.append(False)
            max_after_entry.append(float("nan"))
            stay_ok.append(False)

    # worst-case displacement budget vs what the run actually used
    displacement_budget = pairwise_displacement_bound(cfg.speed, k_w)
    max_disp = float(log.max_pair_disp.max()) if len(log) else float("nan")

    # covariance floor: lambda_min(t) >= lambda_min(0) - (2 D0 e + e^2)
    weyl_worst = float("-inf")
    plan_dict = None
    if len(log):
        stats0 = deployment_stats(log.p[0])
        x0 = log.p[0] - log.p[0].mean(axis=0)
        for k in range(len(log)):
            xk = log.p[k] - log.p[k].mean(axis=0)
            eps = float(np.max(np.linalg.norm(xk - x0, axis=1)))
            floor = stats0.lambda_min - covariance_perturbation_bound(eps, stats0)
            weyl_worst = max(weyl_worst, floor - float(log.lambda_min[k]))
        if stats0.lambda_min > 0 and cfg.trajectory.omega_max_declared >= 0:
            try:
                plan = plan_gains(
                    cfg.trajectory.omega_max_declared, mu_star, cfg.speed, stats0
                )
                plan_dict = {
                    "k1": plan.k1,
                    "k2": plan.k2,
                    "k_w": plan.k_w,
                    "epsilon_max": plan.epsilon_max,
                }
            except (ValueError, ZeroDivisionError):
                plan_dict = None

    summary = {
        "scenario": cfg.name,
        "n_agents": n,
        "dt": cfg.dt,
        "t_end": cfg.t_end,
        "speed": cfg.speed,
        "k_w": k_w,
        "gain_mode": cfg.gain_mode,
        "rate_frame": cfg.rate_frame,
        "aborted": log.aborted,
        "abort_reason": log.abort_reason,
        "planned_gains": plan_dict,
        "decay": {
            "window": windows[0] if windows else "",
            "slope": slopes,
            "rel_err_vs_k_w": rel_errs,
        },
        "final_mu": [float(v) for v in log.mu[-1]] if len(log) else [],
        "final_delta": [float(v) for v in log.delta[-1]] if len(log) else [],
        "band": {
            "delta_star": delta_star,
            "slack": band_slack,
            "entered": entered,
            "max_after_entry": max_after_entry,
        },
        "lambda_min": {
            "initial": float(log.lambda_min[0]) if len(log) else float("nan"),
            "minimum": float(log.lambda_min.min()) if len(log) else float("nan"),
            "final": float(log.lambda_min[-1]) if len(log) else float("nan"),
        },
        "max_pair_disp": max_disp,
        "displacement_budget": displacement_budget,
        "weyl_worst_violation": weyl_worst,
        "holds": int(log.hold_flag.sum()) if len(log) else 0,
        "rate_violations": int(log.rate_violation.sum()) if len(log) else 0,
    }
    summary["flags"] = {
        "decay_fit_ok": all(
            math.isfinite(sl) and (sl <= -0.9 * k_w if disturbed else abs(sl + k_w) <= 0.02 * k_w)
            for sl in slopes
        ),
        "band_ok": all(entered) and all(stay_ok),
        "displacement_ok": (not log.aborted) and max_disp <= displacement_budget,
        "lambda_min_positive": len(log) > 0 and float(log.lambda_min.min()) > 0.0,
        "weyl_ok": weyl_worst <= 1e-9,
        "completed": not log.aborted,
    }
    return summary


def write_summary(summary: dict, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
