#!/usr/bin/env python3
# pylint: disable=missing-module-docstring
import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from acer_harness import acer_exception

RECURSION_SLACK = 1e-10
BALL_SLACK = 1e-12
MIN_RATE_POINTS = 3

# Run metadata that must agree across every trace of a group.
GROUP_INVARIANT_FIELDS = ("gamma", "oracle_kind", "c_phi", "C_phi", "C_omega", "track_mismatch")
PLOT_COLUMNS = ["key", "T", "n_runs", "G_T", "W_T", "F_T"]

def _none_if_nan(value):
    # pylint: disable=missing-function-docstring
    return None if value is None or math.isnan(value) else float(value)

@dataclass
class MetricsSummary:
    """ Second-half diagnostics of one run.

    G_T and W_T are means over the oracle snapshots in [T/2, T), i.e. a
    stride-subsampled estimate when the snapshot stride is above 1. F_T sums
    every step.

    Attributes:
        T (int): Number of steps.
        G_T (float): Mean squared gradient norm.
        W_T (float): Mean squared critic gap.
        F_T (float): Mean squared reward increment.
        stride (int): Snapshot stride used for G_T and W_T.
        n_snapshots (int): Number of snapshots averaged.
        mismatch_max (float): Largest tracked sampling mismatch, NaN if untracked.
        lambda_min_observed (float): Smallest exploration margin over all snapshots.
        epsilon_max_observed (float): Largest approximation error over all snapshots.
        assumption_flags (list): Flagged conditions of the run.

    """
    T: int
    G_T: float
    W_T: float
    F_T: float
    stride: int = 1
    n_snapshots: int = 0
    mismatch_max: float = float("nan")
    lambda_min_observed: float = float("nan")
    epsilon_max_observed: float = float("nan")
    assumption_flags: list = field(default_factory=list)

    def to_dict(self):
        # pylint: disable=missing-function-docstring
        summary = asdict(self)
        for key in ("mismatch_max", "lambda_min_observed", "epsilon_max_observed"):
            summary[key] = _none_if_nan(summary[key])
        return summary

@dataclass(frozen=True)
class RateFit:
    """ Least squares fit of log value against log T.

    Attributes:
        slope (float): Fitted exponent.
        intercept (float): Fitted log constant.
        r_squared (float): Coefficient of determination.
        points (list): (log T, log value) pairs.

    """
    slope: float
    intercept: float
    r_squared: float
    points: list

    def to_dict(self):
        # pylint: disable=missing-function-docstring
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r_squared}

def second_half_averages(trace):
    """ G_T, W_T and F_T over the window [T/2, T).

    Args:
        trace (:obj:RunTrace): The run.

    Returns:
        :obj:MetricsSummary: The summary.

    Raises:
        Acer_Exception: "Empty window" if fewer than two snapshots fall in the window.

    """
    half = trace.T // 2
    series = trace.series
    window = trace.snapshot_steps()
    window = window[window >= half]
    if len(window) < 2:
        raise acer_exception.Acer_Exception({"errorcode": "Empty window", "data": {"T": trace.T}})
    mismatch = series["mismatch_l1"]
    return MetricsSummary(
        T=trace.T,
        G_T=float(series["grad_norm_sq"][window].mean()),
        W_T=float(series["critic_err_sq"][window].mean()),
        F_T=float(series["delta_phi_sq"][half:].sum() / (trace.T - half)),
        stride=trace.stride,
        n_snapshots=len(window),
        mismatch_max=float(np.nanmax(mismatch)) if trace.track_mismatch else float("nan"),
        lambda_min_observed=float(np.nanmin(series["lambda"])),
        epsilon_max_observed=float(np.nanmax(series["epsilon"])),
        assumption_flags=list(trace.flags),
    )

def rate_fit(series):
    """ Ordinary least squares on (log T, log value).

    Args:
        series (list): (T, value) pairs with at least three distinct T.

    Returns:
        :obj:RateFit: The fit.

    """
    for _, value in series:
        if not value > 0:
            raise acer_exception.Acer_Exception({"errorcode": "Nonpositive value", "data": {"value": value}})
    distinct = len({T for T, _ in series})
    if distinct < MIN_RATE_POINTS:
        raise acer_exception.Acer_Exception({"errorcode": "Too few points", "data": {"n": distinct}})
    log_t = np.log([float(T) for T, _ in series])
    log_value = np.log([float(value) for _, value in series])
    fit = stats.linregress(log_t, log_value)
    return RateFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=float(fit.rvalue ** 2),
        points=list(zip(log_t.tolist(), log_value.tolist())),
    )

def mismatch_recursion_check(trace):
    """ Count steps where m_{t+1} > gamma m_t + shift_t + 1e-10.

    m_t is ||nu^_t - nu_t||_1 and shift_t is ||nu_t - nu_{t+1}||_1.

    Returns:
        dict: {"violations": int, "max_excess": float}.

    """
    if not trace.track_mismatch:
        raise acer_exception.Acer_Exception({"errorcode": "Mismatch not tracked"})
    mismatch = trace.series["mismatch_l1"]
    shifts = trace.series["nu_shift_l1"]
    excess = mismatch[1:] - (trace.gamma * mismatch[:-1] + shifts[:-1])
    return {
        "violations": int((excess > RECURSION_SLACK).sum()),
        "max_excess": float(excess.max()) if excess.size else 0.0,
    }

def critic_ball_check(trace):
    # pylint: disable=missing-function-docstring
    norms = trace.series["omega_norm"]
    return {
        "violations": int((norms > trace.C_omega + BALL_SLACK).sum()),
        "max_norm": float(np.nanmax(norms)),
        "C_omega": trace.C_omega,
    }

def td_bound_check(trace):
    """ Count steps with |delta_t| above the pointwise TD-error bound. """
    magnitude = np.abs(trace.series["td_error"])
    bound = trace.series["td_bound"]
    return {
        "violations": int((magnitude > bound).sum()),
        "max_ratio": float(np.nanmax(magnitude / bound)),
    }

def exploration_margin_check(trace):
    # pylint: disable=missing-function-docstring
    return {
        "violations": int(trace.flag_counts.get("lambda_nonpositive", 0)),
        "lambda_min": _none_if_nan(float(np.nanmin(trace.series["lambda"]))),
    }

def _group_key(trace, group_key):
    # pylint: disable=missing-function-docstring
    if callable(group_key):
        return group_key(trace)
    return getattr(trace, group_key)

def _mean_std(values):
    # pylint: disable=missing-function-docstring
    values = np.asarray(values, dtype=float)
    return {"mean": float(values.mean()), "std": float(values.std())}

def _summarize_group(key, traces):
    # pylint: disable=missing-function-docstring
    first = traces[0]
    for trace in traces[1:]:
        for name in GROUP_INVARIANT_FIELDS:
            if getattr(trace, name) != getattr(first, name):
                raise acer_exception.Acer_Exception({
                    "errorcode": "Inconsistent group",
                    "data": {"key": key, "field": name},
                })
    summaries = [second_half_averages(trace) for trace in traces]
    group = {"key": key, "n_runs": len(traces)}
    for metric in ("G_T", "W_T", "F_T"):
        group[metric] = _mean_std([getattr(summary, metric) for summary in summaries])

    by_T = []
    for T in sorted({summary.T for summary in summaries}):
        at_T = [summary for summary in summaries if summary.T == T]
        entry = {"T": T, "n_runs": len(at_T), "stride": at_T[0].stride}
        for metric in ("G_T", "W_T", "F_T"):
            entry[metric] = _mean_std([getattr(summary, metric) for summary in at_T])
        by_T.append(entry)
    group["by_T"] = by_T

    rate_fits = {}
    if len(by_T) >= MIN_RATE_POINTS:
        for metric in ("G_T", "W_T", "F_T"):
            points = [(entry["T"], entry[metric]["mean"]) for entry in by_T]
            if all(value > 0 for _, value in points):
                rate_fits[metric] = rate_fit(points).to_dict()
    group["rate_fits"] = rate_fits

    counts = {}
    for trace in traces:
        for kind, count in trace.flag_counts.items():
            counts[kind] = counts.get(kind, 0) + count
    group["flags"] = [{"kind": kind, "count": counts[kind]} for kind in sorted(counts)]
    return group

def summarize(traces, group_key="label"):
    """ Aggregate traces into a report.

    Args:
        traces (list): RunTrace objects, at least one.
        group_key: Trace attribute name or callable returning the group key.

    Returns:
        dict: {"groups": [...]} with per-group mean and population std of
        G_T, W_T and F_T, a per-T breakdown, and rate fits when the group
        spans at least three T values.

    """
    if not traces:
        raise acer_exception.Acer_Exception({"errorcode": "No traces"})
    grouped = {}
    for trace in traces:
        grouped.setdefault(_group_key(trace, group_key), []).append(trace)
    return {"groups": [_summarize_group(key, grouped[key]) for key in sorted(grouped, key=str)]}

def write_plot_csv(report, path):
    """ One row per (group, T) with the mean metrics. """
    with open(path, "w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file)
        writer.writerow(PLOT_COLUMNS)
        for group in report["groups"]:
            for entry in group["by_T"]:
                writer.writerow([group["key"], entry["T"], entry["n_runs"],
                                 repr(entry["G_T"]["mean"]), repr(entry["W_T"]["mean"]),
                                 repr(entry["F_T"]["mean"])])

def report_table(report):
    """ Human-readable table of a report.

    Returns:
        str: One line per (group, T), then the rate fits.

    """
    lines = [f'{"Group":16} {"T":>8} {"Runs":>5} {"G_T":>12} {"W_T":>12} {"F_T":>12}']
    for group in report["groups"]:
        for entry in group["by_T"]:
            lines.append(f'{str(group["key"]):16} {entry["T"]:8d} {entry["n_runs"]:5d} '
                         f'{entry["G_T"]["mean"]:12.4e} {entry["W_T"]["mean"]:12.4e} {entry["F_T"]["mean"]:12.4e}')
        for metric, fit in group["rate_fits"].items():
            lines.append(f'{str(group["key"]):16} {metric} slope {fit["slope"]:+.3f}  r2 {fit["r2"]:.3f}')
        for flag in group["flags"]:
            lines.append(f'{str(group["key"]):16} flag {flag["kind"]} x{flag["count"]}')
    return "\n".join(lines)

def trace_checks(trace):
    """ Critic ball, pointwise TD bound, exploration margin and (if tracked) the mismatch recursion.

    Returns:
        dict: Check name to its result, each carrying a "violations" count.

    """
    checks = {
        "critic_ball": critic_ball_check(trace),
        "td_bound": td_bound_check(trace),
        "exploration_margin": exploration_margin_check(trace),
    }
    if trace.track_mismatch:
        checks["mismatch_recursion"] = mismatch_recursion_check(trace)
    return checks
