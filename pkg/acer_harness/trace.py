#!/usr/bin/env python3
# pylint: disable=missing-module-docstring
import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

CHUNK_SIZE = 4096

# Fixed CSV column order; the first nine are the metric series, the rest are
# per-step diagnostics used by the invariant checks.
TRACE_COLUMNS = [
    "t", "td_error", "grad_norm_sq", "critic_err_sq", "delta_phi_sq",
    "mismatch_l1", "lambda", "epsilon", "J",
    "s", "a", "s_next", "restarted", "theta_step", "nu_shift_l1",
    "omega_norm", "td_bound",
]

def _format_value(value):
    # pylint: disable=missing-function-docstring
    if math.isnan(value):
        return ""
    return repr(float(value))

@dataclass
class RunTrace:
    """ Per-step log of one ACER run plus its final parameters.

    Series are float arrays of length T indexed by step; columns without a value
    at a step (oracle snapshots off-cadence, untracked mismatch) hold NaN.

    Attributes:
        T (int): Number of steps.
        gamma (float): Discount factor of the MDP.
        seed (int): Run seed.
        label (str): Group label.
        oracle_kind (str): Reward oracle kind.
        c_phi (float): Reward step constant.
        C_phi (float): Reward clip.
        C_omega (float): Nominal critic radius.
        stride (int): Oracle snapshot cadence.
        track_mismatch (bool): True if mismatch_l1 / nu_shift_l1 were tracked.
        series (dict): Column name to ndarray.
        flags (list): First occurrence of each flagged condition.
        flag_counts (dict): Number of occurrences of each flagged condition.
        final (dict): Final theta, omega and phi.

    """
    T: int
    gamma: float
    seed: int = 0
    label: str = ""
    oracle_kind: str = "Static"
    c_phi: float = 0.0
    C_phi: float = 0.0
    C_omega: float = 0.0
    stride: int = 1
    track_mismatch: bool = False
    series: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    flag_counts: dict = field(default_factory=dict)
    final: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, T, gamma, **meta):
        """ Trace with every series allocated and filled with NaN. """
        trace = cls(T, gamma, **meta)
        for column in TRACE_COLUMNS:
            trace.series[column] = np.full(T, np.nan)
        trace.series["t"] = np.arange(T, dtype=float)
        return trace

    def flag(self, kind, step, value):
        """ Count a flagged condition, keeping the first occurrence. """
        if kind not in self.flag_counts:
            self.flags.append({"kind": kind, "step": int(step), "value": float(value)})
            self.flag_counts[kind] = 0
        self.flag_counts[kind] += 1

    def snapshot_steps(self):
        """ Steps carrying an oracle snapshot. """
        return np.nonzero(~np.isnan(self.series["grad_norm_sq"]))[0]

    def meta_dict(self):
        # pylint: disable=missing-function-docstring
        return {
            "T": self.T,
            "gamma": self.gamma,
            "seed": self.seed,
            "label": self.label,
            "oracle_kind": self.oracle_kind,
            "c_phi": self.c_phi,
            "C_phi": self.C_phi,
            "C_omega": self.C_omega,
            "stride": self.stride,
            "track_mismatch": self.track_mismatch,
        }

    def summary_dict(self):
        """ Metadata, flags and final parameters; metrics add G_T, W_T and F_T to this. """
        summary = self.meta_dict()
        summary["flags"] = list(self.flags)
        summary["flag_counts"] = dict(sorted(self.flag_counts.items()))
        summary["final"] = self.final
        return summary

    def iter_rows(self, chunk_size=CHUNK_SIZE):
        """ Yield CSV rows in chunks of at most chunk_size. """
        columns = [self.series[name] for name in TRACE_COLUMNS]
        index = 0
        while index < self.T:
            chunk = min(self.T - index, chunk_size)
            yield [
                [_format_value(column[i]) for column in columns]
                for i in range(index, index + chunk)
            ]
            index += chunk

    def to_csv(self, path):
        """ Write one row per step in TRACE_COLUMNS order. """
        with open(path, "w", encoding="utf-8", newline="") as file:
            writer = csv.writer(file)
            writer.writerow(TRACE_COLUMNS)
            for rows in self.iter_rows():
                writer.writerows(rows)

    @classmethod
    def from_csv(cls, path, meta):
        """ Read a trace written by to_csv.

        Args:
            path (str): CSV file.
            meta (dict): Metadata as produced by meta_dict (e.g. from the summary JSON).

        Returns:
            :obj:RunTrace: The trace, without final parameters or flags.

        """
        with open(path, encoding="utf-8", newline="") as file:
            reader = csv.reader(file)
            header = next(reader)
            rows = list(reader)
        trace = cls(**meta)
        for position, name in enumerate(header):
            trace.series[name] = np.array(
                [float(row[position]) if row[position] != "" else np.nan for row in rows])
        return trace

def load_summary(path):
    # pylint: disable=missing-function-docstring
    with open(path, encoding="utf-8") as file:
        return json.load(file)
