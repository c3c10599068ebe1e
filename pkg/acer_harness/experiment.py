#!/usr/bin/env python3
# pylint: disable=missing-module-docstring
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from acer_harness import acer_exception, actor_critic, checkpoint, config as experiment_config, metrics, oracle, policy, reward

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUN_ABORTED = 1
EXIT_CONFIG_ERROR = 2

def run_name(seed, T):
    # pylint: disable=missing-function-docstring
    return f"seed{seed}_T{T}"

def write_json(data, path):
    """ Deterministic JSON: sorted keys, fixed indent, trailing newline. """
    with open(path, "w", encoding="utf-8") as file:
        json.dump(data, file, indent=2, sort_keys=True)
        file.write("\n")

def initial_parameters(config):
    """ theta0 = 0, phi0 = (base reward, alpha0) and the resolved critic radius.

    Returns:
        tuple: (PolicyParams, RewardParams, C_omega).

    """
    mdp = config.mdp
    theta0 = policy.PolicyParams.zeros(mdp.n_states, mdp.n_actions)
    phi0 = reward.RewardParams(mdp.base_reward.copy(), config.alpha0)
    if config.C_omega == 'auto':
        C_omega = actor_critic.auto_critic_radius(mdp, config.features, theta0, phi0)
        logger.info("auto critic radius C_omega = %g", C_omega)
    else:
        C_omega = float(config.C_omega)
    return theta0, phi0, C_omega

def run_summary(trace):
    """ Summary JSON of one run: metadata, final parameters, G_T / W_T / F_T and trace checks. """
    summary = trace.summary_dict()
    try:
        summary["metrics"] = metrics.second_half_averages(trace).to_dict()
    except acer_exception.Acer_Exception as error:
        logger.warning("no second-half metrics for T = %d: %s", trace.T, error.message)
        summary["metrics"] = None
    summary["checks"] = metrics.trace_checks(trace)
    return summary

def execute_run(config, seed, T, theta0, phi0, C_omega):
    """ One ACER run from the initial parameters.

    Returns:
        :obj:RunTrace: The trace.

    """
    omega0 = actor_critic.CriticParams.zeros(config.features.d, C_omega)
    return actor_critic.run_acer(
        config.mdp, config.features, theta0, omega0, phi0,
        config.reward_oracle.fresh(seed), config.schedule, T, seed,
        config.cadence, config.track_mismatch,
        dense_window=config.dense_window,
        projection_scale=config.projection_scale,
        label=config.label,
    )

def _run_and_save(config, seed, T, theta0, phi0, C_omega):
    # pylint: disable=missing-function-docstring
    name = run_name(seed, T)
    trace = execute_run(config, seed, T, theta0, phi0, C_omega)
    output_dir = config.output_dir
    trace.to_csv(os.path.join(output_dir, f"trace_{name}.csv"))
    write_json(run_summary(trace), os.path.join(output_dir, f"summary_{name}.json"))
    final_theta = policy.PolicyParams(np.asarray(trace.final["theta"]))
    final_phi = reward.RewardParams.from_dict(trace.final["phi"])
    checkpoint.Checkpoint(config.mdp, config.features, final_theta, final_phi).save(
        os.path.join(output_dir, f"checkpoint_{name}.json"))
    logger.info("run %s finished with %d flagged conditions", name, len(trace.flags))
    return trace

def run_experiment(config):
    """ Run every (seed, T) of the config and write the artifacts.

    Per run: trace_<run>.csv, summary_<run>.json and checkpoint_<run>.json. Then
    report.json, report.csv (plot data) and report.txt for the whole experiment.
    Runs fan out over a thread pool; each run owns its generators, so results
    do not depend on the worker count.

    Args:
        config (:obj:ExperimentConfig): Validated config.

    Returns:
        int: EXIT_OK, or EXIT_RUN_ABORTED if any run aborted.

    """
    os.makedirs(config.output_dir, exist_ok=True)
    theta0, phi0, C_omega = initial_parameters(config)
    # Fill the sampler caches before the workers share the MDP.
    _ = config.mdp.transition_cdf, config.mdp.initial_cdf

    jobs = [(seed, T) for seed in config.seeds for T in config.T_values]
    workers = experiment_config.worker_count(len(jobs))
    logger.info("running %d runs on %d workers", len(jobs), workers)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {
            job: executor.submit(_run_and_save, config, job[0], job[1], theta0, phi0, C_omega)
            for job in jobs
        }
    traces = []
    aborted = []
    for (seed, T), future in futures.items():
        try:
            traces.append(future.result())
        except acer_exception.Acer_Exception as error:
            logger.error("run %s aborted: %s", run_name(seed, T), error.message)
            aborted.append({"seed": seed, "T": T, "error": error.type, "message": error.message})
        except Exception as error:  # pylint: disable=broad-except
            logger.exception("run %s failed", run_name(seed, T))
            aborted.append({"seed": seed, "T": T, "error": type(error).__name__, "message": str(error)})

    report = {"groups": []}
    if traces:
        try:
            report = metrics.summarize(traces, "label")
        except acer_exception.Acer_Exception as error:
            logger.error("cannot summarize runs: %s", error.message)
            aborted.append({"seed": None, "T": None, "error": error.type, "message": error.message})
    report["aborted"] = aborted
    report["C_omega"] = C_omega
    write_json(report, os.path.join(config.output_dir, "report.json"))
    metrics.write_plot_csv(report, os.path.join(config.output_dir, "report.csv"))
    with open(os.path.join(config.output_dir, "report.txt"), "w", encoding="utf-8") as file:
        file.write(metrics.report_table(report) + "\n")
    return EXIT_RUN_ABORTED if aborted else EXIT_OK

def probe(checkpoint_path):
    """ Oracle snapshot at a saved checkpoint.

    Args:
        checkpoint_path (str): Checkpoint file.

    Returns:
        dict: A residual, lambda, epsilon, c_delta, gradient norm, J and omega*.

    """
    point = checkpoint.Checkpoint.load(checkpoint_path)
    snap = oracle.snapshot(point.mdp, point.features, point.theta, point.phi)
    return snap.to_dict()
