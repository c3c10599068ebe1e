#!/usr/bin/env python3
# pylint: disable=missing-module-docstring
import copy
import json
import logging
import os
from dataclasses import dataclass, field

from acer_harness import acer_exception, actor_critic, features as feature_maps, mdp as mdp_core, reward

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = mdp_core.DEFAULT_GAMMA
DEFAULT_C_THETA = 0.05
DEFAULT_C_OMEGA = 0.5
DEFAULT_RATIO_CAP = 0.1
DEFAULT_T_OFFSET = 1
DEFAULT_C_OMEGA_MODE = 'auto'
DEFAULT_ALPHA0 = 0.01
DEFAULT_FEATURES = 'tabular'
DEFAULT_ORACLE = {"kind": "Static"}
DEFAULT_CADENCE = 'auto'
DEFAULT_SEEDS = [0]
DEFAULT_OUTPUT_DIR = 'acer_output'
DEFAULT_PROJECTION_SCALE = 1.0

MAX_STATES = 512

EVOLVING_AC_THREADS = 'EVOLVING_AC_THREADS'

def _invalid(field_name, message):
    # pylint: disable=missing-function-docstring
    return acer_exception.Acer_Exception({
        "errorcode": "Invalid config",
        "data": {"field": field_name, "message": message},
    })

@dataclass
class ExperimentConfig:
    """ Validated experiment configuration with every default filled in.

    Attributes:
        mdp (:obj:FiniteMdp): The MDP.
        features (:obj:FeatureMap): Critic features.
        schedule (:obj:StepSchedule): Step-size constants.
        ratio_cap (float): Upper bound on c_theta / c_omega.
        C_omega: Critic radius, a float or 'auto'.
        reward_oracle (:obj:RewardOracle): Template oracle, copied fresh for every run.
        alpha0 (float): Initial entropy coefficient.
        T_values (list): Step counts, one run per (seed, T).
        seeds (list): Run seeds.
        oracle_cadence: Snapshot stride, an int or 'auto'.
        track_mismatch (bool): Track the sampling mismatch.
        dense_window (bool): Snapshot every step of the second half.
        projection_scale (float): Critic projection radius multiplier, 1 outside fault injection.
        output_dir (str): Artifact directory.
        label (str): Group label of the runs.
        raw (dict): The merged config dictionary as loaded.

    """
    mdp: object
    features: object
    schedule: object
    ratio_cap: float = DEFAULT_RATIO_CAP
    C_omega: object = DEFAULT_C_OMEGA_MODE
    reward_oracle: object = None
    alpha0: float = DEFAULT_ALPHA0
    T_values: list = field(default_factory=list)
    seeds: list = field(default_factory=lambda: list(DEFAULT_SEEDS))
    oracle_cadence: object = DEFAULT_CADENCE
    track_mismatch: bool = False
    dense_window: bool = False
    projection_scale: float = DEFAULT_PROJECTION_SCALE
    output_dir: str = DEFAULT_OUTPUT_DIR
    label: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def cadence(self):
        """ Snapshot stride, None for the automatic ceil(T / 512). """
        return None if self.oracle_cadence == 'auto' else int(self.oracle_cadence)

def parse_override(text):
    """ Split "--a.b=value" (or "a.b=value") into ("a.b", value), value parsed as JSON if possible. """
    key, separator, value = text.lstrip("-").partition("=")
    if not separator or not key:
        raise _invalid(text, "override must look like --key=value")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value

def apply_overrides(config_dict, overrides):
    """ Set dotted keys in a nested dict, creating intermediate objects.

    Args:
        config_dict (dict): Config to update; not modified.
        overrides (dict): {"schedule.c_theta": 0.1, ...}.

    Returns:
        dict: Updated copy.

    """
    merged = copy.deepcopy(config_dict)
    for dotted, value in overrides.items():
        node = merged
        parts = dotted.split(".")
        for part in parts[:-1]:
            child = node.get(part)
            if not isinstance(child, dict):
                child = {}
                node[part] = child
            node = child
        node[parts[-1]] = value
    return merged

def _generate_mdp(mdp_spec):
    # pylint: disable=missing-function-docstring
    n_states = int(mdp_spec.get("n_states", 5))
    if n_states > MAX_STATES:
        raise _invalid("mdp.n_states", f"at most {MAX_STATES} states supported")
    floor = mdp_spec.get("min_transition_mass")
    floor = mdp_core.default_floor(max(n_states, 1)) if floor is None else float(floor)
    try:
        return mdp_core.random_mdp(
            n_states,
            int(mdp_spec.get("n_actions", 3)),
            int(mdp_spec.get("seed", 0)),
            reward_scale=float(mdp_spec.get("reward_scale", mdp_core.DEFAULT_REWARD_SCALE)),
            min_transition_mass=floor,
            gamma=float(mdp_spec.get("gamma", DEFAULT_GAMMA)),
        )
    except acer_exception.Acer_Exception as error:
        if error.type != "Infeasible floor":
            raise
        raise _invalid("mdp.min_transition_mass",
                       f"floor {floor} must lie in [0, 1/{n_states}]") from error

def _build_mdp(mdp_spec):
    # pylint: disable=missing-function-docstring
    if not isinstance(mdp_spec, dict):
        raise _invalid("mdp", "expected an inline MDP, a generator spec or {\"path\": ...}")
    try:
        if "path" in mdp_spec:
            mdp = mdp_core.load_mdp(mdp_spec["path"])
        elif "transition" in mdp_spec:
            mdp = mdp_core.FiniteMdp.from_dict(mdp_spec)
        else:
            mdp = _generate_mdp(mdp_spec)
    except (KeyError, TypeError, ValueError, OSError) as error:
        raise _invalid("mdp", str(error)) from error
    if mdp.n_states > MAX_STATES:
        raise _invalid("mdp.n_states", f"at most {MAX_STATES} states supported")
    violations = mdp_core.validate_mdp(mdp)
    if violations:
        raise acer_exception.Acer_Exception({"errorcode": "Invalid mdp", "data": {"violations": violations}})
    return mdp

def _build_schedule(schedule_dict):
    # pylint: disable=missing-function-docstring
    c_theta = float(schedule_dict.get("c_theta", DEFAULT_C_THETA))
    c_omega = float(schedule_dict.get("c_omega", DEFAULT_C_OMEGA))
    ratio_cap = float(schedule_dict.get("ratio_cap", DEFAULT_RATIO_CAP))
    t_offset = int(schedule_dict.get("t_offset", DEFAULT_T_OFFSET))
    if c_theta < 0 or c_omega < 0:
        raise _invalid("schedule", "c_theta and c_omega must be >= 0")
    if t_offset < 1:
        raise _invalid("schedule.t_offset", "t_offset must be >= 1")
    if c_theta > 0 and (c_omega == 0 or c_theta / c_omega > ratio_cap):
        raise _invalid("schedule.ratio", f"c_theta / c_omega must be <= ratio_cap = {ratio_cap}")
    return actor_critic.StepSchedule(c_theta, c_omega, t_offset), ratio_cap

def _build_oracle(oracle_dict, mdp):
    # pylint: disable=missing-function-docstring
    oracle_dict = copy.deepcopy(oracle_dict)
    params = oracle_dict.setdefault("params", {})
    if oracle_dict.get("kind") == reward.OracleKind.SHAPING_BLEND.value and "potential" in params:
        if len(params["potential"]) != mdp.n_states:
            raise _invalid("reward_oracle.params.potential", "potential must have one entry per state")
        params["endpoint"] = reward.potential_shaping_table(mdp, params.pop("potential")).tolist()
    if oracle_dict.get("kind") == reward.OracleKind.CONSTANT_DRIFT.value and "direction" in params:
        n_weights = mdp.n_states * mdp.n_actions
        if not isinstance(params["direction"], list) or len(params["direction"]) not in (n_weights, n_weights + 1):
            raise _invalid("reward_oracle.params.direction", f"direction must have {n_weights} or {n_weights + 1} entries")
    try:
        return reward.RewardOracle.from_dict(oracle_dict)
    except (TypeError, ValueError) as error:
        raise _invalid("reward_oracle", str(error)) from error

def _step_counts(config_dict):
    # pylint: disable=missing-function-docstring
    if "T_sweep" in config_dict:
        T_values = [int(T) for T in config_dict["T_sweep"]]
        field_name = "T_sweep"
    elif "T" in config_dict:
        T_values = [int(config_dict["T"])]
        field_name = "T"
    else:
        raise _invalid("T", "T or T_sweep is required")
    if not T_values or any(T < 2 for T in T_values):
        raise _invalid(field_name, "every T must be >= 2")
    for T in T_values:
        if T & (T - 1):
            logger.warning("T = %d is not a power of two; second-half windows will be uneven", T)
    return T_values

def build_config(config_dict):
    """ Validate a config dictionary and fill in defaults.

    Args:
        config_dict (dict): Parsed JSON config, overrides already applied.

    Returns:
        :obj:ExperimentConfig: The validated config.

    Raises:
        Acer_Exception: "Invalid config" naming the field, or "Invalid mdp".

    """
    if "mdp" not in config_dict:
        raise _invalid("mdp", "mdp is required")
    mdp = _build_mdp(config_dict["mdp"])
    features = feature_maps.features_from_spec(config_dict.get("features", DEFAULT_FEATURES), mdp.n_states)
    schedule, ratio_cap = _build_schedule(config_dict.get("schedule", {}))

    C_omega = config_dict.get("critic", {}).get("C_omega", DEFAULT_C_OMEGA_MODE)
    if C_omega != 'auto' and not (isinstance(C_omega, (int, float)) and C_omega > 0):
        raise _invalid("critic.C_omega", "C_omega must be a positive number or 'auto'")

    alpha0 = float(config_dict.get("alpha0", DEFAULT_ALPHA0))
    if alpha0 < 0:
        raise _invalid("alpha0", "alpha0 must be >= 0")

    cadence = config_dict.get("oracle_cadence", DEFAULT_CADENCE)
    if cadence != 'auto' and not (isinstance(cadence, int) and cadence >= 1):
        raise _invalid("oracle_cadence", "oracle_cadence must be an integer >= 1 or 'auto'")

    seeds = config_dict.get("seeds", DEFAULT_SEEDS)
    if not seeds or not all(isinstance(seed, int) for seed in seeds):
        raise _invalid("seeds", "seeds must be a nonempty list of integers")

    projection_scale = float(config_dict.get("projection_scale", DEFAULT_PROJECTION_SCALE))
    if projection_scale <= 0:
        raise _invalid("projection_scale", "projection_scale must be > 0")

    reward_oracle = _build_oracle(config_dict.get("reward_oracle", DEFAULT_ORACLE), mdp)
    return ExperimentConfig(
        mdp=mdp,
        features=features,
        schedule=schedule,
        ratio_cap=ratio_cap,
        C_omega=C_omega if C_omega == 'auto' else float(C_omega),
        reward_oracle=reward_oracle,
        alpha0=alpha0,
        T_values=_step_counts(config_dict),
        seeds=list(seeds),
        oracle_cadence=cadence,
        track_mismatch=bool(config_dict.get("track_mismatch", False)),
        dense_window=bool(config_dict.get("dense_window", False)),
        projection_scale=projection_scale,
        output_dir=str(config_dict.get("output_dir", DEFAULT_OUTPUT_DIR)),
        label=str(config_dict.get("label", reward_oracle.kind.value)),
        raw=config_dict,
    )

def read_json_object(path):
    """ Read a JSON object from path, raising "Invalid config" naming the path on any failure. """
    try:
        with open(path, encoding='utf-8') as file:
            config_dict = json.load(file)
    except OSError as error:
        raise _invalid(str(path), "cannot read config: " + str(error)) from error
    except json.JSONDecodeError as error:
        raise _invalid(str(path), "not valid JSON: " + str(error)) from error
    if not isinstance(config_dict, dict):
        raise _invalid(str(path), "config must be a JSON object")
    return config_dict

def load_config(path, overrides=None):
    """ Load, override and validate an experiment config file.

    Args:
        path (str): JSON config file.
        overrides (dict, optional): Dotted-key overrides applied before validation.

    Returns:
        :obj:ExperimentConfig: The validated config.

    """
    config_dict = read_json_object(path)
    return build_config(apply_overrides(config_dict, overrides or {}))

def worker_count(n_runs):
    """ Workers for n_runs runs, capped by EVOLVING_AC_THREADS when set. """
    workers = os.cpu_count() or 1
    if EVOLVING_AC_THREADS in os.environ:
        try:
            workers = int(os.environ[EVOLVING_AC_THREADS])
        except ValueError as error:
            raise _invalid(EVOLVING_AC_THREADS, "must be an integer") from error
        if workers < 1:
            raise _invalid(EVOLVING_AC_THREADS, "must be >= 1")
    return max(1, min(workers, n_runs))
