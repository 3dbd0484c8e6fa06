"""Experiment configuration: TOML parsing, strict schema validation, hashing."""
from __future__ import annotations

import copy
import hashlib
import json
import sys
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every schema diagnostic."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# Leaf specs: a python type, a (list, type) pair, or a nested dict schema.
# A list containing a single dict schema describes an array of tables.
NUM = (int, float)
VEC3 = ("vec", 3)
VEC4 = ("vec", 4)

PROFILE = {"center": VEC3, "radius": NUM}
CHI = {"angular_center": VEC3, "angular_radius": NUM, "plateau_angle": NUM}
KERNEL = {"tau1": NUM, "tau2": NUM}

SCHEMA = {
    "seed": int,
    "mass": NUM,
    "grid": {"spacing": NUM, "cutoff": NUM, "n_max": int},
    "output": {"dir": str},
    "expand": {
        "rho_min": NUM, "rho_max": NUM, "rho_points": int, "orders": (list, int),
        "slope_margin": NUM, "leading_tol": NUM, "abs_tol": NUM,
        "profiles": [{"center": VEC3, "radius": NUM, "point": VEC3}],
    },
    "outfield": {
        "lambda_min": NUM, "lambda_max": NUM, "lambda_points": int, "slope_max": NUM,
        "f": PROFILE, "chi": CHI, "kernel": KERNEL, "Lambda": NUM,
        "one_particle_samples": int, "one_particle_tol": NUM,
        "transfer_pairs": int, "transfer_tol": NUM, "conjugation_lambda": NUM,
    },
    "rates": {
        "Lambdas": (list, NUM), "product_eta": NUM, "product_tol": NUM,
        "etas": (list, NUM), "agreement_factor": NUM, "f": PROFILE, "chi": CHI, "kernel": KERNEL,
        "commutator_rapidity": NUM, "commutator_radius": NUM, "commutator_kernel": KERNEL,
        "commutator_chi": CHI, "commutator_slope_max": NUM, "double_commutator_tol": NUM,
    },
    "decay": {
        "bump_radius": NUM, "second_center": VEC4, "kappa": NUM, "kappa_alt": NUM, "r": NUM,
        "x_min": NUM, "x_max": NUM, "x_points": int, "times": (list, NUM),
        "boost_rapidity": NUM, "narrow_radius": NUM, "wide_radius": NUM, "narrow_change_max": NUM,
        "disjoint_rapidity": NUM, "disjoint_radius": NUM, "disjoint_lambdas": (list, NUM),
        "ratios": int, "disjoint_slope_max": NUM,
        "diagonal_lambda": NUM, "diagonal_shift": VEC4, "calibration_pairs": int, "calibration_margin": NUM,
        "diagonal_pairs": [{"center1": VEC3, "radius1": NUM, "center2": VEC3, "radius2": NUM}],
    },
    "cluster": {
        "spacing": NUM, "cutoff": NUM, "bump_radius": NUM, "time_shift": NUM,
        "d_values": (list, NUM), "c1": NUM, "M": NUM, "epsilon": NUM, "points_per_d": int,
        "times": (list, NUM), "fock_points": int, "fock_tol": NUM,
        "ahr_r": NUM, "ahr_excess": (list, NUM), "ahr_times": (list, NUM), "ahr_zero_tol": NUM,
        "elementary_tol": NUM,
    },
    "geom": {
        "samples": int, "nu_min": NUM, "nu_max": NUM, "lam_min": NUM, "lam_max": NUM,
        "difference_nu": NUM, "difference_pairs": int,
    },
    "lemma": {"samples": int, "max_dim": int, "orders": (list, int), "jordan_tol": NUM},
}


def _is_num(x, spec) -> bool:
    return isinstance(x, spec) and not isinstance(x, bool)


def _check(value, spec, path: str, problems: list):
    if isinstance(spec, dict):
        if not isinstance(value, dict):
            problems.append(f"{path or '<root>'}: expected a table")
            return
        for key in sorted(set(value) - set(spec)):
            problems.append(f"{path + '.' if path else ''}{key}: unknown key")
        for key in spec:
            sub = f"{path + '.' if path else ''}{key}"
            if key not in value:
                problems.append(f"{sub}: missing")
            else:
                _check(value[key], spec[key], sub, problems)
    elif isinstance(spec, list):
        if not isinstance(value, list) or not value:
            problems.append(f"{path}: expected a non-empty array of tables")
            return
        for i, item in enumerate(value):
            _check(item, spec[0], f"{path}[{i}]", problems)
    elif isinstance(spec, tuple) and spec and spec[0] == "vec":
        if not (isinstance(value, list) and len(value) == spec[1] and all(_is_num(v, NUM) for v in value)):
            problems.append(f"{path}: expected {spec[1]} numbers")
    elif isinstance(spec, tuple) and spec and spec[0] is list:
        if not (isinstance(value, list) and value and all(_is_num(v, spec[1]) for v in value)):
            problems.append(f"{path}: expected a non-empty array of numbers")
    elif spec is str:
        if not isinstance(value, str):
            problems.append(f"{path}: expected a string")
    elif not _is_num(value, spec):
        problems.append(f"{path}: expected {'an integer' if spec is int else 'a number'}")


def _check_ranges(cfg: dict, problems: list):
    positive = [("mass",), ("grid", "spacing"), ("grid", "cutoff"), ("expand", "rho_min"),
                ("outfield", "lambda_min"), ("decay", "bump_radius"), ("decay", "r"), ("cluster", "spacing"),
                ("cluster", "bump_radius"), ("geom", "samples"), ("lemma", "samples")]
    for keys in positive:
        node = cfg
        for k in keys:
            node = node[k]
        if node <= 0:
            problems.append(f"{'.'.join(keys)}: must be positive")
    if cfg["grid"]["n_max"] < 1:
        problems.append("grid.n_max: must be at least 1")
    if cfg["expand"]["rho_max"] <= cfg["expand"]["rho_min"]:
        problems.append("expand.rho_max: must exceed rho_min")
    if cfg["outfield"]["lambda_max"] <= cfg["outfield"]["lambda_min"]:
        problems.append("outfield.lambda_max: must exceed lambda_min")
    if cfg["decay"]["x_max"] <= cfg["decay"]["x_min"] or cfg["decay"]["x_min"] <= 0:
        problems.append("decay.x_min/x_max: need 0 < x_min < x_max")
    for eta in cfg["rates"]["etas"] + [cfg["rates"]["product_eta"]]:
        if not 0 < eta <= 1:
            problems.append("rates: eta values must lie in (0, 1]")
    if cfg["lemma"]["max_dim"] < 2:
        problems.append("lemma.max_dim: must be at least 2")


def validate(cfg: dict) -> dict:
    problems: list = []
    _check(cfg, SCHEMA, "", problems)
    if not problems:
        _check_ranges(cfg, problems)
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path=None, seed: int | None = None) -> dict:
    """Read and validate a TOML config; ``path=None`` loads the packaged default."""
    try:
        if path is None:
            text = resources.files("hyperlab.harness").joinpath("default.toml").read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        cfg = tomllib.loads(text)
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc}"]) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"TOML syntax: {exc}"]) from exc
    cfg = validate(cfg)
    if seed is not None:
        cfg = copy.deepcopy(cfg)
        cfg["seed"] = int(seed)
    return cfg


def config_hash(cfg: dict) -> str:
    """Hash of the experiment parameters (the output directory is excluded)."""
    payload = {k: v for k, v in cfg.items() if k != "output"}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]
