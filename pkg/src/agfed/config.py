"""Experiment config files: INI sections [task] / [algorithm] / [output].

Every field can be overridden on the command line by its dotted name
(``--set task.p=5``). Unknown keys are rejected rather than ignored so a
typo cannot silently fall back to a default.
"""

from __future__ import annotations

import configparser
from pathlib import Path

from .client import LocalSGDConfig
from .core import InvalidArgument
from .harness import ExperimentConfig
from .server import AggregationSettings, AlgorithmConfig
from .tasks import TaskConfig

_SECTIONS = ("task", "algorithm", "secure_aggregation", "output")

_TASK_KEYS = {
    "kind", "p", "num_clients", "seed", "partition", "samples_per_client",
    "centers", "points_per_domain", "spread", "init_value",
    "margins", "shares", "mixing", "noise", "input_dim", "num_classes",
}
_ALGORITHM_KEYS = {
    "algorithm", "lambda_update", "scaling_mode", "clients_per_round",
    "rounds", "lambda_lr", "window_len", "epochs", "batch_size", "learning_rate",
}
_SECAGG_KEYS = {"mask_stats", "mask_params", "scale_bits"}
_OUTPUT_KEYS = {"dir", "csv", "plots"}


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise InvalidArgument(f"expected a boolean, got {value!r}")


def _parse_floats(value: str) -> tuple[float, ...]:
    return tuple(float(v) for v in value.replace(",", " ").split())


def _parse_samples(value: str) -> int | tuple[int, int]:
    if ":" in value:
        lo, hi = value.split(":", 1)
        return (int(lo), int(hi))
    return int(value)


def load_config(
    path: str | Path,
    overrides: dict[str, str] | None = None,
    *,
    seed: int | None = None,
    out_dir: str | None = None,
) -> ExperimentConfig:
    """Parse a config file, apply dotted-name overrides, and validate."""
    parser = configparser.ConfigParser()
    read = parser.read(str(path))
    if not read:
        raise InvalidArgument(f"cannot read config file {path}")

    values: dict[str, dict[str, str]] = {s: {} for s in _SECTIONS}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise InvalidArgument(f"unknown config section [{section}]")
        for key, value in parser.items(section):
            values[section][key] = value

    for dotted, value in (overrides or {}).items():
        if "." not in dotted:
            raise InvalidArgument(f"override {dotted!r} is not of the form section.key")
        section, key = dotted.split(".", 1)
        if section not in _SECTIONS:
            raise InvalidArgument(f"unknown config section {section!r} in override")
        values[section][key] = value

    if seed is not None:
        values["task"]["seed"] = str(seed)
    if out_dir is not None:
        values["output"]["dir"] = out_dir

    for section, allowed in (
        ("task", _TASK_KEYS),
        ("algorithm", _ALGORITHM_KEYS),
        ("secure_aggregation", _SECAGG_KEYS),
        ("output", _OUTPUT_KEYS),
    ):
        unknown = set(values[section]) - allowed
        if unknown:
            raise InvalidArgument(f"unknown keys in [{section}]: {sorted(unknown)}")

    t = values["task"]
    for required in ("kind", "p", "num_clients", "seed", "partition"):
        if required not in t:
            raise InvalidArgument(f"[task] is missing required key {required!r}")
    task_kwargs: dict = {
        "kind": t["kind"],
        "p": int(t["p"]),
        "num_clients": int(t["num_clients"]),
        "seed": int(t["seed"]),
        "partition": t["partition"],
    }
    if "samples_per_client" in t:
        task_kwargs["samples_per_client"] = _parse_samples(t["samples_per_client"])
    for key, conv in (
        ("centers", _parse_floats), ("points_per_domain", int), ("spread", float),
        ("init_value", float), ("margins", _parse_floats), ("shares", _parse_floats),
        ("mixing", _parse_floats), ("noise", float), ("input_dim", int),
        ("num_classes", int),
    ):
        if key in t:
            task_kwargs[key] = conv(t[key])
    task = TaskConfig(**task_kwargs)

    a = values["algorithm"]
    local = LocalSGDConfig(
        epochs=int(a.get("epochs", "1")),
        batch_size=int(a.get("batch_size", "32")),
        learning_rate=float(a.get("learning_rate", "0.1")),
    )
    algorithm = AlgorithmConfig(
        algorithm=a.get("algorithm", "afa"),
        lambda_update=a.get("lambda_update", "eg"),
        scaling_mode=a.get("scaling_mode", "two-phase-exact"),
        clients_per_round=int(a.get("clients_per_round", "10")),
        rounds=int(a.get("rounds", "100")),
        lambda_lr=float(a.get("lambda_lr", "0.01")),
        window_len=int(a.get("window_len", "10")),
        local=local,
    )

    s = values["secure_aggregation"]
    aggregation = AggregationSettings(
        mask_stats=_parse_bool(s.get("mask_stats", "true")),
        mask_params=_parse_bool(s.get("mask_params", "false")),
        scale_bits=int(s.get("scale_bits", "20")),
    )

    o = values["output"]
    return ExperimentConfig(
        task=task,
        algorithm=algorithm,
        aggregation=aggregation,
        out_dir=o.get("dir"),
        csv_name=o.get("csv", "metrics.csv"),
        plots=_parse_bool(o.get("plots", "true")),
    )
