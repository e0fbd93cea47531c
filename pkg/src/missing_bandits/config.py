"""Experiment configuration: TOML loading, overrides, and validation.

The accepted file shape is a small set of tables: [env] (kind plus the
kind's parameters), repeated [[policy]] entries, [run] (horizon,
replications, alpha, seeding, checkpoint stride) and [output]. Keys are
validated strictly so a typo fails loudly instead of being ignored.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .policies import POLICY_KINDS


class ConfigError(ValueError):
    """A configuration file or override is invalid."""


# Per-kind env keys, beyond the mandatory "kind".
_ENV_KEYS = {
    "mcar": {"n": int, "seed": int, "gamma": float},
    "mar": {"n": int, "K": int, "seed": int, "peaked": bool},
    "mnar": {"n": int, "K": int, "L": int, "seed": int},
    "ignoremed": {"K": int, "epsilon": float},
    "bootstrap": {"csv": str, "seed": int},
}
_ENV_REQUIRED = {
    "mcar": ("n",),
    "mar": ("n", "K"),
    "mnar": ("n", "K", "L"),
    "ignoremed": ("K", "epsilon"),
    "bootstrap": ("csv",),
}
_POLICY_KEYS = {"kind": str, "width_inflation": float, "width_mode": str}
_RUN_KEYS = {
    "T": int,
    "replications": int,
    "alpha": float,
    "base_seed": int,
    "stride": int,
}
_OUTPUT_KEYS = {"dir": str}


@dataclass
class ExperimentConfig:
    """Fully validated experiment description."""

    experiment: str
    env: Dict[str, Any]
    policies: List[Dict[str, Any]]
    T: int
    replications: int
    alpha: float
    base_seed: int
    stride: int
    output_dir: str

    def echo(self) -> Dict[str, Any]:
        """Nested dict form of the effective settings, for the summary file."""
        return {
            "env": dict(self.env),
            "policy": [dict(p) for p in self.policies],
            "run": {
                "T": self.T,
                "replications": self.replications,
                "alpha": self.alpha,
                "base_seed": self.base_seed,
                "stride": self.stride,
            },
            "output": {"dir": self.output_dir},
        }


def load_raw(path) -> Dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            return _toml.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except _toml.TOMLDecodeError as e:
        raise ConfigError(f"config {path} is not valid TOML: {e}") from e


def parse_override_value(text: str) -> Any:
    """Parse an override's right-hand side like a TOML literal, falling back
    to the raw string (so env.kind=mar works without quoting)."""
    try:
        return _toml.loads(f"v = {text}")["v"]
    except _toml.TOMLDecodeError:
        return text


def apply_overrides(raw: Dict[str, Any], overrides: List[str]) -> None:
    """Apply dotted-path KEY=VALUE overrides in place; last one wins.

    Numeric path segments index into [[policy]]-style lists. Paths that do
    not lead into the existing structure raise ConfigError naming the key.
    """
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form KEY=VALUE")
        key, _, value = item.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"override {item!r} has an empty key")
        parts = key.split(".")
        node: Any = raw
        for seg in parts[:-1]:
            if isinstance(node, list):
                try:
                    node = node[int(seg)]
                except (ValueError, IndexError):
                    raise ConfigError(f"unknown config key: {key}") from None
            elif isinstance(node, dict):
                if seg not in node:
                    # allow creating a missing table on the way to a known key
                    node[seg] = {}
                node = node[seg]
            else:
                raise ConfigError(f"unknown config key: {key}")
        leaf = parts[-1]
        if isinstance(node, list):
            try:
                node[int(leaf)] = parse_override_value(value.strip())
            except (ValueError, IndexError):
                raise ConfigError(f"unknown config key: {key}") from None
        elif isinstance(node, dict):
            node[leaf] = parse_override_value(value.strip())
        else:
            raise ConfigError(f"unknown config key: {key}")


def _coerce(value: Any, want: type, key: str) -> Any:
    if want is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key {key} must be a number")
        return float(value)
    if want is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"config key {key} must be an integer")
        return value
    if want is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"config key {key} must be a boolean")
        return value
    if want is str:
        if not isinstance(value, str):
            raise ConfigError(f"config key {key} must be a string")
        return value
    raise AssertionError(key)


def _check_table(table: Dict[str, Any], allowed: Dict[str, type], prefix: str) -> Dict[str, Any]:
    out = {}
    for key, value in table.items():
        if key not in allowed:
            raise ConfigError(f"unknown config key: {prefix}.{key}")
        out[key] = _coerce(value, allowed[key], f"{prefix}.{key}")
    return out


def build_config(
    raw: Dict[str, Any],
    seed_override: Optional[int] = None,
    seed_fallback: int = 0,
    output_override: Optional[str] = None,
) -> ExperimentConfig:
    """Validate a raw parsed config and materialize defaults.

    seed_override (a --seed flag) beats run.base_seed in the file, which
    beats seed_fallback (an environment-variable default).
    """
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table")
    for key in raw:
        if key not in ("env", "policy", "run", "output"):
            raise ConfigError(f"unknown config key: {key}")

    env_raw = raw.get("env")
    if not isinstance(env_raw, dict):
        raise ConfigError("config needs an [env] table")
    kind = env_raw.get("kind")
    if not isinstance(kind, str) or kind not in _ENV_KEYS:
        raise ConfigError(
            f"env.kind must be one of {sorted(_ENV_KEYS)}; got {kind!r}"
        )
    env = {"kind": kind}
    env.update(
        _check_table({k: v for k, v in env_raw.items() if k != "kind"}, _ENV_KEYS[kind], "env")
    )
    for req in _ENV_REQUIRED[kind]:
        if req not in env:
            raise ConfigError(f"env.{req} is required for kind {kind!r}")
    env.setdefault("seed", 0)
    if kind == "mar":
        env.setdefault("peaked", False)
    if "gamma" in env and not (0.0 < env["gamma"] <= 1.0):
        raise ConfigError("env.gamma must lie in (0, 1]")
    if "epsilon" in env and not (0.0 < env["epsilon"] < 1.0):
        raise ConfigError("env.epsilon must lie strictly between 0 and 1")
    for dim in ("n", "K", "L"):
        if dim in env and env[dim] < 1:
            raise ConfigError(f"env.{dim} must be at least 1")

    policy_raw = raw.get("policy", [])
    if not isinstance(policy_raw, list):
        raise ConfigError("policy must be an array of tables")
    policies = []
    for i, entry in enumerate(policy_raw):
        if not isinstance(entry, dict):
            raise ConfigError(f"policy.{i} must be a table")
        spec = _check_table(entry, _POLICY_KEYS, f"policy.{i}")
        p_kind = spec.get("kind")
        if p_kind not in POLICY_KINDS:
            raise ConfigError(
                f"policy.{i}.kind must be one of {list(POLICY_KINDS)}; got {p_kind!r}"
            )
        if "width_mode" in spec and spec["width_mode"] not in ("practical", "contracted"):
            raise ConfigError(f"policy.{i}.width_mode must be 'practical' or 'contracted'")
        if "width_inflation" in spec and spec["width_inflation"] <= 0:
            raise ConfigError(f"policy.{i}.width_inflation must be positive")
        policies.append(spec)

    run_raw = raw.get("run")
    if not isinstance(run_raw, dict):
        raise ConfigError("config needs a [run] table")
    run = _check_table(run_raw, _RUN_KEYS, "run")
    if "T" not in run:
        raise ConfigError("run.T is required")
    T = run["T"]
    if T < 1:
        raise ConfigError("run.T must be at least 1")
    replications = run.get("replications", 1)
    if replications < 1:
        raise ConfigError("run.replications must be at least 1")
    alpha = run.get("alpha", 2.0)
    if not alpha > 1.0:
        raise ConfigError("run.alpha must exceed 1")
    stride = run.get("stride", max(1, T // 200))
    if stride < 1:
        raise ConfigError("run.stride must be at least 1")
    if seed_override is not None:
        base_seed = seed_override
    else:
        base_seed = run.get("base_seed", seed_fallback)
    if base_seed < 0:
        raise ConfigError("base seed must be nonnegative")

    output_raw = raw.get("output", {})
    if not isinstance(output_raw, dict):
        raise ConfigError("output must be a table")
    output = _check_table(output_raw, _OUTPUT_KEYS, "output")
    output_dir = output_override if output_override is not None else output.get("dir", "results")

    return ExperimentConfig(
        experiment=kind,
        env=env,
        policies=policies,
        T=T,
        replications=replications,
        alpha=alpha,
        base_seed=base_seed,
        stride=stride,
        output_dir=output_dir,
    )


def load_config(
    path,
    overrides: Optional[List[str]] = None,
    seed_override: Optional[int] = None,
    seed_fallback: int = 0,
    output_override: Optional[str] = None,
) -> ExperimentConfig:
    raw = load_raw(path)
    if overrides:
        apply_overrides(raw, overrides)
    return build_config(raw, seed_override, seed_fallback, output_override)
