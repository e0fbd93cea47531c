"""Experiment orchestration: replication fan-out, regret accounting,
reference bound curves, and CSV/JSON persistence.

Runs are deterministic: every (policy, replication) unit derives its own
random stream from the base seed, so results are identical no matter how
units are scheduled across worker processes, and output files are
byte-for-byte reproducible.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Union

import numpy as np

from .config import ConfigError, ExperimentConfig
from .core import OutcomeAlphabet, RngStream
from .envs import (
    BootstrapEnv,
    MarEnv,
    McarEnv,
    MissingMedEnv,
    MnarEnv,
    build_ignoremed_instance,
    ingest_pbc,
    sample_mar_config,
    sample_mcar_config,
    sample_mnar_config,
)
from .policies import UcbPolicy, make_policy

Env = Union[McarEnv, MarEnv, MnarEnv, MissingMedEnv, BootstrapEnv]

CSV_HEADER = "experiment,policy,replication,t,cum_regret"


@dataclass
class RegretCurve:
    """Per-policy cumulative pseudo-regret at the recorded checkpoints."""

    policy_name: str
    times: List[int]
    per_rep: np.ndarray  # replications x checkpoints
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def from_reps(cls, policy_name: str, times: List[int], per_rep: np.ndarray) -> "RegretCurve":
        per_rep = np.asarray(per_rep, dtype=float)
        mean = per_rep.mean(axis=0)
        if per_rep.shape[0] > 1:
            std = per_rep.std(axis=0, ddof=1)
        else:
            std = np.zeros_like(mean)
        return cls(policy_name, list(times), per_rep, mean, std)


def checkpoints(T: int, stride: int) -> List[int]:
    ts = list(range(stride, T + 1, stride))
    if not ts or ts[-1] != T:
        ts.append(T)
    return ts


def kappa_inf(mat: np.ndarray) -> float:
    """Max-row-sum condition number of a (possibly rectangular) table."""
    mat = np.asarray(mat, dtype=float)
    pinv = np.linalg.pinv(mat)
    return float(np.abs(mat).sum(axis=1).max() * np.abs(pinv).sum(axis=1).max())


def build_env(env_spec: Dict[str, Any]) -> Env:
    """Materialize the environment described by a validated env table."""
    kind = env_spec["kind"]
    seed = env_spec.get("seed", 0)
    if kind == "mcar":
        env = sample_mcar_config(env_spec["n"], RngStream(seed))
        if "gamma" in env_spec:
            env = McarEnv(env.mu, env_spec["gamma"], env.noise_std)
        return env
    if kind == "mar":
        return sample_mar_config(
            env_spec["n"], env_spec["K"], env_spec.get("peaked", False), RngStream(seed)
        )
    if kind == "mnar":
        return sample_mnar_config(
            env_spec["n"], env_spec["K"], env_spec["L"], RngStream(seed)
        )
    if kind == "ignoremed":
        return build_ignoremed_instance(env_spec["K"], env_spec["epsilon"])
    if kind == "bootstrap":
        return ingest_pbc(env_spec["csv"], None, RngStream(seed))
    raise ConfigError(f"unknown environment kind {kind!r}")


def build_policy(spec: Dict[str, Any], env: Env, alpha: float, T: int) -> UcbPolicy:
    """Construct a policy for this environment, wiring in whatever
    environment-derived inputs the kind needs (the known mediator
    distribution, the alphabet, per-arm condition-number bounds)."""
    kind = spec["kind"]
    n = env.n
    K = getattr(env, "K", 1)
    kwargs: Dict[str, Any] = {"n": n, "alpha": alpha, "T": T, "K": K}
    if "width_inflation" in spec:
        kwargs["width_inflation"] = spec["width_inflation"]
    if "width_mode" in spec:
        kwargs["width_mode"] = spec["width_mode"]
    if kind == "MarUcbKnownP":
        base = env.base if isinstance(env, MissingMedEnv) else env
        p = getattr(base, "p", None)
        if p is None:
            raise ConfigError("MarUcbKnownP needs an environment with a mediator distribution")
        kwargs["known_p"] = p
    elif kind == "MnarUcb":
        if not isinstance(env, MnarEnv):
            raise ConfigError("MnarUcb needs an mnar environment")
        kwargs["alphabet"] = env.alphabet
        kwargs["C"] = [kappa_inf(env.theta_matrix(a)) for a in range(n)]
    elif kind == "MissingMedMnarUcb":
        if not (isinstance(env, MissingMedEnv) and env.variant == "mnar"):
            raise ConfigError("MissingMedMnarUcb needs a missing-mediator mnar environment")
        base = env.base
        kwargs["alphabet"] = base.alphabet
        C = []
        for a in range(n):
            table = (base.p[a] * env.lam[a])[:, None] * base.q[a] * base.gamma_y[a][None, :]
            C.append(kappa_inf(table.T))
        kwargs["C"] = C
    return make_policy(kind, **kwargs)


def _policy_names(policies: List[Dict[str, Any]]) -> List[str]:
    names, seen = [], {}
    for spec in policies:
        kind = spec["kind"]
        seen[kind] = seen.get(kind, 0) + 1
        names.append(kind if seen[kind] == 1 else f"{kind}-{seen[kind]}")
    return names


def _run_unit(
    config: ExperimentConfig, policy_idx: int, rep: int, env: Optional[Env] = None
) -> List[float]:
    """One fully sequential (policy, replication) simulation."""
    if env is None:
        env = build_env(config.env)
    policy = build_policy(config.policies[policy_idx], env, config.alpha, config.T)
    gen = RngStream(config.base_seed).derive(policy_idx, rep).generator()
    means = [env.true_mean(a) for a in range(env.n)]
    mu_star = max(means)
    gaps = [mu_star - m for m in means]
    cps = checkpoints(config.T, config.stride)
    out: List[float] = []
    nxt = 0
    R = 0.0
    step = env.step
    select = policy.select_arm
    update = policy.update
    for t in range(1, config.T + 1):
        a = select()
        update(step(a, gen))
        R += gaps[a]
        if t == cps[nxt]:
            out.append(R)
            nxt += 1
    return out


def run_experiment(
    config: ExperimentConfig, workers: int = 1, env: Optional[Env] = None
) -> List[RegretCurve]:
    """Simulate every (policy, replication) pair and aggregate regret curves.

    workers > 1 fans the independent units out over processes; the result
    is identical to the sequential run because each unit's randomness is
    derived from (base_seed, policy index, replication) alone and results
    are re-assembled in canonical order. An explicit env bypasses
    build_env for hand-constructed instances.
    """
    if config.T < 1 or config.replications < 1 or config.stride < 1:
        raise ConfigError("T, replications and stride must all be at least 1")
    if not config.alpha > 1.0:
        raise ConfigError("alpha must exceed 1")
    units = [
        (pi, rep)
        for pi in range(len(config.policies))
        for rep in range(config.replications)
    ]
    results: Dict[tuple, List[float]] = {}
    if workers > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_run_unit, config, pi, rep, env): (pi, rep)
                for pi, rep in units
            }
            for fut, key in futures.items():
                results[key] = fut.result()
    else:
        for pi, rep in units:
            results[(pi, rep)] = _run_unit(config, pi, rep, env)
    times = checkpoints(config.T, config.stride)
    names = _policy_names(config.policies)
    curves = []
    for pi, name in enumerate(names):
        per_rep = np.array(
            [results[(pi, rep)] for rep in range(config.replications)], dtype=float
        )
        curves.append(RegretCurve.from_reps(name, times, per_rep))
    return curves


def theoretical_curves(config: ExperimentConfig, env: Env) -> Dict[str, Any]:
    """Unscaled reference bound shapes for the environment's regime.

    Returns {"times": [...], "columns": {name: [...]}}. Constant columns
    (S, H, per-arm S_a) are repeated across checkpoints so the table stays
    rectangular.
    """
    times = checkpoints(config.T, config.stride)
    alpha = config.alpha
    n = env.n
    cols: Dict[str, List[float]] = {}

    def const(value: float) -> List[float]:
        return [value] * len(times)

    if isinstance(env, McarEnv):
        g = env.gamma
        cols["upper"] = [math.sqrt(alpha * n * t * math.log(t) / g) for t in times]
        cols["lower"] = [math.sqrt(n * t / g) for t in times]
    elif isinstance(env, MarEnv):
        P = (env.p / env.gamma).sum(axis=1)
        S = float(P.mean())
        H = float(n / (1.0 / P).sum())
        cols["upper"] = [math.sqrt(alpha * t * math.log(t) * n * S) for t in times]
        cols["lower"] = [math.sqrt(t * n * H) for t in times]
        cols["S"] = const(S)
        cols["H"] = const(H)
    elif isinstance(env, MnarEnv):
        K, L = env.K, env.L
        S_sq = 0.0
        for a in range(n):
            theta = env.theta_matrix(a)
            C_a = kappa_inf(theta)
            gamma_a = float(env.gamma_y[a].min())
            norm = float(np.abs(theta).sum(axis=1).max())
            p_y = env.outcome_marginal(a)
            obs_mass = float(np.dot(p_y, env.gamma_y[a]))
            S_a = max(L * C_a / (gamma_a * norm), K / (gamma_a * math.sqrt(obs_mass)))
            cols[f"S_{a}"] = const(S_a)
            S_sq += S_a * S_a
        cols["upper"] = [math.sqrt(alpha * t * math.log(t) * S_sq) for t in times]
        cols = {"upper": cols.pop("upper"), **cols}
    elif isinstance(env, MissingMedEnv) and env.variant == "mar":
        base = env.base
        P = (base.p / base.gamma).sum(axis=1) / env.lam
        S = float(P.mean())
        cols["upper"] = [math.sqrt(alpha * t * math.log(t) * n * S) for t in times]
        cols["S"] = const(S)
    else:
        raise ValueError(f"no reference curves for environment kind {env.kind!r}")
    return {"times": times, "columns": cols}


def _fmt(x: float) -> str:
    return repr(float(x))


def write_results(
    curves: List[RegretCurve],
    out_dir,
    config: ExperimentConfig,
) -> List[str]:
    """Write the long-form CSV (when there are curves) and the JSON summary.

    Both files are deterministic byte-for-byte given the same inputs: fixed
    row order, repr float formatting, LF newlines, sorted JSON keys.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    name = config.experiment
    if curves:
        csv_path = os.path.join(out_dir, f"{name}.csv")
        lines = [CSV_HEADER]
        for curve in curves:
            for rep in range(curve.per_rep.shape[0]):
                row = curve.per_rep[rep]
                for j, t in enumerate(curve.times):
                    lines.append(
                        f"{name},{curve.policy_name},{rep},{t},{_fmt(row[j])}"
                    )
        try:
            with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write("\n".join(lines) + "\n")
        except OSError as e:
            raise OSError(f"cannot write {csv_path}: {e}") from e
        paths.append(csv_path)
    summary = {
        "experiment": name,
        "config_echo": config.echo(),
        "policies": [
            {
                "name": c.policy_name,
                "final_mean": float(c.mean[-1]),
                "final_std": float(c.std[-1]),
            }
            for c in curves
        ],
        "seed": config.base_seed,
    }
    json_path = os.path.join(out_dir, f"{name}.json")
    try:
        with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    except OSError as e:
        raise OSError(f"cannot write {json_path}: {e}") from e
    paths.append(json_path)
    return paths
