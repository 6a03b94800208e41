"""Experiment sweeps over environments, data recipes, learners, N, gamma and seeds.

A sweep is the Cartesian product of its config lists. Work is grouped by
dataset: every learner applicable to a (env, gamma, recipe, N, seed) cell is
fit on the same sampled dataset, so learner comparisons are paired. Rows are
sorted before writing, so serial and parallel runs give identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .algorithms import LEARNERS, fit_learner, resolve_params
from .data import (
    behavior_from_policy,
    coverage_constant,
    concentrability,
    mix_behaviors,
    sample_dataset,
)
from .envs.corridor import CorridorSpec, build_corridor
from .envs.gridworld import GridSpec, build_gridworld, epsilon_greedy, open_cells_init
from .mdp import InvalidInputError, TabularMdp, TabularPolicy, evaluate_policy, solve_optimal
from .rng import GENERATOR_ID, derive_seed

RESULT_COLUMNS = ("env", "learner", "data_recipe", "N", "alpha", "gamma", "seed", "data_seed",
                  "subopt", "normalized_return", "c_star", "coverage_b", "config_hash", "error")
SORT_KEY = ("env", "learner", "data_recipe", "N", "alpha", "gamma", "seed")
GROUP_KEY = ("env", "learner", "data_recipe", "N", "alpha", "gamma")
CONFIG_KEYS = ("envs", "recipes", "learners", "n_values", "gammas", "seeds", "base_seed", "out",
               "name")
DEFAULT_SEEDS = 100
ENV_WORKERS = "OFFRL_WORKERS"


# environments --------------------------------------------------------------

def env_label(env) -> str:
    if isinstance(env, str):
        return env
    kind, params = _env_dict(env)
    inner = ",".join(f"{k}={params[k]}" for k in sorted(params))
    return f"{kind}({inner})"


def _env_dict(env: dict) -> tuple[str, dict]:
    if not isinstance(env, dict) or len(env) != 1:
        raise InvalidInputError(f"environment must be a name, a path or a one-key dict: {env!r}")
    (kind, params), = env.items()
    if kind not in ("corridor", "grid"):
        raise InvalidInputError(f"unknown environment kind {kind!r}")
    return kind, dict(params)


def build_env(env, gamma: float | None = None) -> tuple[TabularMdp, np.ndarray]:
    """The MDP plus the shifted initial distribution used by expert-shifted-init."""
    if isinstance(env, dict):
        kind, params = _env_dict(env)
        if kind == "corridor":
            if gamma is not None:
                params["gamma"] = gamma
            try:
                mdp = build_corridor(CorridorSpec(**params))
            except TypeError as exc:
                raise InvalidInputError(str(exc)) from None
            return mdp, _non_absorbing_init(mdp)
        rows = params.pop("rows", None)
        if rows is None:
            raise InvalidInputError("grid environment needs rows")
        spec, mdp = build_gridworld(GridSpec(tuple(rows), **params), gamma=gamma)
        return mdp, open_cells_init(spec)
    path = Path(env)
    if path.suffix == ".json":
        if not path.exists():
            raise InvalidInputError(f"no such MDP file {env}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"cannot parse {env}: {exc}") from None
        if isinstance(doc, dict) and len(doc) == 1:
            return build_env(doc, gamma)
        mdp = TabularMdp.from_dict(doc)
        if gamma is not None and gamma != mdp.gamma:
            mdp = replace(mdp, gamma=gamma)
        return mdp, _non_absorbing_init(mdp)
    if path.suffix == ".txt" and not path.exists():
        raise InvalidInputError(f"no such layout file {env}")
    spec, mdp = build_gridworld(env, gamma=gamma)
    return mdp, open_cells_init(spec)


def _non_absorbing_init(mdp: TabularMdp) -> np.ndarray:
    mask = ~mdp.absorbing_states()
    if not mask.any():
        mask[:] = True
    return mask / mask.sum()


# recipes and learners ------------------------------------------------------

_RECIPE_RE = re.compile(r"^(expert|expert-shifted-init|mix|noisy-expert-eps)(?:\(([^()]*)\))?$")


@dataclass(frozen=True)
class Recipe:
    kind: str
    level: float = 0.0  # mix proportion or epsilon-greedy noise

    @property
    def label(self) -> str:
        if self.kind in ("mix", "noisy-expert-eps"):
            return f"{self.kind}({self.level:g})"
        return self.kind


def parse_recipe(text) -> Recipe:
    if isinstance(text, dict):
        kind = text.get("kind", text.get("name"))
        level = text.get("level", text.get("alpha", text.get("eps", 0.0)))
        text = kind if kind in ("expert", "expert-shifted-init") else f"{kind}({level})"
    m = _RECIPE_RE.match(str(text).strip())
    if not m:
        raise InvalidInputError(f"unknown data recipe {text!r}")
    kind, arg = m.groups()
    if kind in ("mix", "noisy-expert-eps"):
        try:
            level = float(arg)
        except (TypeError, ValueError):
            raise InvalidInputError(f"recipe {text!r} needs a numeric level") from None
        if not 0.0 <= level <= 1.0:
            raise InvalidInputError(f"recipe level must lie in [0, 1]: {text!r}")
        return Recipe(kind, level)
    if arg is not None:
        raise InvalidInputError(f"recipe {kind} takes no argument")
    return Recipe(kind)


def recipe_behavior(mdp: TabularMdp, pi_star: TabularPolicy, shifted_init, recipe: Recipe):
    if recipe.kind == "expert":
        return behavior_from_policy(mdp, pi_star)
    if recipe.kind == "expert-shifted-init":
        return behavior_from_policy(mdp, pi_star, shifted_init)
    if recipe.kind == "mix":
        rand = behavior_from_policy(mdp, TabularPolicy.uniform(mdp.num_states, mdp.num_actions))
        return mix_behaviors(behavior_from_policy(mdp, pi_star), rand, recipe.level)
    return behavior_from_policy(mdp, epsilon_greedy(pi_star, recipe.level))


@dataclass(frozen=True)
class LearnerSpec:
    name: str
    params: dict = field(default_factory=dict)
    label: str = ""
    recipes: tuple | None = None  # restrict to these recipe labels

    def __post_init__(self):
        if self.name not in LEARNERS:
            raise InvalidInputError(f"unknown learner {self.name!r}")
        resolve_params(self.name, self.params, 0.9)
        if not self.label:
            tag = ",".join(f"{k}={self.params[k]}" for k in sorted(self.params))
            object.__setattr__(self, "label", f"{self.name}[{tag}]" if tag else self.name)
        if self.recipes is not None:
            object.__setattr__(self, "recipes",
                               tuple(parse_recipe(r).label for r in self.recipes))

    @classmethod
    def parse(cls, item) -> "LearnerSpec":
        if isinstance(item, str):
            return cls(item)
        if isinstance(item, dict):
            extra = set(item) - {"name", "params", "label", "recipes"}
            if extra or "name" not in item:
                raise InvalidInputError(f"bad learner entry {item!r}")
            rec = item.get("recipes")
            return cls(item["name"], dict(item.get("params") or {}), item.get("label", ""),
                       None if rec is None else tuple(rec))
        raise InvalidInputError(f"bad learner entry {item!r}")

    def to_dict(self) -> dict:
        d = {"name": self.name, "params": self.params, "label": self.label}
        if self.recipes is not None:
            d["recipes"] = list(self.recipes)
        return d


# configuration -------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    envs: tuple
    recipes: tuple
    learners: tuple
    n_values: tuple
    gammas: tuple = (None,)
    seeds: int = DEFAULT_SEEDS
    base_seed: int = 0
    out: str | None = None
    name: str = "custom"

    def __post_init__(self):
        for attr in ("envs", "recipes", "learners", "n_values", "gammas"):
            val = getattr(self, attr)
            if isinstance(val, (str, dict)) or not hasattr(val, "__iter__"):
                val = (val,)
            object.__setattr__(self, attr, tuple(val))
        if not self.envs or not self.recipes or not self.learners or not self.n_values:
            raise InvalidInputError("envs, recipes, learners and n_values must be nonempty")
        object.__setattr__(self, "recipes", tuple(
            r if isinstance(r, Recipe) else parse_recipe(r) for r in self.recipes))
        object.__setattr__(self, "learners", tuple(
            x if isinstance(x, LearnerSpec) else LearnerSpec.parse(x) for x in self.learners))
        labels = [x.label for x in self.learners]
        if len(set(labels)) != len(labels):
            raise InvalidInputError(f"duplicate learner labels {labels}")
        if len({r.label for r in self.recipes}) != len(self.recipes):
            raise InvalidInputError("duplicate recipes")
        if any(int(n) != n or n < 1 for n in self.n_values):
            raise InvalidInputError("N values must be positive integers")
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        for g in self.gammas:
            if g is not None and not 0.0 < g < 1.0:
                raise InvalidInputError(f"gamma must lie in (0, 1), got {g}")
        if int(self.seeds) != self.seeds or self.seeds < 1:
            raise InvalidInputError("seeds must be a positive integer")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise InvalidInputError("config must be a JSON object")
        doc = dict(doc)
        if "env" in doc:
            doc.setdefault("envs", [doc.pop("env")])
        extra = set(doc) - set(CONFIG_KEYS)
        if extra:
            raise InvalidInputError(f"unknown config keys {sorted(extra)}")
        missing = {"envs", "recipes", "learners", "n_values"} - set(doc)
        if missing:
            raise InvalidInputError(f"config is missing {sorted(missing)}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "envs": list(self.envs),
            "recipes": [r.label for r in self.recipes],
            "learners": [x.to_dict() for x in self.learners],
            "n_values": list(self.n_values),
            "gammas": list(self.gammas),
            "seeds": self.seeds,
            "base_seed": self.base_seed,
        }

    @property
    def config_hash(self) -> str:
        # order-independent: list members are sorted before hashing
        doc = self.to_dict()
        for key in ("envs", "recipes", "learners", "n_values", "gammas"):
            doc[key] = sorted(doc[key], key=lambda x: json.dumps(x, sort_keys=True))
        doc.pop("name")
        text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def learners_for(self, recipe: Recipe) -> list[LearnerSpec]:
        return [x for x in self.learners if x.recipes is None or recipe.label in x.recipes]

    def data_cells(self) -> list[tuple]:
        """(env, gamma, recipe, N, seed index) for every dataset the sweep draws."""
        return [(env, g, rec, n, i)
                for env in self.envs for g in self.gammas for rec in self.recipes
                if self.learners_for(rec)
                for n in self.n_values for i in range(self.seeds)]

    def num_cells(self) -> int:
        return sum(len(self.learners_for(c[2])) for c in self.data_cells())


def data_seed(config: ExperimentConfig, env, gamma, recipe: Recipe, n: int, index: int) -> int:
    return derive_seed(config.base_seed, env_label(env), repr(gamma), recipe.label, n, index)


# execution -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EnvContext:
    mdp: TabularMdp
    pi_star: TabularPolicy
    j_star: float
    mu: object
    c_star: float
    coverage_b: float


@lru_cache(maxsize=64)
def _context(env_json: str, gamma, recipe: Recipe) -> EnvContext:
    env = json.loads(env_json)
    mdp, shifted = build_env(env, gamma)
    _, pi_star = solve_optimal(mdp)
    j_star = float(mdp.initial_dist @ evaluate_policy(mdp, pi_star).v)
    mu = recipe_behavior(mdp, pi_star, shifted, recipe)
    d_star = behavior_from_policy(mdp, pi_star)
    return EnvContext(mdp, pi_star, j_star, mu, concentrability(d_star, mu),
                      coverage_constant(d_star, mu, mdp.horizon))


def _run_data_cell(task, only: str | None = None) -> list[tuple[dict, float]]:
    config, (env, gamma, recipe, n, index) = task
    ctx = _context(json.dumps(env, sort_keys=True), gamma, recipe)
    mdp = ctx.mdp
    seed = data_seed(config, env, gamma, recipe, n, index)
    base = {"env": env_label(env), "data_recipe": recipe.label, "N": n, "alpha": recipe.level,
            "gamma": mdp.gamma, "seed": index, "data_seed": seed, "c_star": ctx.c_star,
            "coverage_b": ctx.coverage_b, "config_hash": config.config_hash}
    dataset = sample_dataset(mdp, ctx.mu, n, seed)
    out = []
    for spec in config.learners_for(recipe):
        if only is not None and spec.label != only:
            continue
        row = dict(base, learner=spec.label, subopt=math.nan, normalized_return=math.nan, error="")
        start = time.perf_counter()
        try:
            policy = fit_learner(spec.name, dataset, mdp.num_states, mdp.num_actions, mdp.gamma,
                                 spec.params)
            j = float(mdp.initial_dist @ evaluate_policy(mdp, policy).v)
            row["subopt"] = ctx.j_star - j
            row["normalized_return"] = j / ctx.j_star if ctx.j_star != 0 else math.nan
        except Exception as exc:  # noqa: BLE001 - surfaced as an error row
            row["error"] = f"{type(exc).__name__}: {exc}"
        out.append((row, (time.perf_counter() - start) * 1e3))
    return out


def worker_count() -> int:
    raw = os.environ.get(ENV_WORKERS)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise InvalidInputError(f"{ENV_WORKERS} must be an integer, got {raw!r}") from None
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def validate_envs(config: ExperimentConfig) -> None:
    """Build every environment once so config errors surface before any work."""
    for env in config.envs:
        for g in config.gammas:
            try:
                json.dumps(env)
                build_env(env, g)
            except InvalidInputError:
                raise
            except (TypeError, ValueError, OSError) as exc:
                raise InvalidInputError(f"bad environment {env!r}: {exc}") from None


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list
    timings: list
    summary: list

    @property
    def num_errors(self) -> int:
        return sum(1 for r in self.rows if r["error"])


def _sort_key(row: dict) -> tuple:
    return tuple(row[k] for k in SORT_KEY)


def run_sweep(config: ExperimentConfig, workers: int | None = None,
              write: bool = True) -> SweepResult:
    validate_envs(config)
    tasks = [(config, cell) for cell in config.data_cells()]
    workers = worker_count() if workers is None else max(1, int(workers))
    if workers == 1 or len(tasks) <= 1:
        chunks = [_run_data_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            chunks = list(pool.map(_run_data_cell, tasks,
                                   chunksize=max(1, len(tasks) // (4 * workers))))
    pairs = sorted((p for chunk in chunks for p in chunk), key=lambda p: _sort_key(p[0]))
    rows = [p[0] for p in pairs]
    timings = [{**{k: p[0][k] for k in SORT_KEY}, "runtime_ms": p[1]} for p in pairs]
    result = SweepResult(config, rows, timings, summarize(rows))
    if write and config.out:
        write_outputs(result, config.out)
    return result


def run_cell(config: ExperimentConfig, cell: tuple) -> dict:
    """One result row for (learner label, recipe, N, seed index), on the first
    environment and gamma of the config unless the cell names them as
    (learner, recipe, N, seed, env, gamma)."""
    learner, recipe, n, index = cell[:4]
    env = cell[4] if len(cell) > 4 else config.envs[0]
    gamma = cell[5] if len(cell) > 5 else config.gammas[0]
    recipe = recipe if isinstance(recipe, Recipe) else parse_recipe(recipe)
    matches = [x for x in config.learners if x.label == learner or x.name == learner]
    if not matches:
        raise InvalidInputError(f"learner {learner!r} is not in the config")
    rows = _run_data_cell((config, (env, gamma, recipe, int(n), int(index))), matches[0].label)
    if not rows:
        raise InvalidInputError(f"learner {learner!r} does not run on recipe {recipe.label}")
    return rows[0][0]


# aggregation and output ----------------------------------------------------

def _stderr(x: np.ndarray) -> float:
    return float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0


def summarize(rows: list) -> list:
    groups: dict = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in GROUP_KEY), []).append(r)
    out = []
    for key in sorted(groups):
        members = groups[key]
        ok = [r for r in members if not r["error"]]
        sub = np.array([r["subopt"] for r in ok], dtype=float)
        nr = np.array([r["normalized_return"] for r in ok], dtype=float)
        entry = dict(zip(GROUP_KEY, key))
        entry.update({
            "n_seeds": len(members),
            "n_errors": len(members) - len(ok),
            "subopt_mean": float(sub.mean()) if ok else None,
            "subopt_stderr": _stderr(sub) if ok else None,
            "normalized_return_mean": float(nr.mean()) if ok else None,
            "normalized_return_stderr": _stderr(nr) if ok else None,
            "c_star": members[0]["c_star"],
            "coverage_b": members[0]["coverage_b"],
        })
        out.append(entry)
    return out


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.floating, np.integer)):
        return repr(value.item())
    return str(value)


def rows_to_csv(rows: list, columns=RESULT_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in columns])
    return buf.getvalue()


def read_results(path) -> list[dict]:
    """Parse a results.csv back into typed rows."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in ("N", "seed", "data_seed"):
            r[k] = int(r[k])
        for k in ("alpha", "gamma", "subopt", "normalized_return", "c_star", "coverage_b"):
            r[k] = float(r[k])
    return rows


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_json_safe(v) for v in x]
    return x


def write_outputs(result: SweepResult, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(rows_to_csv(result.rows))
    (out / "timings.csv").write_text(rows_to_csv(result.timings, SORT_KEY + ("runtime_ms",)))
    (out / "summary.json").write_text(json.dumps(_json_safe(result.summary), indent=2) + "\n")
    echo = result.config.to_dict()
    echo.update({
        "config_hash": result.config.config_hash,
        "generator": GENERATOR_ID,
        "seed_derivation": "sha256(base_seed, env, gamma, recipe, N, seed index)",
        "num_cells": len(result.rows),
        "num_errors": result.num_errors,
    })
    (out / "config-echo.json").write_text(json.dumps(echo, indent=2) + "\n")


def bound_rows(inputs_list) -> list[dict]:
    """Bound values in the results schema: ``learner`` is the bound id and
    ``subopt`` its value."""
    from .theory import BoundInputs, evaluate_bounds

    rows = []
    for x in inputs_list:
        if not isinstance(x, BoundInputs):
            x = BoundInputs.from_dict(x)
        tag = hashlib.sha256(json.dumps(asdict(x), sort_keys=True).encode()).hexdigest()[:16]
        for name, value in evaluate_bounds(x).items():
            rows.append({"env": "", "learner": name, "data_recipe": "", "N": x.n, "alpha": "",
                         "gamma": 1.0 - 1.0 / x.h, "seed": "", "data_seed": "",
                         "subopt": float(value), "normalized_return": "", "c_star": x.c_star,
                         "coverage_b": "" if x.b is None else x.b, "config_hash": tag,
                         "error": ""})
    return rows


# presets -------------------------------------------------------------------

FIGURE3_LEARNERS = ("bc", {"name": "bc-pi-k", "params": {"k": 1}},
                    {"name": "bc-pi-k", "params": {"k": "H"}}, "rl-c", "rl-pc")
RL_VS_H_CORRIDOR = {"corridor": {"length": 4, "ledges": 100, "slip": 0.02, "detour": 0.06}}
RL_VS_H_NOISE = 0.8


def figure3_presets(name: str, seeds: int = DEFAULT_SEEDS) -> ExperimentConfig:
    if name == "figure3-left":
        return ExperimentConfig(envs=("single-critical", "multiple-critical", "cliffwalk"),
                                recipes=("expert", "expert-shifted-init"),
                                learners=FIGURE3_LEARNERS, n_values=(2000,), seeds=seeds,
                                name=name)
    if name == "figure3-right":
        return ExperimentConfig(envs=("multiple-critical",),
                                recipes=tuple(f"mix({a})" for a in (0, 0.25, 0.5, 0.75, 1.0)),
                                learners=FIGURE3_LEARNERS, n_values=(2000,), seeds=seeds,
                                name=name)
    raise InvalidInputError(f"unknown preset {name!r}")


def scaling_preset(name: str, seeds: int = DEFAULT_SEEDS) -> ExperimentConfig:
    if name == "bc-vs-n":
        return ExperimentConfig(envs=("multiple-critical",), recipes=("expert",),
                                learners=("bc",), n_values=(250, 500, 1000, 2000, 4000),
                                seeds=seeds, name=name)
    if name == "rl-vs-h":
        noisy = f"noisy-expert-eps({RL_VS_H_NOISE})"
        return ExperimentConfig(envs=(RL_VS_H_CORRIDOR,), recipes=("expert", noisy),
                                learners=({"name": "bc", "recipes": ["expert"]},
                                          {"name": "rl-c", "recipes": [noisy]}),
                                n_values=(50000,), gammas=(0.8, 0.9, 0.95, 0.975),
                                seeds=seeds, name=name)
    raise InvalidInputError(f"unknown preset {name!r}")


PRESETS = ("figure3-left", "figure3-right", "bc-vs-n", "rl-vs-h")


def preset(name: str, seeds: int | None = None, out: str | None = None) -> ExperimentConfig:
    seeds = DEFAULT_SEEDS if seeds is None else seeds
    if name.startswith("figure3"):
        cfg = figure3_presets(name, seeds)
    else:
        cfg = scaling_preset(name, seeds)
    return replace(cfg, out=out)


def mean_by(rows: list, value: str = "normalized_return", **match) -> float:
    """Mean of ``value`` over non-error rows whose columns equal ``match``."""
    vals = [r[value] for r in rows if not r["error"] and all(r[k] == v for k, v in match.items())]
    if not vals:
        raise KeyError(f"no rows match {match}")
    return float(np.mean(vals))


# pessimism audit -----------------------------------------------------------

AUDIT_KEYS = ("random_mdps", "envs", "n", "seeds", "delta", "base_seed")


def _audit_mdps(doc: dict) -> list[TabularMdp]:
    from .envs.random_mdp import random_mdp
    from .rng import make_rng

    mdps = [build_env(e)[0] for e in doc.get("envs", [])]
    spec = doc.get("random_mdps")
    if spec is not None:
        extra = set(spec) - {"count", "max_states", "max_actions", "gamma", "seed"}
        if extra:
            raise InvalidInputError(f"unknown random_mdps keys {sorted(extra)}")
        rng = make_rng(spec.get("seed", 0))
        for _ in range(int(spec.get("count", 20))):
            ns = int(rng.integers(3, int(spec.get("max_states", 5)) + 1))
            na = int(rng.integers(2, int(spec.get("max_actions", 3)) + 1))
            mdps.append(random_mdp(rng, ns, na, spec.get("gamma", 0.9)))
    if not mdps:
        raise InvalidInputError("audit config names no MDPs")
    return mdps


def _audit_one(task) -> float:
    from .algorithms import conservative_vi_lcb
    from .data import BehaviorDistribution, build_empirical_model
    from .theory import pessimism_audit

    mdp, index, n, seeds, delta, base = task
    mu = BehaviorDistribution(np.full((mdp.num_states, mdp.num_actions),
                                      1.0 / (mdp.num_states * mdp.num_actions)))
    records = []
    for i in range(seeds):
        ds = sample_dataset(mdp, mu, n, derive_seed(base, "audit", index, i))
        run = conservative_vi_lcb(build_empirical_model(ds, mdp.num_states, mdp.num_actions),
                                  mdp.gamma, delta)
        records.append((run.v_hat, evaluate_policy(mdp, run.policy).v))
    return pessimism_audit(records)


def pessimism_sweep(doc: dict, workers: int | None = None) -> dict:
    """Per-MDP violation rates of V-hat <= V^pi-hat for pessimistic value
    iteration on uniform-behavior data."""
    if not isinstance(doc, dict) or set(doc) - set(AUDIT_KEYS):
        raise InvalidInputError(f"audit config accepts only {AUDIT_KEYS}")
    n, seeds = int(doc.get("n", 200)), int(doc.get("seeds", 500))
    delta, base = float(doc.get("delta", 0.05)), int(doc.get("base_seed", 0))
    if n < 1 or seeds < 1 or not 0.0 < delta < 1.0:
        raise InvalidInputError("need n >= 1, seeds >= 1 and delta in (0, 1)")
    mdps = _audit_mdps(doc)
    tasks = [(m, i, n, seeds, delta, base) for i, m in enumerate(mdps)]
    workers = worker_count() if workers is None else workers
    if workers == 1:
        rates = [_audit_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            rates = list(pool.map(_audit_one, tasks))
    return {"n": n, "seeds": seeds, "delta": delta, "rates": rates,
            "max_rate": max(rates), "passed": max(rates) <= delta}
