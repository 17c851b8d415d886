"""
Scenario configuration, built-in experiments, run/check drivers and output files.

A scenario document is a JSON object whose keys are exactly the
:class:`ScenarioConfig` field names. ``{"builtin": name}`` expands to one of
the predefined experiments; any other key given alongside overrides it.
"""

from __future__ import annotations

import copy
import json
import os
import time
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from . import analysis
from .analysis import ISOLATED, Problem
from .drem import determinant
from .estimator import ATC, CTA, StepsizeSchedule
from .excitation import cooperative_pe_scan
from .graph import (TopologySchedule, WeightedDigraph, is_jointly_connected, periodic_schedule,
                    validate, worst_case_connectivity_horizon)
from .model import (CosineSineSource, RegressionModel, RotatingCanonicalSource, ScriptedSource,
                    SensorField, TemperatureSource)

VARIANT_NAMES = {"cta": CTA, "atc": ATC, "isolated": ISOLATED, "none": ISOLATED}


class ScenarioError(ValueError):
    """Invalid scenario document."""


# --------------------------------------------------------------------------- topologies

def ring_topology(n: int, mode: str = "static") -> TopologySchedule:
    """Ring of `n` sensors.

    ``static``: every sensor keeps 1/2 and gives 1/4 to each ring neighbour.
    ``one-edge-periodic``: at time ``k`` only edge ``(k mod n, k mod n + 1)``
    is active, and its two endpoints average pairwise; period ``n``.
    """
    if n < 3:
        raise ValueError("a ring needs at least 3 sensors")
    if mode == "static":
        a = 0.5 * np.eye(n)
        for i in range(n):
            a[i, (i + 1) % n] += 0.25
            a[i, (i - 1) % n] += 0.25
        return periodic_schedule([a], horizon=0, min_weight=0.25, name="ring-static")
    if mode == "one-edge-periodic":
        mats = []
        for e in range(n):
            a = np.eye(n)
            i, j = e, (e + 1) % n
            a[i, i] = a[j, j] = a[i, j] = a[j, i] = 0.5
            mats.append(a)
        return periodic_schedule(mats, horizon=n - 1, min_weight=0.5, name="ring-one-edge")
    raise ValueError(f"unknown ring mode {mode!r}")


def metropolis_weights(adjacency_mask) -> np.ndarray:
    """Symmetric doubly stochastic weights ``1 / (1 + max(deg_i, deg_j))`` on an undirected graph."""
    mask = np.array(adjacency_mask, dtype=bool)
    np.fill_diagonal(mask, False)
    deg = mask.sum(axis=1)
    w = np.where(mask, 1.0 / (1.0 + np.maximum.outer(deg, deg)), 0.0)
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return w


def geometric_topology(positions, radius: float) -> WeightedDigraph:
    """Metropolis-weighted graph linking sensors within distance `radius`."""
    p = np.asarray(positions, dtype=float)
    dist = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=2)
    mask = (dist <= radius) if radius > 0 else np.zeros(dist.shape, dtype=bool)
    return WeightedDigraph(metropolis_weights(mask))


def geometric_schedule(sensor_field: SensorField, radius: float) -> TopologySchedule:
    return TopologySchedule(lambda k: geometric_topology(sensor_field.positions(k), radius).adjacency,
                            sensor_field.n, period=0, name=f"geometric(r={radius})")


# --------------------------------------------------------------------------- built-ins

A1 = np.eye(4)
A2 = np.array([[0.4, 0, 0, 0.6], [0, 1, 0, 0], [0.6, 0, 0.2, 0.2], [0, 0, 0.8, 0.2]])
A3 = np.array([[0.3, 0.7, 0, 0], [0.7, 0.3, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])

BUILTINS = {
    "paper-ex1": {
        "n": 4, "d": 2, "theta": [2.5, -1.0], "noise_variances": [1.0, 2.0, 3.0, 4.0],
        # A(k) = A1, A2, A3 for k mod 3 = 1, 2, 0
        "topology": {"kind": "periodic", "matrices": [A3.tolist(), A1.tolist(), A2.tolist()], "horizon": 3},
        "regressors": {"kind": "cosine-sine"},
        "mu": [0.1, 0.2, 0.3, 0.4],
        "stepsize": {"family": "power", "c": 1.8, "k0": 1, "p": 1},
        "variant": "cta", "initial_estimates": "zeros", "horizon": 2000, "trials": 1000, "base_seed": 0,
        "excitation_window": 8,
    },
    "paper-ex2": {
        "n": 30, "d": 5, "theta": {"gaussian": {"seed": 2024}}, "noise_variances": 1.0,
        "topology": {"kind": "ring", "mode": "static"},
        "regressors": {"kind": "rotating-canonical", "excited": 6, "offsets": [0, 6, 12, 13, 14]},
        "mu": 1.0, "stepsize": {"family": "power", "c": 1.0, "k0": 1, "p": 1},
        "variant": "cta", "initial_estimates": {"gaussian": {"seed": 2025}},
        "horizon": 30000, "trials": 20, "base_seed": 0, "excitation_window": 30,
    },
    "paper-ex3": {
        "n": 100, "d": 10, "theta": {"gaussian": {"seed": 7}}, "noise_variances": 1.0,
        "topology": {"kind": "geometric", "radius": 3.0},
        "regressors": {"kind": "temperature", "grid": 20, "beta": 10.0, "mobile": 50,
                       "min_distance": 0.5, "seed": 11},
        "mu": 1.0, "stepsize": {"family": "power", "c": 1.0, "k0": 1, "p": 1},
        "variant": "cta", "initial_estimates": {"gaussian": {"seed": 8}}, "horizon": 1000, "trials": 20,
        "base_seed": 0, "excitation_window": 100,
    },
}
BUILTINS["paper-ex1-isolated"] = dict(copy.deepcopy(BUILTINS["paper-ex1"]),
                                      topology={"kind": "identity"}, variant="isolated")
BUILTINS["paper-ex2-one-edge"] = dict(copy.deepcopy(BUILTINS["paper-ex2"]),
                                      topology={"kind": "ring", "mode": "one-edge-periodic"})

DEVIATIONS = {
    "paper-ex1": ["stepsize 1.8/k replaced by min(1, 1.8/(k+1)) so that alpha(k) lies in (0, 1] from k = 0",
                  "noise variance R_i = i read as a scalar variance"],
    "paper-ex2": ["ring weights 1/2 (self) and 1/4 (each neighbour) are a modelling choice",
                  "stepsize min(1, 1/(k+1)) is a modelling choice",
                  "theta and initial estimates drawn from N(0, 1) with fixed seeds, shared by all trials"],
    "paper-ex3": ["target and initial sensor positions are seeded random grid points",
                  "mobile sensors take one reflecting unit step per time step",
                  "Metropolis weights on the radius graph",
                  "theta and initial estimates drawn from N(0, 1) with fixed seeds",
                  "R_i = 1, mu_i = 1 and stepsize min(1, 1/(k+1)) are modelling choices"],
}
DEVIATIONS["paper-ex1-isolated"] = DEVIATIONS["paper-ex1"]
DEVIATIONS["paper-ex2-one-edge"] = DEVIATIONS["paper-ex2"] + [
    "one-edge schedule activates ring edges in ascending index order"]


# --------------------------------------------------------------------------- config

@dataclass
class ScenarioConfig:
    """Declarative, JSON-serializable scenario. Seeded entries are kept as ``{"gaussian": ...}`` objects."""

    n: int
    d: int
    theta: object
    topology: dict
    regressors: dict
    horizon: int
    noise_variances: object = 1.0
    mu: object = 1.0
    stepsize: dict = field(default_factory=lambda: {"family": "power", "c": 1.0, "k0": 1, "p": 1})
    variant: str = "cta"
    initial_estimates: object = "zeros"
    trials: int = 1
    base_seed: int = 0
    excitation_window: Optional[int] = None
    builtin: Optional[str] = None
    name: Optional[str] = None

    def to_document(self) -> dict:
        doc = {f.name: copy.deepcopy(getattr(self, f.name)) for f in fields(self)}
        return {k: v for k, v in doc.items() if v is not None}

    @property
    def deviations(self) -> list:
        return list(DEVIATIONS.get(self.builtin, []))

    def build(self) -> Problem:
        return build_problem(self)


FIELD_NAMES = {f.name for f in fields(ScenarioConfig)}
REQUIRED = ("n", "d", "theta", "topology", "regressors", "horizon")


def load_scenario(document) -> ScenarioConfig:
    """Validate a scenario document (dict, JSON string or path) into a :class:`ScenarioConfig`."""
    if isinstance(document, (str, os.PathLike)):
        text = str(document)
        if text.lstrip().startswith("{"):
            document = json.loads(text)
        else:
            with open(document) as fh:
                document = json.load(fh)
    if not isinstance(document, dict):
        raise ScenarioError("scenario document must be a JSON object")
    unknown = sorted(set(document) - FIELD_NAMES)
    if unknown:
        raise ScenarioError(f"unknown key {unknown[0]!r}")
    doc = {}
    name = document.get("builtin")
    if name is not None:
        if name not in BUILTINS:
            raise ScenarioError(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}")
        doc.update(copy.deepcopy(BUILTINS[name]))
        doc["name"] = name
    doc.update(copy.deepcopy(document))
    for key in REQUIRED:
        if key not in doc:
            raise ScenarioError(f"{key} required")
    config = ScenarioConfig(**doc)
    _validate(config)
    return config


def _int(value, key, minimum=None):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ScenarioError(f"{key} must be an integer")
    if minimum is not None and value < minimum:
        raise ScenarioError(f"{key} must be at least {minimum}")
    return int(value)


def _vector(desc, size, key):
    """Resolve a scalar, explicit list or ``{"gaussian": {"seed": s}}`` entry to a vector."""
    if isinstance(desc, dict):
        if set(desc) != {"gaussian"} or not isinstance(desc["gaussian"], dict):
            raise ScenarioError(f"{key}: expected {{'gaussian': {{'seed': s}}}}")
        g = desc["gaussian"]
        extra = set(g) - {"seed", "mean", "std"}
        if extra:
            raise ScenarioError(f"unknown key {key}.gaussian.{sorted(extra)[0]}")
        rng = np.random.default_rng(_int(g.get("seed", 0), f"{key}.gaussian.seed"))
        return g.get("mean", 0.0) + g.get("std", 1.0) * rng.standard_normal(size)
    if isinstance(desc, (int, float)) and not isinstance(desc, bool):
        return np.full(size, float(desc))
    arr = np.array(desc, dtype=float)
    if arr.shape != (size,):
        raise ScenarioError(f"{key} must have length {size}, got shape {arr.shape}")
    return arr


def _initial(desc, n, d):
    if desc == "zeros":
        return np.zeros((n, d))
    if isinstance(desc, dict):
        return _vector(desc, n * d, "initial_estimates").reshape(n, d)
    arr = np.array(desc, dtype=float)
    if arr.shape == (d,):
        return np.broadcast_to(arr, (n, d)).copy()
    if arr.shape != (n, d):
        raise ScenarioError(f"initial_estimates must have shape ({n}, {d}) or ({d},), got {arr.shape}")
    return arr


def _topology(desc, n, sensor_field=None):
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ScenarioError("topology must be an object with a 'kind'")
    kind = desc["kind"]
    allowed = {"periodic": {"kind", "matrices", "horizon", "min_weight"},
               "ring": {"kind", "mode"}, "identity": {"kind"}, "geometric": {"kind", "radius"}}
    if kind not in allowed:
        raise ScenarioError(f"unknown topology kind {kind!r}")
    extra = set(desc) - allowed[kind]
    if extra:
        raise ScenarioError(f"unknown key topology.{sorted(extra)[0]}")
    if kind == "periodic":
        mats = np.array(desc.get("matrices"), dtype=float)
        if mats.ndim != 3 or mats.shape[1:] != (n, n):
            raise ScenarioError(f"topology.matrices must be a list of {n}x{n} matrices")
        return periodic_schedule(list(mats), horizon=desc.get("horizon"), min_weight=desc.get("min_weight"))
    if kind == "ring":
        try:
            return ring_topology(n, desc.get("mode", "static"))
        except ValueError as exc:
            raise ScenarioError(f"topology: {exc}") from None
    if kind == "identity":
        return periodic_schedule([np.eye(n)], horizon=None, name="identity")
    if sensor_field is None:
        raise ScenarioError("geometric topology requires temperature regressors (sensor positions)")
    return geometric_schedule(sensor_field, float(desc.get("radius", 1.0)))


def _regressors(desc, n, d):
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ScenarioError("regressors must be an object with a 'kind'")
    kind = desc["kind"]
    allowed = {"cosine-sine": {"kind", "a0", "b0"}, "table": {"kind", "phi", "periodic"},
               "rotating-canonical": {"kind", "excited", "offsets"},
               "temperature": {"kind", "grid", "beta", "mobile", "min_distance", "seed"}}
    if kind not in allowed:
        raise ScenarioError(f"unknown regressors kind {kind!r}")
    extra = set(desc) - allowed[kind]
    if extra:
        raise ScenarioError(f"unknown key regressors.{sorted(extra)[0]}")
    if kind == "cosine-sine":
        src = CosineSineSource(desc.get("a0", 1.0), desc.get("b0", 2.0))
    elif kind == "table":
        src = ScriptedSource(desc.get("phi"), periodic=bool(desc.get("periodic", False)))
    elif kind == "rotating-canonical":
        src = RotatingCanonicalSource(n, d, desc.get("excited", 6), desc.get("offsets", (0, 6, 12, 13, 14)))
    else:
        sf = SensorField(n=n, n_targets=d, grid=desc.get("grid", 20), mobile=desc.get("mobile"),
                         min_distance=desc.get("min_distance", 0.5), seed=desc.get("seed", 0))
        src = TemperatureSource(sf, beta=desc.get("beta", 10.0))
    if (src.n, src.d) != (n, d):
        raise ScenarioError(f"regressors produce n={src.n}, d={src.d}; scenario declares n={n}, d={d}")
    return src


def _validate(config: ScenarioConfig):
    # resolves every entry once; raises ScenarioError on the first problem
    build_problem(config)
    _int(config.trials, "trials", 1)
    _int(config.base_seed, "base_seed")
    if config.excitation_window is not None:
        _int(config.excitation_window, "excitation_window", 1)


def build_problem(config: ScenarioConfig) -> Problem:
    n = _int(config.n, "n", 1)
    d = _int(config.d, "d", 1)
    horizon = _int(config.horizon, "horizon", 1)
    if config.variant not in VARIANT_NAMES:
        raise ScenarioError(f"variant must be one of {sorted(VARIANT_NAMES)}, got {config.variant!r}")
    theta = _vector(config.theta, d, "theta")
    variances = _vector(config.noise_variances, n, "noise_variances")
    if np.any(variances < 0):
        raise ScenarioError("noise_variances must be non-negative")
    mu = _vector(config.mu, n, "mu")
    if np.any(mu <= 0):
        raise ScenarioError("mu entries must be positive")
    if not isinstance(config.stepsize, dict):
        raise ScenarioError("stepsize must be an object")
    extra = set(config.stepsize) - {"family", "c", "k0", "p"}
    if extra:
        raise ScenarioError(f"unknown key stepsize.{sorted(extra)[0]}")
    try:
        stepsize = StepsizeSchedule(**config.stepsize)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"stepsize: {exc}") from None
    source = _regressors(config.regressors, n, d)
    sensor_field = getattr(source, "field", None)
    schedule = _topology(config.topology, n, sensor_field)
    if schedule.n != n:
        raise ScenarioError(f"topology has {schedule.n} sensors, scenario declares {n}")
    initial = _initial(config.initial_estimates, n, d)
    return Problem(model=RegressionModel(theta, variances), source=source, schedule=schedule,
                   stepsize=stepsize, mu=mu, initial=initial, horizon=horizon,
                   variant=VARIANT_NAMES[config.variant], name=config.name or config.builtin or "custom")


# --------------------------------------------------------------------------- checks

def scalar_regressor_sequence(source, d: int, K: int) -> np.ndarray:
    """``delta_i(k)`` for ``k < K`` with zero-padded warm-up, shape ``(n, K)``."""
    buf = np.zeros((source.n, d, d))
    out = np.empty((source.n, K))
    for k in range(K):
        buf = np.concatenate([source.all_phi(k)[:, None, :], buf[:, :-1, :]], axis=1)
        out[:, k] = determinant(buf)
    return out


def _source_period(source):
    if isinstance(source, CosineSineSource):
        return 8
    if isinstance(source, RotatingCanonicalSource):
        return source.n
    if isinstance(source, ScriptedSource) and source.periodic:
        return source.steps
    return 0


def excitation_report(config: ScenarioConfig, problem: Optional[Problem] = None):
    problem = problem or build_problem(config)
    d, K = problem.d, problem.horizon
    period = _source_period(problem.source)
    T = config.excitation_window or (period if period else min(K, 100))
    # after warm-up, a full period of window starts plus one window length
    span = min(K, d - 1 + period + T) if period else K
    deltas = scalar_regressor_sequence(problem.source, d, span)[:, d - 1:]
    T = min(T, deltas.shape[1])
    return cooperative_pe_scan(deltas, T, first_k=d - 1, periodic=bool(period) and span - (d - 1) >= period + T - 1)


def topology_report(problem: Problem):
    s = problem.schedule
    if problem.variant == ISOLATED:
        steps = [0]
        mats = [np.eye(problem.n)]
    else:
        steps = list(range(s.period)) if s.period else list(range(problem.horizon))
        mats = [s.adjacency(k) for k in steps]
    violations = []
    for k, a in zip(steps, mats):
        rep = validate(a, min_weight=s.min_weight if s.period else None)
        violations += [f"k={k}: {v}" for v in rep.violations]
    result = {"valid": not violations, "violations": violations[:50], "steps_checked": len(steps)}
    if problem.variant == ISOLATED:
        result.update(joint_connectivity={"required": False, "note": "non-cooperative baseline, A(k) = I"})
        return result, mats
    if s.period:
        h = s.horizon
        if h is None:
            h = next((c for c in range(s.period * s.n + 1) if is_jointly_connected(s, c)), None)
        ok = h is not None and is_jointly_connected(s, h)
        result["joint_connectivity"] = {"required": True, "horizon": h, "connected": bool(ok)}
    else:
        observed = worst_case_connectivity_horizon(mats)
        result["joint_connectivity"] = {"required": True, "observed_worst_case_horizon": observed,
                                        "connected": observed is not None,
                                        "scope": f"empirical over realized steps 0..{len(mats) - 1}"}
    return result, mats


def check(config: ScenarioConfig) -> dict:
    """Validation and excitation scan without running any trial."""
    problem = build_problem(config)
    topo, _ = topology_report(problem)
    exc = excitation_report(config, problem)
    failures = _failures(topo, exc)
    return {"scenario": config.to_document(), "topology": topo, "excitation": exc.to_dict(),
            "deviations": config.deviations, "passed": not failures, "failures": failures}


def _failures(topo, exc, diagnostics=None):
    out = []
    if not topo["valid"]:
        out.append("topology: A(k) not doubly stochastic or below declared min weight")
    jc = topo.get("joint_connectivity", {})
    if jc.get("required") and not jc.get("connected"):
        out.append("topology: not jointly strongly connected")
    if not exc.satisfied:
        out.append(f"excitation: cooperative PE not satisfied (omega = {exc.omega!r})")
    if diagnostics:
        if diagnostics.get("topology_violation_steps"):
            out.append("run: A(k) failed validation at some step")
        if diagnostics.get("contraction_violations"):
            out.append("run: adaptation factor left (0, 1]")
    return out


# --------------------------------------------------------------------------- run & output

CSV_FIELDS = ("trial_mean_V", "trial_mean_V1", "trial_mean_V2", "nu", "sigma", "alpha")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_trace_csv(trace, path):
    """One row per ``(k, dim)`` with 17 significant digits."""
    n = trace.err_norm.shape[1]
    d = trace.V.shape[1]
    header = ",".join(("k", "dim") + CSV_FIELDS + tuple(f"err_{i + 1}" for i in range(n)))
    lines = [header]
    for r, k in enumerate(trace.k):
        for l in range(d):
            vals = (trace.V[r, l], trace.V1[r, l], trace.V2[r, l], trace.nu[r, l], trace.sigma[r, l],
                    trace.alpha[r]) + tuple(trace.mean_error[r, :, l])
            lines.append(f"{int(k)},{l + 1}," + ",".join(map(_fmt, vals)))
    try:
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc


@dataclass
class RunSummary:
    scenario: dict
    excitation: dict
    topology: dict
    final: dict
    wall_time: float
    deviations: list
    failures: list
    diagnostics: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self):
        return {"scenario": self.scenario, "passed": self.passed, "failures": self.failures,
                "excitation": self.excitation, "topology": self.topology, "final": self.final,
                "diagnostics": self.diagnostics, "deviations": self.deviations, "wall_time": self.wall_time}


def _final_metrics(trace):
    r = len(trace.k) - 1
    return {"k": int(trace.k[r]), "trials": trace.trials,
            "total_V": float(trace.total_V[r]), "V": trace.V[r].tolist(),
            "V1": trace.V1[r].tolist(), "V2": trace.V2[r].tolist(),
            "mean_estimates": trace.mean_estimates[r].tolist(),
            "max_abs_mean_error": float(np.abs(trace.mean_error[r]).max()),
            "err_norm": trace.err_norm[r].tolist()}


def run(config: ScenarioConfig, out_dir: Optional[str] = None, trials: Optional[int] = None,
        seed: Optional[int] = None, variant: Optional[str] = None, oracle_check: bool = False):
    """Run the Monte Carlo experiment; optionally write ``trace.csv`` and ``summary.json``.

    Returns ``(summary, trace)``.
    """
    if trials is not None or seed is not None or variant is not None:
        doc = config.to_document()
        if trials is not None:
            doc["trials"] = trials
        if seed is not None:
            doc["base_seed"] = seed
        if variant is not None:
            doc["variant"] = variant
        config = load_scenario(doc)
    start = time.perf_counter()
    problem = build_problem(config)
    topo, _ = topology_report(problem)
    exc = excitation_report(config, problem)
    trace = analysis.run_monte_carlo(problem, config.trials, config.base_seed, oracle_check=oracle_check)
    wall = time.perf_counter() - start
    diagnostics = {k: (len(v) if isinstance(v, list) else v) for k, v in trace.diagnostics.items()}
    diagnostics["warmup_rows"] = trace.warmup
    summary = RunSummary(scenario=config.to_document(), excitation=exc.to_dict(), topology=topo,
                         final=_final_metrics(trace), wall_time=wall, deviations=config.deviations,
                         failures=_failures(topo, exc, trace.diagnostics), diagnostics=diagnostics)
    if out_dir is not None:
        try:
            os.makedirs(out_dir, exist_ok=True)
        except OSError as exc_:
            raise OSError(f"cannot create output directory {out_dir}: {exc_}") from exc_
        write_trace_csv(trace, os.path.join(out_dir, "trace.csv"))
        path = os.path.join(out_dir, "summary.json")
        try:
            with open(path, "w") as fh:
                json.dump(summary.to_dict(), fh, indent=2)
        except OSError as exc_:
            raise OSError(f"cannot write summary to {path}: {exc_}") from exc_
    return summary, trace
