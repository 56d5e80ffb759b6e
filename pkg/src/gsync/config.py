"""Flat key-value run configuration: parsing, validation, and round-trip.

Schema (sectioned keys, '#' comments, matrices inline row-major with ';'
row separators or ``csv:relative/path``):

    system.kind = lorenz | torus_rotation | cat_map
    system.h, system.substeps, system.sigma, system.rho, system.beta,
    system.literal_sign            (lorenz flow map)
    system.angles                  (torus rotation)
    system.initial = 0 1 1.05
    system.n_steps = 4000
    observation.kind = projection | linear
    observation.indices = 0        (projection)
    observation.matrix = 1 0 0     (linear, row-major)
    statemap.kind = power_sine | esn | linear_delay
    statemap.alpha, statemap.lambda, statemap.k        (power_sine)
    statemap.A, statemap.C, statemap.zeta, statemap.squashing   (esn)
    statemap.q                     (linear_delay)
    region.N.kind = box | ball
    region.N.lo, region.N.hi       (box)
    region.N.center, region.N.radius   (ball)
    region.N.label
    run.washout, run.record, run.method, run.tol, run.max_iters,
    run.psi_record_from, run.grid_resolution, run.input_samples,
    run.forgetting_k, run.forgetting_trials, run.pair_budget, run.seed
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .dynsys import (CatMap, CoordinateProjection, DiscreteSystem,
                     LinearObservation, ObservationMap, TorusRotation,
                     lorenz_system)
from .errors import ConfigError
from .regions import AxisBox, Ball, InvariantRegion
from .statemaps import Esn, LinearDelay, PowerSine, StateMap


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _fmt_vec(v) -> str:
    return " ".join(_fmt(float(c)) for c in np.atleast_1d(v))


def _fmt_mat(m) -> str:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return "; ".join(" ".join(_fmt(c) for c in row) for row in m)


def _parse_vec(s: str, key: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in s.replace(",", " ").split()])
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse vector {s!r}") from exc


def _parse_matrix(s: str, key: str, base_dir: str) -> np.ndarray:
    s = s.strip()
    if s.startswith("csv:"):
        path = s[4:].strip()
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        if not os.path.exists(path):
            raise ConfigError(f"{key}: matrix file not found: {path}")
        try:
            return np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
        except Exception as exc:
            raise ConfigError(f"{key}: failed to read matrix CSV {path}: {exc}") from exc
    try:
        rows = [r for r in s.split(";") if r.strip()]
        return np.atleast_2d(np.array([[float(tok) for tok in r.split()] for r in rows]))
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse inline matrix {s!r}") from exc


def _parse_bool(s: str, key: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {s!r}")


class _Keys:
    """Typed accessors over the flat key-value dictionary."""

    def __init__(self, raw: dict, base_dir: str):
        self.raw = raw
        self.base_dir = base_dir
        self.used = set()

    def has(self, key: str) -> bool:
        return key in self.raw

    def get(self, key: str, default=None, required: bool = False) -> str | None:
        if key in self.raw:
            self.used.add(key)
            return self.raw[key]
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default

    def get_float(self, key, default=None, required=False):
        v = self.get(key, required=required)
        if v is None:
            return default
        try:
            return float(v)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected a number, got {v!r}") from exc

    def get_int(self, key, default=None, required=False):
        v = self.get(key, required=required)
        if v is None:
            return default
        try:
            return int(v)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected an integer, got {v!r}") from exc

    def get_bool(self, key, default=False):
        v = self.get(key)
        return default if v is None else _parse_bool(v, key)

    def get_vec(self, key, default=None, required=False):
        v = self.get(key, required=required)
        return default if v is None else _parse_vec(v, key)

    def get_matrix(self, key, required=False):
        v = self.get(key, required=required)
        return None if v is None else _parse_matrix(v, key, self.base_dir)


@dataclass
class RunConfig:
    """A parsed, validated, fully resolved run configuration."""

    system: DiscreteSystem
    observation: ObservationMap
    statemap: StateMap | None
    regions: list[InvariantRegion]
    initial: np.ndarray
    n_steps: int
    washout: int
    record: int
    method: str
    tol: float
    max_iters: int
    psi_record_from: int | None
    grid_resolution: int
    input_samples: int
    forgetting_k: list[int]
    forgetting_trials: int
    pair_budget: int
    seed: int
    resolved: dict = field(default_factory=dict)

    @property
    def time_scale(self) -> float | None:
        return getattr(self.system, "h", None)

    def resolved_text(self) -> str:
        lines = ["# resolved run configuration (reproduces this run)"]
        for k, v in self.resolved.items():
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"


def parse_config_text(text: str, base_dir: str = ".") -> RunConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return _build(raw, base_dir)


def parse_config(path: str) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        text = fh.read()
    return parse_config_text(text, base_dir=os.path.dirname(os.path.abspath(path)))


def _build_system(keys: _Keys, resolved: dict) -> tuple[DiscreteSystem, np.ndarray]:
    kind = keys.get("system.kind", required=True)
    if kind == "lorenz":
        h = keys.get_float("system.h", 0.01)
        substeps = keys.get_int("system.substeps", 8)
        sigma = keys.get_float("system.sigma", 10.0)
        rho = keys.get_float("system.rho", 28.0)
        beta = keys.get_float("system.beta", 8.0 / 3.0)
        literal = keys.get_bool("system.literal_sign", False)
        try:
            sys_ = lorenz_system(h=h, substeps=substeps, sigma=sigma, rho=rho,
                                 beta=beta, literal_sign=literal)
        except ValueError as exc:
            raise ConfigError(f"system: {exc}") from exc
        initial = keys.get_vec("system.initial", np.array([0.0, 1.0, 1.05]))
        resolved.update({"system.kind": "lorenz", "system.h": _fmt(h),
                         "system.substeps": str(substeps), "system.sigma": _fmt(sigma),
                         "system.rho": _fmt(rho), "system.beta": _fmt(beta),
                         "system.literal_sign": str(literal).lower()})
    elif kind == "torus_rotation":
        angles = keys.get_vec("system.angles", required=True)
        sys_ = TorusRotation(angles)
        initial = keys.get_vec("system.initial", np.zeros(sys_.phase_dim))
        resolved.update({"system.kind": "torus_rotation",
                         "system.angles": _fmt_vec(angles)})
    elif kind == "cat_map":
        sys_ = CatMap()
        initial = keys.get_vec("system.initial", np.array([0.1, 0.2]))
        resolved.update({"system.kind": "cat_map"})
    else:
        raise ConfigError(f"system.kind: unknown system {kind!r}")
    if initial.shape != (sys_.phase_dim,):
        raise ConfigError(f"system.initial: expected {sys_.phase_dim} coordinates, "
                          f"got {initial.size}")
    resolved["system.initial"] = _fmt_vec(initial)
    return sys_, initial


def _build_observation(keys: _Keys, sys_: DiscreteSystem, resolved: dict) -> ObservationMap:
    kind = keys.get("observation.kind", "projection")
    if kind == "projection":
        indices = keys.get_vec("observation.indices", np.array([0.0]))
        try:
            obs = CoordinateProjection([int(i) for i in indices], phase_dim=sys_.phase_dim)
        except ValueError as exc:
            raise ConfigError(f"observation.indices: {exc}") from exc
        resolved.update({"observation.kind": "projection",
                         "observation.indices": " ".join(str(i) for i in obs.indices)})
        return obs
    if kind == "linear":
        W = keys.get_matrix("observation.matrix", required=True)
        if W.shape[1] != sys_.phase_dim:
            raise ConfigError(f"observation.matrix: {W.shape[1]} columns do not match "
                              f"phase dimension {sys_.phase_dim}")
        resolved.update({"observation.kind": "linear",
                         "observation.matrix": _fmt_mat(W)})
        return LinearObservation(W)
    raise ConfigError(f"observation.kind: unknown observation {kind!r}")


def _build_statemap(keys: _Keys, obs: ObservationMap, resolved: dict) -> StateMap | None:
    kind = keys.get("statemap.kind")
    if kind is None:
        return None
    if kind == "power_sine":
        alpha = keys.get_float("statemap.alpha", required=True)
        lam = keys.get_float("statemap.lambda", required=True)
        kk = keys.get_float("statemap.k", required=True)
        try:
            F = PowerSine(alpha, lam, kk)
        except ValueError as exc:
            raise ConfigError(f"statemap: {exc}") from exc
        resolved.update({"statemap.kind": "power_sine", "statemap.alpha": _fmt(alpha),
                         "statemap.lambda": _fmt(lam), "statemap.k": _fmt(kk)})
    elif kind == "esn":
        A = keys.get_matrix("statemap.A", required=True)
        C = keys.get_matrix("statemap.C", required=True)
        zeta_raw = keys.get("statemap.zeta")
        zeta = _parse_vec(zeta_raw, "statemap.zeta") if zeta_raw is not None else None
        squash = keys.get("statemap.squashing", "tanh")
        try:
            F = Esn(A, C, zeta=zeta, squashing=squash)
        except Exception as exc:
            raise ConfigError(f"statemap: {exc}") from exc
        resolved.update({"statemap.kind": "esn", "statemap.A": _fmt_mat(A),
                         "statemap.C": _fmt_mat(C), "statemap.squashing": squash})
        if zeta is not None:
            resolved["statemap.zeta"] = _fmt_vec(zeta)
    elif kind == "linear_delay":
        q = keys.get_int("statemap.q", required=True)
        try:
            F = LinearDelay(q)
        except ValueError as exc:
            raise ConfigError(f"statemap: {exc}") from exc
        resolved.update({"statemap.kind": "linear_delay", "statemap.q": str(q)})
    else:
        raise ConfigError(f"statemap.kind: unknown state map {kind!r}")
    if F.input_dim != obs.obs_dim:
        raise ConfigError(f"statemap input dimension {F.input_dim} does not match "
                          f"observation dimension {obs.obs_dim}")
    return F


def _build_regions(keys: _Keys, F: StateMap | None, resolved: dict) -> list[InvariantRegion]:
    indices = set()
    for k in keys.raw:
        if k.startswith("region.") and k.count(".") == 2:
            try:
                indices.add(int(k.split(".")[1]))
            except ValueError as exc:
                raise ConfigError(f"{k}: region index must be an integer") from exc
    indices = sorted(indices)
    regions = []
    for n in indices:
        pre = f"region.{n}"
        kind = keys.get(f"{pre}.kind", "box")
        label = keys.get(f"{pre}.label", f"V{n}")
        if kind == "box":
            lo = keys.get_vec(f"{pre}.lo", required=True)
            hi = keys.get_vec(f"{pre}.hi", required=True)
            try:
                region = AxisBox(lo, hi, label=label)
            except ValueError as exc:
                raise ConfigError(f"{pre}: {exc}") from exc
            resolved.update({f"{pre}.kind": "box", f"{pre}.lo": _fmt_vec(lo),
                             f"{pre}.hi": _fmt_vec(hi), f"{pre}.label": label})
        elif kind == "ball":
            center = keys.get_vec(f"{pre}.center", required=True)
            radius = keys.get_float(f"{pre}.radius", required=True)
            try:
                region = Ball(center, radius, label=label)
            except ValueError as exc:
                raise ConfigError(f"{pre}: {exc}") from exc
            resolved.update({f"{pre}.kind": "ball", f"{pre}.center": _fmt_vec(center),
                             f"{pre}.radius": _fmt(radius), f"{pre}.label": label})
        else:
            raise ConfigError(f"{pre}.kind: unknown region kind {kind!r}")
        if F is not None and region.dim != F.state_dim:
            raise ConfigError(f"{pre}: dimension {region.dim} does not match "
                              f"state dimension {F.state_dim}")
        regions.append(region)
    return regions


def _build(raw: dict, base_dir: str) -> RunConfig:
    keys = _Keys(raw, base_dir)
    resolved: dict[str, str] = {}

    system, initial = _build_system(keys, resolved)
    observation = _build_observation(keys, system, resolved)
    statemap = _build_statemap(keys, observation, resolved)
    regions = _build_regions(keys, statemap, resolved)

    washout = keys.get_int("run.washout", 2000)
    record = keys.get_int("run.record", 2000)
    n_steps = keys.get_int("system.n_steps", washout + record)
    method = keys.get("run.method", "drive")
    if method not in ("drive", "psi", "both"):
        raise ConfigError(f"run.method: expected drive|psi|both, got {method!r}")
    tol = keys.get_float("run.tol", 1e-12)
    max_iters = keys.get_int("run.max_iters", 500)
    psi_record_from = keys.get_int("run.psi_record_from", None)
    grid_resolution = keys.get_int("run.grid_resolution", 20)
    input_samples = keys.get_int("run.input_samples", 200)
    fk = keys.get_vec("run.forgetting_k", np.array([1.0, 5.0, 20.0, 100.0, 200.0]))
    forgetting_k = [int(k) for k in fk]
    forgetting_trials = keys.get_int("run.forgetting_trials", 100)
    pair_budget = keys.get_int("run.pair_budget", 4000)
    seed = keys.get_int("run.seed", 0)

    if washout < 0 or record < 1:
        raise ConfigError("run.washout must be >= 0 and run.record >= 1")
    if n_steps < 1:
        raise ConfigError("system.n_steps must be >= 1")

    unused = set(raw) - keys.used
    if unused:
        raise ConfigError(f"unknown configuration keys: {sorted(unused)}")

    resolved.update({
        "system.n_steps": str(n_steps),
        "run.washout": str(washout),
        "run.record": str(record),
        "run.method": method,
        "run.tol": _fmt(tol),
        "run.max_iters": str(max_iters),
        "run.grid_resolution": str(grid_resolution),
        "run.input_samples": str(input_samples),
        "run.forgetting_k": " ".join(str(k) for k in forgetting_k),
        "run.forgetting_trials": str(forgetting_trials),
        "run.pair_budget": str(pair_budget),
        "run.seed": str(seed),
    })
    if psi_record_from is not None:
        resolved["run.psi_record_from"] = str(psi_record_from)

    return RunConfig(system=system, observation=observation, statemap=statemap,
                     regions=regions, initial=initial, n_steps=n_steps,
                     washout=washout, record=record, method=method, tol=tol,
                     max_iters=max_iters, psi_record_from=psi_record_from,
                     grid_resolution=grid_resolution, input_samples=input_samples,
                     forgetting_k=forgetting_k, forgetting_trials=forgetting_trials,
                     pair_budget=pair_budget, seed=seed, resolved=resolved)
