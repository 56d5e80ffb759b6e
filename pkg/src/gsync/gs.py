"""Construction and comparison of sampled generalized synchronizations.

A generalized synchronization maps phase-space points of the driving system
to the states of the driven system.  Two constructions are provided:

* ``drive_gs``       -- run the driven recursion along a trajectory and
                        discard a washout transient (uses observations only);
* ``psi_iterate_gs`` -- fixed-point iteration of the synchronization
                        operator f -> F(f o phi^-1, omega) restricted to the
                        trajectory's sample points (uses the system's inverse).

Both return a ``SampledGS`` holding the recorded points, values, residual
statistics, and provenance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynsys import DiscreteSystem, ObservationMap, Trajectory, observe_trajectory
from .errors import DisjointRanges, RegionEscape
from .regions import InvariantRegion
from .statemaps import StateMap


@dataclass
class SampledGS:
    """A synchronization represented by its values on trajectory points."""

    times: np.ndarray    # (n,) integer step indices
    points: np.ndarray   # (n, phase_dim) sampled phase points
    values: np.ndarray   # (n, state_dim) synchronization values
    method: dict         # provenance: construction name and parameters
    region_label: str = ""
    residual_max: float = float("nan")
    residual_mean: float = float("nan")

    def __len__(self) -> int:
        return len(self.times)


def _residuals(values: np.ndarray, z: np.ndarray, F: StateMap) -> np.ndarray:
    """Recursion defects ||f_t - F(f_{t-1}, z_t)|| over the recorded window."""
    pred = F.eval(values[:-1], z[1:])
    return np.linalg.norm(values[1:] - pred, axis=-1)


def recursion_residual(gs: SampledGS, F: StateMap, obs: ObservationMap) -> tuple[float, float]:
    """Max and mean violation of the one-step identity on the stored data."""
    if len(gs) < 2:
        raise ValueError("need at least two recorded points")
    z = obs(gs.points)
    if z.ndim == 1:
        z = z[:, None]
    r = _residuals(gs.values, z, F)
    return float(np.max(r)), float(np.mean(r))


def _check_region(values: np.ndarray, times: np.ndarray, region: InvariantRegion | None):
    if region is None:
        return
    inside = region.contains(values, tol=1e-12)
    if not np.all(inside):
        first = int(np.argmin(inside))
        raise RegionEscape(
            f"recorded state left region {region.label!r} first at step index "
            f"{int(times[first])}", index=int(times[first]))


def drive_gs(F: StateMap, sys: DiscreteSystem, obs: ObservationMap, m0, x0,
             washout_steps: int = 2000, record_steps: int = 2000,
             region: InvariantRegion | None = None,
             trajectory: Trajectory | None = None) -> SampledGS:
    """Drive the state recursion along a trajectory and record after washout.

    The recorded values approximate the synchronization at the recorded
    points with an error bounded by c^washout times the region diameter,
    where c is the state-contraction constant.  A precomputed trajectory
    (from the same m0, at least washout+record steps) may be supplied to
    avoid re-integration.
    """
    if washout_steps < 0:
        raise ValueError("washout_steps must be >= 0")
    if record_steps < 1:
        raise ValueError("record_steps must be >= 1")
    total = washout_steps + record_steps
    if trajectory is None:
        trajectory = sys.trajectory(m0, total)
    elif len(trajectory) < total + 1:
        raise ValueError("supplied trajectory is shorter than washout + record")
    z = observe_trajectory(obs, trajectory)

    x = np.asarray(x0, dtype=float).copy()
    if region is not None and not region.contains(x, tol=1e-12):
        raise RegionEscape(f"initial state lies outside region {region.label!r}", index=None)
    n_rec = record_steps + 1
    values = np.empty((n_rec, F.state_dim))
    if washout_steps == 0:
        values[0] = x
    for t in range(1, total + 1):
        x = F.eval(x, z[t])
        if t >= washout_steps:
            values[t - washout_steps] = x

    times = trajectory.t0 + np.arange(washout_steps, total + 1)
    points = trajectory.points[washout_steps:total + 1]
    _check_region(values, times, region)
    res = _residuals(values, z[washout_steps:total + 1], F)
    return SampledGS(
        times=times, points=points.copy(), values=values,
        method={"name": "drive", "washout_steps": washout_steps,
                "x0": np.asarray(x0, dtype=float).tolist()},
        region_label=region.label if region is not None else "",
        residual_max=float(np.max(res)), residual_mean=float(np.mean(res)))


def psi_iterate_gs(F: StateMap, sys: DiscreteSystem, obs: ObservationMap,
                   trajectory: Trajectory, f0_const, tol: float = 1e-12,
                   max_iters: int = 500, record_from: int = 0,
                   region: InvariantRegion | None = None,
                   l_fx: float | None = None) -> SampledGS:
    """Fixed-point iteration of f -> F(f o phi^-1, omega) on trajectory points.

    The function is stored only at the trajectory's points, where the
    inverse map is the stored predecessor.  The left endpoint's missing
    predecessor is computed once with one inverse step and its value is
    held at the constant f0 throughout, which injects a boundary error
    that decays geometrically with the point index; ``record_from`` drops
    that contaminated left margin from the returned sample set.

    Sweeps are simultaneous (Jacobi) updates from the previous iterate and
    stop when the sup-norm change falls to ``tol``.  If ``l_fx`` is given,
    the a-priori fixed-point error bound l_fx^n/(1-l_fx)*||f1-f0|| is
    reported alongside the final sup-change.
    """
    if len(trajectory) < 2:
        raise ValueError("trajectory must have at least two points")
    if not 0 <= record_from < len(trajectory) - 1:
        raise ValueError("record_from must leave at least two recorded points")
    z = observe_trajectory(obs, trajectory)
    f0 = np.asarray(f0_const, dtype=float)
    if region is not None and not region.contains(f0, tol=1e-12):
        raise RegionEscape(f"f0 lies outside region {region.label!r}", index=None)

    predecessor = sys.inverse_step(trajectory.points[0])

    n = len(trajectory)
    f = np.broadcast_to(f0, (n, F.state_dim)).copy()
    boundary = F.eval(f0, z[0])  # constant: frozen predecessor value
    n_iters = 0
    converged = False
    change = float("nan")
    change_history = []
    for sweep in range(1, max_iters + 1):
        f_new = np.empty_like(f)
        f_new[0] = boundary
        f_new[1:] = F.eval(f[:-1], z[1:])
        change = float(np.max(np.linalg.norm(f_new - f, axis=-1)))
        change_history.append(change)
        f = f_new
        n_iters = sweep
        if change <= tol:
            converged = True
            break
    first_change = change_history[0] if change_history else float("nan")

    apriori = float("nan")
    if l_fx is not None and 0.0 < l_fx < 1.0:
        apriori = l_fx ** n_iters / (1.0 - l_fx) * first_change

    times = trajectory.t0 + np.arange(record_from, n)
    points = trajectory.points[record_from:]
    values = f[record_from:]
    _check_region(values, times, region)
    res = _residuals(values, z[record_from:], F)
    return SampledGS(
        times=times, points=points.copy(), values=values.copy(),
        method={"name": "psi", "n_iters": n_iters, "f0": f0.tolist(),
                "tol": tol, "converged": converged,
                "final_change": change, "first_change": first_change,
                "change_history": change_history,
                "apriori_bound": apriori, "record_from": record_from,
                "predecessor": predecessor.tolist()},
        region_label=region.label if region is not None else "",
        residual_max=float(np.max(res)), residual_mean=float(np.mean(res)))


def compare_gs(a: SampledGS, b: SampledGS) -> float:
    """Sup distance between two sampled synchronizations on shared indices."""
    t_lo = max(a.times[0], b.times[0])
    t_hi = min(a.times[-1], b.times[-1])
    if t_lo > t_hi:
        raise DisjointRanges("the recorded time ranges do not overlap")
    ia = slice(int(t_lo - a.times[0]), int(t_hi - a.times[0]) + 1)
    ib = slice(int(t_lo - b.times[0]), int(t_hi - b.times[0]) + 1)
    if not np.allclose(a.points[ia], b.points[ib], atol=1e-9, rtol=0.0):
        raise ValueError("the two synchronizations sample different base trajectories")
    return float(np.max(np.linalg.norm(a.values[ia] - b.values[ib], axis=-1)))


@dataclass
class SweepResult:
    """Outcome of a multi-region synchronization sweep."""

    synchronizations: list      # SampledGS per successful region
    labels: list                # region labels, aligned with synchronizations
    separations: dict           # (label_i, label_j) -> min distance over shared times
    echo_index: int             # number of pairwise-distinct synchronizations
    failures: dict = field(default_factory=dict)  # label -> error message


def multistability_sweep(F: StateMap, regions, sys: DiscreteSystem,
                         obs: ObservationMap, m0, washout_steps: int = 2000,
                         record_steps: int = 2000, distinct_tol: float = 1e-6,
                         trajectory: Trajectory | None = None) -> SweepResult:
    """One drive-constructed synchronization per region, plus separations.

    Regions where the drive fails (for instance a region escape) are
    reported in ``failures`` and the sweep continues.  The echo index is a
    lower bound: the number of clusters of recorded synchronizations whose
    pairwise minimum separation exceeds ``distinct_tol``.
    """
    if trajectory is None:
        trajectory = sys.trajectory(m0, washout_steps + record_steps)
    gss, labels = [], []
    failures = {}
    for region in regions:
        try:
            gs = drive_gs(F, sys, obs, m0, region.center(),
                          washout_steps=washout_steps, record_steps=record_steps,
                          region=region, trajectory=trajectory)
        except Exception as exc:  # keep sweeping the remaining regions
            failures[region.label] = f"{type(exc).__name__}: {exc}"
            continue
        gss.append(gs)
        labels.append(region.label)

    separations = {}
    for i in range(len(gss)):
        for j in range(i + 1, len(gss)):
            d = np.linalg.norm(gss[i].values - gss[j].values, axis=-1)
            separations[(labels[i], labels[j])] = float(np.min(d))

    # greedy clustering on the min-separation graph
    cluster = list(range(len(gss)))
    for i in range(len(gss)):
        for j in range(i + 1, len(gss)):
            if separations[(labels[i], labels[j])] <= distinct_tol:
                cluster[j] = min(cluster[j], cluster[i])
    echo_index = len(set(cluster))
    return SweepResult(synchronizations=gss, labels=labels,
                       separations=separations, echo_index=echo_index,
                       failures=failures)


def write_gs_csv(gs: SampledGS, path, F: StateMap | None = None,
                 obs: ObservationMap | None = None,
                 metadata: dict | None = None,
                 time_scale: float | None = None) -> None:
    """Serialize a sampled synchronization to CSV with '#'-prefixed metadata.

    Columns: t, the phase coordinates m1..mk, the value coordinates f1..fN,
    and the one-step recursion residual (nan on the first recorded row, and
    throughout when F and obs are not supplied).  ``time_scale`` converts
    step indices to continuous time in the t column.
    """
    meta = {"method": gs.method.get("name", "?"), "region": gs.region_label,
            "residual_max": f"{gs.residual_max:.17g}",
            "residual_mean": f"{gs.residual_mean:.17g}"}
    if metadata:
        meta.update(metadata)
    pd = gs.points.shape[1]
    nd = gs.values.shape[1]
    header = ["t"] + [f"m{i+1}" for i in range(pd)] + [f"f{i+1}" for i in range(nd)] + ["residual"]
    res = np.full(len(gs), np.nan)
    if F is not None and obs is not None and len(gs) >= 2:
        z = obs(gs.points)
        if z.ndim == 1:
            z = z[:, None]
        res[1:] = _residuals(gs.values, z, F)
    with open(path, "w") as fh:
        for k, v in meta.items():
            fh.write(f"# {k}: {v}\n")
        fh.write(",".join(header) + "\n")
        for i in range(len(gs)):
            t = gs.times[i] * time_scale if time_scale is not None else gs.times[i]
            row = [f"{t:.17g}"] + [f"{c:.17g}" for c in gs.points[i]] \
                + [f"{c:.17g}" for c in gs.values[i]] + [f"{res[i]:.17g}"]
            fh.write(",".join(row) + "\n")
