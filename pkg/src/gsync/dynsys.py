"""Invertible discrete-time dynamical systems and their observations.

Provides analytic maps (torus rotations, the cat map) and fixed-step
Runge-Kutta flow maps of autonomous vector fields, together with
trajectories, delay windows, equivariance checks, and sampled bounds on
tangent-map norms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFiniteError, RoundTripFailure

_CAT_FORWARD = np.array([[2.0, 1.0], [1.0, 1.0]])
_CAT_INVERSE = np.array([[1.0, -1.0], [-1.0, 2.0]])


def _as_point(m, dim) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape != (dim,):
        raise DimensionMismatch(f"expected a point of dimension {dim}, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError(f"non-finite point {m}")
    return m


@dataclass(frozen=True)
class Trajectory:
    """Consecutive iterates of a system, points[k] = phi^(t0+k)(points[0])."""

    points: np.ndarray  # (n, phase_dim)
    t0: int = 0

    def __len__(self) -> int:
        return len(self.points)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.points))


class DiscreteSystem:
    """Base class: an invertible map phi on R^phase_dim (possibly torus-reduced).

    Subclasses implement ``step``; analytic systems also override
    ``inverse_step`` and the tangent maps.  The default ``jacobian`` uses
    central finite differences with step ``fd_step`` and the default
    ``inverse_jacobian`` uses the identity T_m(phi^-1) = (T_{phi^-1(m)} phi)^-1.
    """

    kind = "custom"

    def __init__(self, phase_dim: int, fd_step: float = 1e-6):
        self.phase_dim = int(phase_dim)
        self.fd_step = float(fd_step)

    def step(self, m) -> np.ndarray:
        raise NotImplementedError

    def inverse_step(self, m) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, m) -> np.ndarray:
        """Tangent map T_m(phi), by central finite differences."""
        m = _as_point(m, self.phase_dim)
        h = self.fd_step
        cols = []
        for j in range(self.phase_dim):
            e = np.zeros(self.phase_dim)
            e[j] = h
            cols.append((self.step(m + e) - self.step(m - e)) / (2.0 * h))
        J = np.stack(cols, axis=1)
        if not np.all(np.isfinite(J)):
            raise NonFiniteError("finite-difference Jacobian is non-finite")
        return J

    def inverse_jacobian(self, m) -> np.ndarray:
        """Tangent map T_m(phi^-1) = (T_{phi^-1(m)} phi)^-1."""
        return np.linalg.inv(self.jacobian(self.inverse_step(m)))

    def iterate(self, m, t: int) -> np.ndarray:
        """phi^t(m) for any integer t (inverse steps when t < 0)."""
        m = _as_point(m, self.phase_dim)
        advance = self.step if t >= 0 else self.inverse_step
        for _ in range(abs(int(t))):
            m = advance(m)
        return m

    def trajectory(self, m0, n_steps: int, t0: int = 0) -> Trajectory:
        """n_steps forward iterates of m0 (n_steps + 1 points in total)."""
        if n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        m = _as_point(m0, self.phase_dim)
        pts = np.empty((n_steps + 1, self.phase_dim))
        pts[0] = m
        for k in range(n_steps):
            try:
                m = self.step(m)
            except NonFiniteError as exc:
                raise NonFiniteError(f"trajectory failed at step {k + 1}: {exc}") from exc
            pts[k + 1] = m
        return Trajectory(points=pts, t0=t0)


class TorusRotation(DiscreteSystem):
    """Rotation m -> (m + angles) mod 1 on the unit torus."""

    kind = "torus_rotation"

    def __init__(self, angles):
        angles = np.atleast_1d(np.asarray(angles, dtype=float))
        super().__init__(phase_dim=angles.size)
        self.angles = angles
        self.periods = np.ones(self.phase_dim)

    def step(self, m) -> np.ndarray:
        m = _as_point(m, self.phase_dim)
        return (m + self.angles) % 1.0

    def inverse_step(self, m) -> np.ndarray:
        m = _as_point(m, self.phase_dim)
        return (m - self.angles) % 1.0

    def jacobian(self, m) -> np.ndarray:
        return np.eye(self.phase_dim)

    def inverse_jacobian(self, m) -> np.ndarray:
        return np.eye(self.phase_dim)


class CatMap(DiscreteSystem):
    """Arnold cat map m -> [[2,1],[1,1]] m mod 1 on the 2-torus."""

    kind = "cat_map"

    def __init__(self):
        super().__init__(phase_dim=2)
        self.matrix = _CAT_FORWARD.copy()
        self.inverse_matrix = _CAT_INVERSE.copy()
        self.periods = np.ones(2)

    def step(self, m) -> np.ndarray:
        m = _as_point(m, 2)
        return (self.matrix @ m) % 1.0

    def inverse_step(self, m) -> np.ndarray:
        m = _as_point(m, 2)
        return (self.inverse_matrix @ m) % 1.0

    def jacobian(self, m) -> np.ndarray:
        return self.matrix.copy()

    def inverse_jacobian(self, m) -> np.ndarray:
        return self.inverse_matrix.copy()


class OdeFlow(DiscreteSystem):
    """Flow map of an autonomous vector field over a fixed time step.

    The step integrates ``field`` with the classical 4th-order Runge-Kutta
    scheme using ``substeps`` equal substeps; the inverse step integrates
    backward with the same scheme and verifies the forward round trip
    against ``roundtrip_tol``.
    """

    kind = "ode_flow"

    def __init__(self, field, phase_dim: int, h: float, substeps: int = 1,
                 roundtrip_tol: float = 1e-9, name: str = "ode_flow"):
        super().__init__(phase_dim=phase_dim)
        if h <= 0:
            raise ValueError("h must be positive")
        if substeps < 1:
            raise ValueError("substeps must be >= 1")
        self.field = field
        self.h = float(h)
        self.substeps = int(substeps)
        self.roundtrip_tol = float(roundtrip_tol)
        self.name = name

    def _integrate(self, m: np.ndarray, h: float) -> np.ndarray:
        hs = h / self.substeps
        y = m
        f = self.field
        with np.errstate(over="ignore", invalid="ignore"):
            for i in range(self.substeps):
                k1 = f(y)
                k2 = f(y + 0.5 * hs * k1)
                k3 = f(y + 0.5 * hs * k2)
                k4 = f(y + hs * k3)
                y = y + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                if not np.all(np.isfinite(y)):
                    raise NonFiniteError(
                        f"integration diverged at substep {i + 1} of {self.substeps}")
        return y

    def step(self, m) -> np.ndarray:
        m = _as_point(m, self.phase_dim)
        return self._integrate(m, self.h)

    def inverse_step(self, m, check: bool = True) -> np.ndarray:
        m = _as_point(m, self.phase_dim)
        prev = self._integrate(m, -self.h)
        if check:
            back = self._integrate(prev, self.h)
            err = np.linalg.norm(back - m)
            scale = max(1.0, float(np.linalg.norm(m)))
            if err > self.roundtrip_tol * scale:
                raise RoundTripFailure(
                    f"round-trip error {err:.3e} exceeds tolerance "
                    f"{self.roundtrip_tol:.1e} (relative to scale {scale:.3g})")
        return prev


def lorenz_field(sigma: float = 10.0, rho: float = 28.0, beta: float = 8.0 / 3.0,
                 literal_sign: bool = False):
    """Lorenz vector field.

    The first equation is du/dt = sigma*(v - u), which produces the familiar
    butterfly attractor.  ``literal_sign=True`` flips it to sigma*(u - v);
    that variant collapses trajectories instead of generating the attractor
    and is kept only as a documented comparison switch.
    """

    sign = -1.0 if literal_sign else 1.0

    def field(m):
        u, v, w = m
        return np.array([sigma * sign * (v - u), u * (rho - w) - v, u * v - beta * w])

    return field


def lorenz_system(h: float = 0.01, substeps: int = 8, sigma: float = 10.0,
                  rho: float = 28.0, beta: float = 8.0 / 3.0,
                  literal_sign: bool = False) -> OdeFlow:
    """Lorenz flow map with time step h.

    The default of 8 Runge-Kutta substeps keeps the forward/backward round
    trip below 1e-9 everywhere on the attractor.
    """
    return OdeFlow(lorenz_field(sigma, rho, beta, literal_sign), phase_dim=3,
                   h=h, substeps=substeps, name="lorenz")


class CustomSystem(DiscreteSystem):
    """Wrap user-supplied forward/inverse maps (and optional tangent maps)."""

    kind = "custom"

    def __init__(self, forward, inverse, phase_dim: int, jacobian=None,
                 inverse_jacobian=None, fd_step: float = 1e-6):
        super().__init__(phase_dim=phase_dim, fd_step=fd_step)
        self._forward = forward
        self._inverse = inverse
        self._jac = jacobian
        self._inv_jac = inverse_jacobian

    def step(self, m) -> np.ndarray:
        m = _as_point(m, self.phase_dim)
        out = np.asarray(self._forward(m), dtype=float)
        if not np.all(np.isfinite(out)):
            raise NonFiniteError("custom forward map returned non-finite values")
        return out

    def inverse_step(self, m) -> np.ndarray:
        m = _as_point(m, self.phase_dim)
        out = np.asarray(self._inverse(m), dtype=float)
        if not np.all(np.isfinite(out)):
            raise NonFiniteError("custom inverse map returned non-finite values")
        return out

    def jacobian(self, m) -> np.ndarray:
        if self._jac is not None:
            return np.asarray(self._jac(_as_point(m, self.phase_dim)), dtype=float)
        return super().jacobian(m)

    def inverse_jacobian(self, m) -> np.ndarray:
        if self._inv_jac is not None:
            return np.asarray(self._inv_jac(_as_point(m, self.phase_dim)), dtype=float)
        return super().inverse_jacobian(m)


class ObservationMap:
    """Map omega from phase points to R^obs_dim, with a differential."""

    kind = "custom"

    def __init__(self, obs_dim: int, phase_dim: int):
        self.obs_dim = int(obs_dim)
        self.phase_dim = int(phase_dim)

    def __call__(self, m) -> np.ndarray:
        """Observe one point (dim,) -> (obs_dim,) or a batch (..., dim)."""
        raise NotImplementedError

    def jacobian(self, m) -> np.ndarray:
        """D omega(m), shape (obs_dim, phase_dim); finite differences by default."""
        m = np.asarray(m, dtype=float)
        h = 1e-6
        cols = []
        for j in range(self.phase_dim):
            e = np.zeros(self.phase_dim)
            e[j] = h
            cols.append((self(m + e) - self(m - e)) / (2.0 * h))
        return np.stack(cols, axis=1)

    def norm_bound(self, samples) -> float:
        """Sampled sup of the operator norm of D omega."""
        samples = np.atleast_2d(np.asarray(samples, dtype=float))
        return max(float(np.linalg.svd(self.jacobian(m), compute_uv=False)[0])
                   for m in samples)


class CoordinateProjection(ObservationMap):
    """omega(m) = (m[i] for i in indices)."""

    kind = "projection"

    def __init__(self, indices, phase_dim: int):
        indices = [int(i) for i in np.atleast_1d(indices)]
        if len(set(indices)) != len(indices):
            raise ValueError("projection indices must be distinct")
        if any(i < 0 or i >= phase_dim for i in indices):
            raise ValueError("projection index out of range")
        super().__init__(obs_dim=len(indices), phase_dim=phase_dim)
        self.indices = indices

    def __call__(self, m) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        return m[..., self.indices]

    def jacobian(self, m) -> np.ndarray:
        J = np.zeros((self.obs_dim, self.phase_dim))
        for r, i in enumerate(self.indices):
            J[r, i] = 1.0
        return J

    def norm_bound(self, samples=None) -> float:
        return 1.0


class LinearObservation(ObservationMap):
    """omega(m) = W m for a fixed matrix W."""

    kind = "linear"

    def __init__(self, matrix):
        W = np.atleast_2d(np.asarray(matrix, dtype=float))
        super().__init__(obs_dim=W.shape[0], phase_dim=W.shape[1])
        self.matrix = W

    def __call__(self, m) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        return m @ self.matrix.T

    def jacobian(self, m) -> np.ndarray:
        return self.matrix.copy()

    def norm_bound(self, samples=None) -> float:
        return float(np.linalg.svd(self.matrix, compute_uv=False)[0])


class CustomObservation(ObservationMap):
    """Wrap a user-supplied observation function (optionally its Jacobian)."""

    kind = "custom"

    def __init__(self, func, obs_dim: int, phase_dim: int, jacobian=None):
        super().__init__(obs_dim=obs_dim, phase_dim=phase_dim)
        self._func = func
        self._jac = jacobian

    def __call__(self, m) -> np.ndarray:
        out = np.asarray(self._func(np.asarray(m, dtype=float)), dtype=float)
        return out

    def jacobian(self, m) -> np.ndarray:
        if self._jac is not None:
            return np.atleast_2d(np.asarray(self._jac(np.asarray(m, dtype=float)), dtype=float))
        return super().jacobian(m)


def observe_trajectory(obs: ObservationMap, traj: Trajectory) -> np.ndarray:
    """Observation values along a trajectory, shape (len(traj), obs_dim)."""
    z = obs(traj.points)
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    if not np.all(np.isfinite(z)):
        raise NonFiniteError("observation produced non-finite values")
    return z


def delay_window(sys: DiscreteSystem, obs: ObservationMap, m, length: int) -> np.ndarray:
    """Matrix of past observations, row k = omega(phi^-k(m)), k = 0..length-1."""
    if length < 1:
        raise ValueError("length must be >= 1")
    m = _as_point(m, sys.phase_dim)
    rows = np.empty((length, obs.obs_dim))
    cur = m
    for k in range(length):
        rows[k] = np.atleast_1d(obs(cur))
        if k + 1 < length:
            cur = sys.inverse_step(cur)
    return rows


def _orbit_segment(sys: DiscreteSystem, m: np.ndarray, lo: int, hi: int) -> dict:
    """Points phi^k(m) for k in [lo, hi], stepping incrementally from m."""
    seg = {0: m}
    cur = m
    for k in range(1, hi + 1):
        cur = sys.step(cur)
        seg[k] = cur
    cur = m
    for k in range(-1, lo - 1, -1):
        cur = sys.inverse_step(cur)
        seg[k] = cur
    return seg


def check_equivariance(sys: DiscreteSystem, obs: ObservationMap, m, t: int,
                       window: int) -> float:
    """Max deviation of the shift/orbit equivariance of the delay map.

    Compares omega(phi^(tau+t)(m)) with omega(phi^tau(phi^t(m))) entrywise
    for tau in [-window, window].  Zero for t = 0; otherwise limited by the
    integration round-trip accuracy.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    m = _as_point(m, sys.phase_dim)
    orbit_m = _orbit_segment(sys, m, min(-window + t, 0), max(window + t, 0))
    orbit_mt = _orbit_segment(sys, orbit_m[t], -window, window)
    worst = 0.0
    for tau in range(-window, window + 1):
        left = np.atleast_1d(obs(orbit_m[tau + t]))
        right = np.atleast_1d(obs(orbit_mt[tau]))
        worst = max(worst, float(np.max(np.abs(left - right))))
    return worst


def tangent_norm_bounds(sys: DiscreteSystem, samples) -> tuple[float, float]:
    """Sampled suprema of ||T phi|| and ||T phi^-1|| (largest singular values).

    Analytic Jacobians are used where the system provides them; flow maps
    fall back to central finite differences.  The returned values are
    suprema over the given samples and grow monotonically with the sample
    set.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.size == 0:
        raise ValueError("samples must be non-empty")
    sup_fwd = 0.0
    sup_inv = 0.0
    for m in samples:
        Jf = sys.jacobian(m)
        Ji = sys.inverse_jacobian(m)
        if not (np.all(np.isfinite(Jf)) and np.all(np.isfinite(Ji))):
            raise NonFiniteError("tangent map evaluation is non-finite")
        sup_fwd = max(sup_fwd, float(np.linalg.svd(Jf, compute_uv=False)[0]))
        sup_inv = max(sup_inv, float(np.linalg.svd(Ji, compute_uv=False)[0]))
    return sup_fwd, sup_inv


def attractor_box(traj: Trajectory, pad: float = 0.05) -> tuple[np.ndarray, np.ndarray]:
    """Padded coordinate hull of a trajectory, a compact working stand-in
    for the invariant set the system settles on."""
    lo = traj.points.min(axis=0)
    hi = traj.points.max(axis=0)
    span = hi - lo
    return lo - pad * span, hi + pad * span
