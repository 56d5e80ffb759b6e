"""State maps F: R^N x R^d -> R^N with derivatives and Lipschitz estimation.

Built-in families:

* ``Esn``         -- sigma(A x + C z + zeta) with a componentwise squashing
* ``LinearDelay`` -- the lower-shift delay line (A = shift, C = e1)
* ``PowerSine``   -- componentwise signed power plus a trigonometric input term

All built-ins evaluate on batches (leading axes broadcast) and expose exact
closed-form derivative bounds where they exist; ``CustomStateMap`` falls back
to finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DomainViolation, NonFiniteError
from .regions import AxisBox, InputRange, InvariantRegion

_CHUNK = 8192


def sin_range(a: float, b: float) -> tuple[float, float]:
    """Exact range of sin over the interval [a, b] (radians)."""
    if b < a:
        raise ValueError("need a <= b")
    if b - a >= 2.0 * math.pi:
        return -1.0, 1.0
    two_pi = 2.0 * math.pi
    hi = 1.0 if math.floor((b - math.pi / 2.0) / two_pi) >= math.ceil((a - math.pi / 2.0) / two_pi) \
        else max(math.sin(a), math.sin(b))
    lo = -1.0 if math.floor((b + math.pi / 2.0) / two_pi) >= math.ceil((a + math.pi / 2.0) / two_pi) \
        else min(math.sin(a), math.sin(b))
    return lo, hi


def cos_range(a: float, b: float) -> tuple[float, float]:
    """Exact range of cos over the interval [a, b] (radians)."""
    return sin_range(a + math.pi / 2.0, b + math.pi / 2.0)


def _abs_sin_sup(a: float, b: float) -> float:
    lo, hi = sin_range(a, b)
    return max(abs(lo), abs(hi))


@dataclass(frozen=True)
class Squashing:
    """A squashing function with its first two derivatives and their suprema."""

    name: str
    func: callable
    deriv: callable
    deriv2: callable
    max_deriv: float
    max_deriv2: float


def _logistic(y):
    return 1.0 / (1.0 + np.exp(-y))


SQUASHINGS = {
    "tanh": Squashing("tanh", np.tanh,
                      lambda y: 1.0 - np.tanh(y) ** 2,
                      lambda y: -2.0 * np.tanh(y) * (1.0 - np.tanh(y) ** 2),
                      1.0, 4.0 / (3.0 * math.sqrt(3.0))),
    "logistic": Squashing("logistic", _logistic,
                          lambda y: _logistic(y) * (1.0 - _logistic(y)),
                          lambda y: _logistic(y) * (1.0 - _logistic(y)) * (1.0 - 2.0 * _logistic(y)),
                          0.25, math.sqrt(3.0) / 18.0),
    "identity": Squashing("identity", lambda y: y,
                          lambda y: np.ones_like(y),
                          lambda y: np.zeros_like(y),
                          1.0, 0.0),
}


class StateMap:
    """Base class for driven state maps."""

    kind = "custom"
    derivative_order = 0

    def __init__(self, state_dim: int, input_dim: int):
        self.state_dim = int(state_dim)
        self.input_dim = int(input_dim)

    def _check(self, x, z) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        if z.ndim == 0:
            z = z[None]
        if x.shape[-1] != self.state_dim:
            raise DimensionMismatch(f"state has trailing dimension {x.shape[-1]}, expected {self.state_dim}")
        if z.shape[-1] != self.input_dim:
            raise DimensionMismatch(f"input has trailing dimension {z.shape[-1]}, expected {self.input_dim}")
        return x, z

    def eval(self, x, z) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x, z) -> np.ndarray:
        return self.eval(x, z)

    def jac_state(self, x, z) -> np.ndarray:
        raise NotImplementedError

    def jac_input(self, x, z) -> np.ndarray:
        raise NotImplementedError

    def second_partials(self, x, z) -> tuple[float, float]:
        """Operator norms of the state-state and state-input second derivatives at (x, z)."""
        raise NotImplementedError

    # Batched norm evaluations used by grid suprema; the defaults loop.

    def jac_state_norms(self, X, Z) -> np.ndarray:
        return np.array([np.linalg.svd(self.jac_state(x, z), compute_uv=False)[0]
                         for x, z in zip(np.atleast_2d(X), np.atleast_2d(Z))])

    def jac_input_norms(self, X, Z) -> np.ndarray:
        return np.array([np.linalg.svd(self.jac_input(x, z), compute_uv=False)[0]
                         for x, z in zip(np.atleast_2d(X), np.atleast_2d(Z))])

    def second_partial_norms(self, X, Z) -> tuple[np.ndarray, np.ndarray]:
        pairs = [self.second_partials(x, z) for x, z in zip(np.atleast_2d(X), np.atleast_2d(Z))]
        arr = np.array(pairs)
        return arr[:, 0], arr[:, 1]

    def analytic_lipschitz(self, region: InvariantRegion, input_range: InputRange):
        """Closed-form derivative suprema over region x input_range, or None."""
        return None

    def interval_image(self, lo, hi, z_lo, z_hi):
        """Exact componentwise image interval of an axis box, or None."""
        return None


class Esn(StateMap):
    """Recurrent state map sigma(A x + C z + zeta)."""

    kind = "esn"
    derivative_order = 2

    def __init__(self, A, C, zeta=None, squashing: str = "tanh"):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        C = np.asarray(C, dtype=float)
        if C.ndim == 1:
            C = C[:, None]
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch("A must be square")
        if C.shape[0] != A.shape[0]:
            raise DimensionMismatch("C must have as many rows as A")
        super().__init__(state_dim=A.shape[0], input_dim=C.shape[1])
        if squashing not in SQUASHINGS:
            raise ValueError(f"unknown squashing {squashing!r}; choose from {sorted(SQUASHINGS)}")
        self.A = A
        self.C = C
        self.zeta = np.zeros(self.state_dim) if zeta is None else np.asarray(zeta, dtype=float)
        if self.zeta.shape != (self.state_dim,):
            raise DimensionMismatch("zeta must be an N-vector")
        self.squashing = SQUASHINGS[squashing]
        self.sigma_max_A = float(np.linalg.svd(A, compute_uv=False)[0])
        self.sigma_max_C = float(np.linalg.svd(C, compute_uv=False)[0])

    def _pre(self, x, z) -> np.ndarray:
        x, z = self._check(x, z)
        return x @ self.A.T + z @ self.C.T + self.zeta

    def eval(self, x, z) -> np.ndarray:
        return self.squashing.func(self._pre(x, z))

    def jac_state(self, x, z) -> np.ndarray:
        d = self.squashing.deriv(self._pre(x, z))
        return d[..., :, None] * self.A

    def jac_input(self, x, z) -> np.ndarray:
        d = self.squashing.deriv(self._pre(x, z))
        return d[..., :, None] * self.C

    def second_partials(self, x, z) -> tuple[float, float]:
        """Upper bounds max|sigma''| * smax(A)^2 and max|sigma''| * smax(A) smax(C)."""
        m2 = float(np.max(np.abs(self.squashing.deriv2(self._pre(x, z)))))
        return m2 * self.sigma_max_A ** 2, m2 * self.sigma_max_A * self.sigma_max_C

    def jac_state_norms(self, X, Z) -> np.ndarray:
        X = np.atleast_2d(X)
        Z = np.atleast_2d(Z)
        out = np.empty(len(X))
        for i in range(0, len(X), _CHUNK):
            d = self.squashing.deriv(self._pre(X[i:i + _CHUNK], Z[i:i + _CHUNK]))
            J = d[:, :, None] * self.A
            out[i:i + _CHUNK] = np.linalg.svd(J, compute_uv=False)[:, 0]
        return out

    def jac_input_norms(self, X, Z) -> np.ndarray:
        X = np.atleast_2d(X)
        Z = np.atleast_2d(Z)
        out = np.empty(len(X))
        for i in range(0, len(X), _CHUNK):
            d = self.squashing.deriv(self._pre(X[i:i + _CHUNK], Z[i:i + _CHUNK]))
            J = d[:, :, None] * self.C
            out[i:i + _CHUNK] = np.linalg.svd(J, compute_uv=False)[:, 0]
        return out

    def second_partial_norms(self, X, Z) -> tuple[np.ndarray, np.ndarray]:
        m2 = np.max(np.abs(self.squashing.deriv2(self._pre(np.atleast_2d(X), np.atleast_2d(Z)))), axis=-1)
        return m2 * self.sigma_max_A ** 2, m2 * self.sigma_max_A * self.sigma_max_C

    def analytic_lipschitz(self, region, input_range):
        ls = self.squashing.max_deriv
        m2 = self.squashing.max_deriv2
        return {
            "l_fx": ls * self.sigma_max_A,
            "l_fz": ls * self.sigma_max_C,
            "l_fxx": m2 * self.sigma_max_A ** 2,
            "l_fxz": m2 * self.sigma_max_A * self.sigma_max_C,
        }

    def interval_image(self, lo, hi, z_lo, z_hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        z_lo = np.atleast_1d(np.asarray(z_lo, dtype=float))
        z_hi = np.atleast_1d(np.asarray(z_hi, dtype=float))
        pre_lo = self.zeta + np.minimum(self.A * lo, self.A * hi).sum(axis=1) \
            + np.minimum(self.C * z_lo, self.C * z_hi).sum(axis=1)
        pre_hi = self.zeta + np.maximum(self.A * lo, self.A * hi).sum(axis=1) \
            + np.maximum(self.C * z_lo, self.C * z_hi).sum(axis=1)
        # all supported squashings are monotone increasing
        return self.squashing.func(pre_lo), self.squashing.func(pre_hi)


def shift_matrix(n: int) -> np.ndarray:
    A = np.zeros((n, n))
    for i in range(1, n):
        A[i, i - 1] = 1.0
    return A


class LinearDelay(StateMap):
    """Delay line of depth 2q+1: F(x, z) = (z, x_1, ..., x_{2q})."""

    kind = "linear_delay"
    derivative_order = 2

    def __init__(self, q: int):
        if q < 1:
            raise ValueError("q must be >= 1")
        n = 2 * q + 1
        super().__init__(state_dim=n, input_dim=1)
        self.q = int(q)
        self.A = shift_matrix(n)
        self.C = np.zeros((n, 1))
        self.C[0, 0] = 1.0

    def eval(self, x, z) -> np.ndarray:
        x, z = self._check(x, z)
        return np.concatenate([np.broadcast_to(z, x.shape[:-1] + (1,)), x[..., :-1]], axis=-1)

    def jac_state(self, x, z) -> np.ndarray:
        return self.A.copy()

    def jac_input(self, x, z) -> np.ndarray:
        return self.C.copy()

    def second_partials(self, x, z) -> tuple[float, float]:
        return 0.0, 0.0

    def jac_state_norms(self, X, Z) -> np.ndarray:
        return np.ones(len(np.atleast_2d(X)))

    def jac_input_norms(self, X, Z) -> np.ndarray:
        return np.ones(len(np.atleast_2d(X)))

    def second_partial_norms(self, X, Z) -> tuple[np.ndarray, np.ndarray]:
        n = len(np.atleast_2d(X))
        return np.zeros(n), np.zeros(n)

    def analytic_lipschitz(self, region, input_range):
        return {"l_fx": 1.0, "l_fz": 1.0, "l_fxx": 0.0, "l_fxz": 0.0}

    def interval_image(self, lo, hi, z_lo, z_hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        z_lo = np.atleast_1d(np.asarray(z_lo, dtype=float))
        z_hi = np.atleast_1d(np.asarray(z_hi, dtype=float))
        return (np.concatenate([z_lo, lo[:-1]]), np.concatenate([z_hi, hi[:-1]]))


class PowerSine(StateMap):
    """F(x, z) = (s(x_1), s(x_2), s(x_3)) + lam * (sin(kz), cos(kz), sin^2(kz)).

    The power s(x) = sign(x) |x|^alpha is the odd extension of x^alpha, so the
    map is defined on all sign-definite boxes; for lam = 0 it has the eight
    stable fixed points (+-1, +-1, +-1).  Derivatives blow up at coordinates
    equal to zero, which the derivative evaluations reject.
    """

    kind = "power_sine"
    derivative_order = 2

    def __init__(self, alpha: float, lam: float, k: float):
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if lam < 0 or k < 0:
            raise ValueError("lam and k must be non-negative")
        super().__init__(state_dim=3, input_dim=1)
        self.alpha = float(alpha)
        self.lam = float(lam)
        self.k = float(k)

    def _signed_power(self, x: np.ndarray) -> np.ndarray:
        return np.sign(x) * np.abs(x) ** self.alpha

    def _input_term(self, z: np.ndarray) -> np.ndarray:
        kz = self.k * z[..., 0]
        s = np.sin(kz)
        return self.lam * np.stack([s, np.cos(kz), s ** 2], axis=-1)

    def eval(self, x, z) -> np.ndarray:
        x, z = self._check(x, z)
        out = self._signed_power(x) + self._input_term(z)
        if not np.all(np.isfinite(out)):
            raise NonFiniteError("power-sine evaluation is non-finite")
        return out

    def _check_away_from_zero(self, x: np.ndarray):
        if np.any(np.abs(x) == 0.0):
            raise DomainViolation("derivative of |x|^alpha is undefined at a zero coordinate")

    def jac_state(self, x, z) -> np.ndarray:
        x, _ = self._check(x, z)
        if x.ndim != 1:
            raise DimensionMismatch("jac_state expects a single state vector")
        self._check_away_from_zero(x)
        d = self.alpha * np.abs(x) ** (self.alpha - 1.0)
        return np.diag(d)

    def jac_input(self, x, z) -> np.ndarray:
        _, z = self._check(x, z)
        kz = self.k * z[..., 0]
        col = self.lam * self.k * np.stack([np.cos(kz), -np.sin(kz), np.sin(2.0 * kz)], axis=-1)
        return col[..., :, None]

    def second_partials(self, x, z) -> tuple[float, float]:
        x, _ = self._check(x, z)
        self._check_away_from_zero(x)
        nxx = self.alpha * (1.0 - self.alpha) * float(np.max(np.abs(x) ** (self.alpha - 2.0)))
        return nxx, 0.0

    def jac_state_norms(self, X, Z) -> np.ndarray:
        X = np.atleast_2d(X)
        self._check_away_from_zero(X)
        return self.alpha * np.min(np.abs(X), axis=-1) ** (self.alpha - 1.0)

    def jac_input_norms(self, X, Z) -> np.ndarray:
        Z = np.atleast_2d(Z)
        kz = self.k * Z[:, 0]
        return self.lam * self.k * np.sqrt(1.0 + np.sin(2.0 * kz) ** 2)

    def second_partial_norms(self, X, Z) -> tuple[np.ndarray, np.ndarray]:
        X = np.atleast_2d(X)
        self._check_away_from_zero(X)
        nxx = self.alpha * (1.0 - self.alpha) * np.min(np.abs(X), axis=-1) ** (self.alpha - 2.0)
        return nxx, np.zeros(len(X))

    def analytic_lipschitz(self, region, input_range):
        if not isinstance(region, AxisBox):
            return None
        if np.any((region.lo <= 0.0) & (region.hi >= 0.0)):
            return None  # derivative unbounded across a zero coordinate
        m = float(np.min(np.minimum(np.abs(region.lo), np.abs(region.hi))))
        a, b = 2.0 * self.k * float(input_range.lo[0]), 2.0 * self.k * float(input_range.hi[0])
        s2 = _abs_sin_sup(min(a, b), max(a, b)) ** 2
        return {
            "l_fx": self.alpha * m ** (self.alpha - 1.0),
            "l_fz": self.lam * self.k * math.sqrt(1.0 + s2),
            "l_fxx": self.alpha * (1.0 - self.alpha) * m ** (self.alpha - 2.0),
            "l_fxz": 0.0,
        }

    def interval_image(self, lo, hi, z_lo, z_hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        a = self.k * float(np.atleast_1d(z_lo)[0])
        b = self.k * float(np.atleast_1d(z_hi)[0])
        a, b = min(a, b), max(a, b)
        s_lo, s_hi = sin_range(a, b)
        c_lo, c_hi = cos_range(a, b)
        sq_lo = 0.0 if s_lo <= 0.0 <= s_hi else min(s_lo ** 2, s_hi ** 2)
        sq_hi = max(s_lo ** 2, s_hi ** 2)
        g_lo = np.array([s_lo, c_lo, sq_lo])
        g_hi = np.array([s_hi, c_hi, sq_hi])
        return (self._signed_power(lo) + self.lam * g_lo,
                self._signed_power(hi) + self.lam * g_hi)


class CustomStateMap(StateMap):
    """Wrap an arbitrary state function; derivatives by central differences."""

    kind = "custom"

    def __init__(self, func, state_dim: int, input_dim: int,
                 jac_state=None, jac_input=None, fd_step: float = 1e-6,
                 derivative_order: int = 1):
        super().__init__(state_dim=state_dim, input_dim=input_dim)
        self._func = func
        self._jac_state = jac_state
        self._jac_input = jac_input
        self.fd_step = float(fd_step)
        self.derivative_order = derivative_order

    def eval(self, x, z) -> np.ndarray:
        x, z = self._check(x, z)
        out = np.asarray(self._func(x, z), dtype=float)
        if not np.all(np.isfinite(out)):
            raise NonFiniteError("custom state map returned non-finite values")
        return out

    def jac_state(self, x, z) -> np.ndarray:
        x, z = self._check(x, z)
        if self._jac_state is not None:
            return np.asarray(self._jac_state(x, z), dtype=float)
        h = self.fd_step
        cols = []
        for j in range(self.state_dim):
            e = np.zeros(self.state_dim)
            e[j] = h
            cols.append((self.eval(x + e, z) - self.eval(x - e, z)) / (2.0 * h))
        return np.stack(cols, axis=-1)

    def jac_input(self, x, z) -> np.ndarray:
        x, z = self._check(x, z)
        if self._jac_input is not None:
            return np.asarray(self._jac_input(x, z), dtype=float)
        h = self.fd_step
        cols = []
        for j in range(self.input_dim):
            e = np.zeros(self.input_dim)
            e[j] = h
            cols.append((self.eval(x, z + e) - self.eval(x, z - e)) / (2.0 * h))
        return np.stack(cols, axis=-1)

    def second_partials(self, x, z) -> tuple[float, float]:
        """Directional finite-difference estimates of the bilinear norms."""
        x, z = self._check(x, z)
        h = math.sqrt(self.fd_step)
        nxx = 0.0
        for j in range(self.state_dim):
            e = np.zeros(self.state_dim)
            e[j] = h
            D = (self.jac_state(x + e, z) - self.jac_state(x - e, z)) / (2.0 * h)
            nxx = max(nxx, float(np.linalg.svd(D, compute_uv=False)[0]))
        nxz = 0.0
        for j in range(self.input_dim):
            e = np.zeros(self.input_dim)
            e[j] = h
            D = (self.jac_state(x, z + e) - self.jac_state(x, z - e)) / (2.0 * h)
            nxz = max(nxz, float(np.linalg.svd(D, compute_uv=False)[0]))
        return nxx, nxz


@dataclass(frozen=True)
class LipschitzBounds:
    """Derivative suprema of a state map over a region and an input range.

    ``analytic`` holds closed-form bounds (true upper bounds) when the map
    provides them; ``grid`` holds sampled suprema (lower bounds of the true
    values).  The headline fields take the larger of the two.
    """

    l_fx: float
    l_fz: float
    l_fxx: float
    l_fxz: float
    method: str
    analytic: dict | None
    grid: dict | None
    region_label: str = ""
    input_lo: np.ndarray | None = None
    input_hi: np.ndarray | None = None

    def as_dict(self) -> dict:
        return {"l_fx": self.l_fx, "l_fz": self.l_fz,
                "l_fxx": self.l_fxx, "l_fxz": self.l_fxz}


def _cyclic_pair(X: np.ndarray, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = max(len(X), len(Z))
    idx = np.arange(n)
    return X[idx % len(X)], Z[idx % len(Z)]


def lipschitz_bounds(F: StateMap, region: InvariantRegion, input_range: InputRange,
                     *, resolution: int = 20, n_inputs: int = 200, rng=None,
                     max_grid_points: int = 250_000) -> LipschitzBounds:
    """Estimate the four derivative suprema of F over region x input_range.

    Grid estimation pairs a state grid with cycled input samples, so each
    evaluation point lies in the product set and the result is a sampled
    lower bound; closed forms are exact and take precedence when available.
    """
    analytic = F.analytic_lipschitz(region, input_range)

    X = region.grid(resolution, max_points=max_grid_points, rng=rng)
    Z = input_range.samples(n_inputs, rng=rng)
    Xp, Zp = _cyclic_pair(X, Z)
    gx = float(np.max(F.jac_state_norms(Xp, Zp)))
    gz = float(np.max(F.jac_input_norms(Xp, Zp)))
    nxx, nxz = F.second_partial_norms(Xp, Zp)
    grid = {"l_fx": gx, "l_fz": gz, "l_fxx": float(np.max(nxx)), "l_fxz": float(np.max(nxz))}

    if analytic is not None:
        chosen = {k: max(analytic[k], grid[k]) for k in grid}
        method = "analytic+grid"
    else:
        chosen = grid
        method = "grid"
    return LipschitzBounds(method=method, analytic=analytic, grid=grid,
                           region_label=region.label,
                           input_lo=input_range.lo.copy(),
                           input_hi=input_range.hi.copy(), **chosen)
