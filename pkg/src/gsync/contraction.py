"""Invariant-region checks, absorbing sets, and contraction certificates.

A certificate gathers the numerically estimated constants that decide
whether a driven state map has a unique, continuously settling response
(state-contraction constant below one) and whether the synchronization it
defines can be certified continuously differentiable (contraction constant
also below the reciprocal of the driving system's inverse tangent norm).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynsys import DiscreteSystem, ObservationMap, tangent_norm_bounds
from .errors import NotAContraction
from .regions import AxisBox, Ball, InputRange, InvariantRegion, RegionIntersection
from .statemaps import LipschitzBounds, StateMap, lipschitz_bounds

_PRODUCT_CAP = 400_000


@dataclass(frozen=True)
class InvarianceCheck:
    """Outcome of an invariance test F(V x inputs) subset V."""

    ok: bool
    margin: float
    method: str  # "interval" (exact componentwise image) or "sampled"

    def __bool__(self) -> bool:
        return self.ok


def check_invariance(F: StateMap, region: InvariantRegion, input_range: InputRange,
                     resolution: int = 20, n_inputs: int = 200, rng=None) -> InvarianceCheck:
    """Check F(region x input_range) subset region and report the margin.

    For axis boxes and maps with exact componentwise interval images
    (diagonal or monotone built-ins) the verdict is exact; otherwise the
    image is sampled on a grid and the margin is the worst boundary
    distance over the samples (negative if any image escapes).
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if isinstance(region, AxisBox):
        img = F.interval_image(region.lo, region.hi, input_range.lo, input_range.hi)
        if img is not None:
            img_lo, img_hi = img
            margin = float(np.min(np.minimum(img_lo - region.lo, region.hi - img_hi)))
            return InvarianceCheck(ok=margin >= 0.0, margin=margin, method="interval")

    X = region.grid(resolution, rng=rng)
    Z = input_range.samples(n_inputs, rng=rng)
    if len(X) * len(Z) <= _PRODUCT_CAP:
        XX = np.repeat(X, len(Z), axis=0)
        ZZ = np.tile(Z, (len(X), 1))
    else:
        n = max(len(X), len(Z))
        idx = np.arange(n)
        XX, ZZ = X[idx % len(X)], Z[idx % len(Z)]
    images = F.eval(XX, ZZ)
    margin = float(np.min(region.boundary_margin(images)))
    return InvarianceCheck(ok=margin >= 0.0, margin=margin, method="sampled")


def absorbing_set(F: StateMap, domain: InvariantRegion, input_range: InputRange,
                  v, safety: float = 1.05, n_inputs: int = 400, rng=None,
                  contraction: float | None = None,
                  degenerate_radius: float = 1e-9) -> InvariantRegion:
    """Compact forward-invariant set inside ``domain`` around the anchor v.

    With contraction constant c < 1 on the domain and r the largest
    displacement of the anchor over the input range, any ball of radius
    above r / (1 - c) intersected with the domain maps into itself; the
    returned region uses ``safety`` times that radius.
    """
    if safety <= 1.0:
        raise ValueError("safety must exceed 1")
    v = np.asarray(v, dtype=float)
    if not domain.contains(v):
        raise ValueError("anchor point must lie in the domain region")
    if contraction is None:
        bounds = lipschitz_bounds(F, domain, input_range, rng=rng)
        contraction = bounds.l_fx
    if contraction >= 1.0:
        raise NotAContraction(f"state contraction constant {contraction:.6g} is not below one")

    Z = input_range.samples(n_inputs, rng=rng)
    disp = F.eval(np.broadcast_to(v, (len(Z), v.size)), Z) - v
    r = float(np.max(np.linalg.norm(disp, axis=-1)))
    radius = safety * r / (1.0 - contraction) if r > 0.0 else degenerate_radius
    ball = Ball(v, radius, label=f"absorbing({domain.label})")
    # for boxes and balls the boundary margin is the Euclidean distance to
    # the boundary, so the ball fits inside the domain iff margin >= radius
    if float(domain.boundary_margin(v)) >= radius:
        return ball
    return RegionIntersection(domain, ball, label=ball.label, center_hint=v)


@dataclass(frozen=True)
class ContractionCertificate:
    """Constants and verdicts for a state map driven through a region.

    ``esp_ok`` records l_fx < 1 (unique driven response, input forgetting);
    ``diff_ok`` records l_fx < min(1, 1/tangent_inv_norm), the condition
    under which the synchronization is certified continuously
    differentiable.  When ``diff_ok`` holds, r_const, delta0 and c0 witness
    the contraction of the synchronization operator on the bounded-slope
    function class: r_const exceeds its lower bound by 5%, delta0 is half
    its admissible bound, and c0 is the resulting contraction factor.
    """

    region_label: str
    bounds: LipschitzBounds
    tangent_norm: float
    tangent_inv_norm: float
    domega_norm: float
    invariance_ok: bool
    invariance_margin: float
    invariance_method: str
    esp_ok: bool
    diff_ok: bool
    r_const: float
    delta0: float
    c0: float
    sampled: bool
    n_tangent_samples: int
    resolution: int
    n_inputs: int

    def condition_holds(self, requirement: str) -> bool:
        if requirement == "esp":
            return self.esp_ok
        if requirement == "diff":
            return self.diff_ok
        raise ValueError("requirement must be 'esp' or 'diff'")

    def report_text(self) -> str:
        b = self.bounds
        lines = [
            f"region: {self.region_label}",
            f"method: {b.method}",
            f"l_fx: {b.l_fx:.12g}",
            f"l_fz: {b.l_fz:.12g}",
            f"l_fxx: {b.l_fxx:.12g}",
            f"l_fxz: {b.l_fxz:.12g}",
            f"tangent_norm: {self.tangent_norm:.12g}",
            f"tangent_inv_norm: {self.tangent_inv_norm:.12g}",
            f"domega_norm: {self.domega_norm:.12g}",
            f"invariance_ok: {self.invariance_ok}",
            f"invariance_margin: {self.invariance_margin:.12g}",
            f"invariance_method: {self.invariance_method}",
            f"esp_ok: {self.esp_ok}",
            f"diff_ok: {self.diff_ok}",
            f"r_const: {self.r_const:.12g}",
            f"delta0: {self.delta0:.12g}",
            f"c0: {self.c0:.12g}",
            f"sampled: {self.sampled}",
            f"n_tangent_samples: {self.n_tangent_samples}",
        ]
        return "\n".join(lines)

    @staticmethod
    def csv_header() -> str:
        return ("region,l_fx,l_fz,l_fxx,l_fxz,tangent_inv_norm,domega_norm,"
                "invariance_ok,invariance_margin,esp_ok,diff_ok,r_const,delta0,c0,sampled")

    def csv_row(self) -> str:
        b = self.bounds
        vals = [self.region_label,
                f"{b.l_fx:.17g}", f"{b.l_fz:.17g}", f"{b.l_fxx:.17g}", f"{b.l_fxz:.17g}",
                f"{self.tangent_inv_norm:.17g}", f"{self.domega_norm:.17g}",
                str(self.invariance_ok), f"{self.invariance_margin:.17g}",
                str(self.esp_ok), str(self.diff_ok),
                f"{self.r_const:.17g}", f"{self.delta0:.17g}", f"{self.c0:.17g}",
                str(self.sampled)]
        return ",".join(vals)


def certify(F: StateMap, region: InvariantRegion, sys: DiscreteSystem,
            obs: ObservationMap, attractor_samples, *, resolution: int = 20,
            n_inputs: int = 200, rng=None,
            max_tangent_samples: int = 1000) -> ContractionCertificate:
    """Assemble the full certificate for F restricted to region.

    Failed conditions are reported as flags rather than errors.  The input
    range is the componentwise hull of the observations of the supplied
    samples; tangent norms are sampled suprema over (a subsample of) the
    same points, so all verdicts carry a sampled caveat unless every
    constant came from a closed form.
    """
    samples = np.atleast_2d(np.asarray(attractor_samples, dtype=float))
    z = obs(samples)
    if z.ndim == 1:
        z = z[:, None]
    input_range = InputRange.from_observations(z)

    bounds = lipschitz_bounds(F, region, input_range, resolution=resolution,
                              n_inputs=n_inputs, rng=rng)

    if len(samples) > max_tangent_samples:
        idx = np.linspace(0, len(samples) - 1, max_tangent_samples).astype(int)
        tangent_samples = samples[idx]
    else:
        tangent_samples = samples
    analytic_tangent = sys.kind in ("torus_rotation", "cat_map")
    tnorm, tinv = tangent_norm_bounds(sys, tangent_samples)

    domega = obs.norm_bound(tangent_samples)

    inv = check_invariance(F, region, input_range, resolution=resolution,
                           n_inputs=n_inputs, rng=rng)

    l_fx = bounds.l_fx
    esp_ok = l_fx < 1.0
    diff_ok = l_fx < min(1.0, 1.0 / tinv) if tinv > 0 else esp_ok

    r_const = float("nan")
    delta0 = float("nan")
    c0 = float("nan")
    if diff_ok:
        r_lower = bounds.l_fz * domega / (1.0 - l_fx * tinv)
        r_const = 1.05 * r_lower if r_lower > 0.0 else 1.0
        denom = bounds.l_fxx * tinv * r_const + bounds.l_fxz * domega
        delta0 = 0.5 * (1.0 - l_fx) / denom if denom > 0.0 else 1.0
        c0 = max(l_fx * tinv, l_fx + delta0 * denom)

    sampled = not (bounds.analytic is not None and inv.method == "interval"
                   and analytic_tangent)
    return ContractionCertificate(
        region_label=region.label,
        bounds=bounds,
        tangent_norm=tnorm,
        tangent_inv_norm=tinv,
        domega_norm=domega,
        invariance_ok=inv.ok,
        invariance_margin=inv.margin,
        invariance_method=inv.method,
        esp_ok=esp_ok,
        diff_ok=diff_ok,
        r_const=r_const,
        delta0=delta0,
        c0=c0,
        sampled=sampled,
        n_tangent_samples=len(tangent_samples),
        resolution=resolution,
        n_inputs=n_inputs,
    )
