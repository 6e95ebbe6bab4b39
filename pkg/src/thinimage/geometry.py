"""Supporting curves, their quadrature discretizations, and boundary grids.

An inclusion is a thin tubular neighborhood of a smooth simple curve strictly
inside the unit disk. Curves are parameterized maps s -> (x(s), y(s)) on a
closed interval; integrals over a curve use composite 4-point Gauss-Legendre
panels with arc-length weights, and each node carries a unit tangent/normal
frame (normal = tangent rotated by +90 degrees).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, GeometryError

_FD_STEP = 1e-6
_PANEL_ORDER = 4
_MIN_CLEARANCE = 0.1


@dataclass(frozen=True)
class ParametricCurve:
    """Open curve s -> (fx(s), fy(s)) on [s_min, s_max].

    dfx/dfy are analytic derivative callables when available; when absent the
    velocity falls back to central differences with step 1e-6.
    """

    label: str
    s_min: float
    s_max: float
    fx: Callable[[np.ndarray], np.ndarray]
    fy: Callable[[np.ndarray], np.ndarray]
    dfx: Callable[[np.ndarray], np.ndarray] | None = None
    dfy: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self) -> None:
        if not (self.s_min < self.s_max):
            raise GeometryError(f"empty parameter range [{self.s_min}, {self.s_max}]")

    def points(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.stack([np.asarray(self.fx(s), dtype=float), np.asarray(self.fy(s), dtype=float)], axis=-1)

    def velocity(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.dfx is not None and self.dfy is not None:
            return np.stack(
                [np.asarray(self.dfx(s), dtype=float), np.asarray(self.dfy(s), dtype=float)], axis=-1
            )
        up = self.points(s + _FD_STEP)
        dn = self.points(s - _FD_STEP)
        return (up - dn) / (2.0 * _FD_STEP)


def builtin_curve(label: str) -> ParametricCurve:
    """Return one of the built-in supporting curves sigma1, sigma2, sigma3."""
    if label == "sigma1":
        return ParametricCurve(
            label,
            -0.5,
            0.5,
            fx=lambda s: s - 0.2,
            fy=lambda s: -0.5 * s**2 + 0.5,
            dfx=lambda s: np.ones_like(s),
            dfy=lambda s: -s,
        )
    if label == "sigma2":
        return ParametricCurve(
            label,
            -0.5,
            0.5,
            fx=lambda s: s + 0.2,
            fy=lambda s: s**3 + s**2 - 0.6,
            dfx=lambda s: np.ones_like(s),
            dfy=lambda s: 3.0 * s**2 + 2.0 * s,
        )
    if label == "sigma3":
        return ParametricCurve(
            label,
            -0.7,
            0.7,
            fx=lambda s: np.asarray(s, dtype=float),
            fy=lambda s: 0.5 * s**2 + 0.1 * np.sin(3.0 * math.pi * (s + 0.7)),
            dfx=lambda s: np.ones_like(s),
            dfy=lambda s: s + 0.3 * math.pi * np.cos(3.0 * math.pi * (s + 0.7)),
        )
    raise ConfigError(f"unknown builtin curve {label!r}")


def poly_sin_curve(
    label: str,
    s_min: float,
    s_max: float,
    x_shift: float = 0.0,
    y_poly: Sequence[float] = (0.0,),
    y_sin_amp: float = 0.0,
    y_sin_freq: float = 0.0,
    y_sin_phase: float = 0.0,
) -> ParametricCurve:
    """Graph-like curve (s + x_shift, poly(s) + amp*sin(freq*(s + phase)))."""
    coeffs = np.asarray(list(y_poly), dtype=float)
    if coeffs.size == 0:
        raise ConfigError("y_poly needs at least one coefficient")
    dcoeffs = coeffs[1:] * np.arange(1, coeffs.size)

    def fy(s):
        return np.polyval(coeffs[::-1], s) + y_sin_amp * np.sin(y_sin_freq * (s + y_sin_phase))

    def dfy(s):
        base = np.polyval(dcoeffs[::-1], s) if dcoeffs.size else np.zeros_like(s)
        return base + y_sin_amp * y_sin_freq * np.cos(y_sin_freq * (s + y_sin_phase))

    return ParametricCurve(
        label,
        float(s_min),
        float(s_max),
        fx=lambda s: s + x_shift,
        fy=fy,
        dfx=lambda s: np.ones_like(s),
        dfy=dfy,
    )


@dataclass(frozen=True)
class CurveDiscretization:
    """Quadrature nodes of a curve with weights and unit frames.

    Arrays are read-only after construction. ``weights`` carry the arc-length
    measure, so sum(weights) approximates the curve length.
    """

    curve: ParametricCurve
    params: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    total_length: float

    def __post_init__(self) -> None:
        for arr in (self.params, self.nodes, self.weights, self.tangents, self.normals):
            arr.setflags(write=False)


@lru_cache(maxsize=8)
def _panel_rule() -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(_PANEL_ORDER)


def discretize(curve: ParametricCurve, m_nodes: int) -> CurveDiscretization:
    """Discretize a curve with composite 4-point Gauss-Legendre panels.

    Parameters
    ----------
    curve : ParametricCurve
    m_nodes : int
        Requested node count (at least 8); rounded up to a multiple of the
        panel order.

    Returns
    -------
    CurveDiscretization

    Raises
    ------
    GeometryError
        If the parameterization is degenerate (vanishing velocity), the node
        chain self-intersects, or the curve leaves the clearance region
        |x| <= 1 - 0.1.
    """
    if m_nodes < 8:
        raise ConfigError(f"m_nodes must be at least 8, got {m_nodes}")
    panels = -(-m_nodes // _PANEL_ORDER)
    ref_nodes, ref_weights = _panel_rule()
    edges = np.linspace(curve.s_min, curve.s_max, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    s = (mid[:, None] + half[:, None] * ref_nodes[None, :]).reshape(-1)
    w_param = (half[:, None] * ref_weights[None, :]).reshape(-1)

    pts = curve.points(s)
    vel = curve.velocity(s)
    speed = np.hypot(vel[:, 0], vel[:, 1])
    if np.any(speed < 1e-12):
        bad = s[np.argmin(speed)]
        raise GeometryError(f"degenerate parameterization: |velocity| ~ 0 near s = {bad:.6g}")
    tangents = vel / speed[:, None]
    normals = np.column_stack([-tangents[:, 1], tangents[:, 0]])
    weights = w_param * speed

    radii = np.hypot(pts[:, 0], pts[:, 1])
    if np.max(radii) > 1.0 - _MIN_CLEARANCE + 1e-12:
        raise GeometryError(
            f"curve violates the boundary clearance: max |x| = {np.max(radii):.4f} > {1.0 - _MIN_CLEARANCE}"
        )

    # Simple-curve check: non-adjacent nodes must stay strictly separated.
    diffs = pts[:, None, :] - pts[None, :, :]
    dist = np.hypot(diffs[..., 0], diffs[..., 1])
    idx = np.arange(len(s))
    adjacent = np.abs(idx[:, None] - idx[None, :]) <= 1
    if np.min(dist[~adjacent]) <= 1e-12:
        raise GeometryError("curve discretization self-intersects")

    return CurveDiscretization(
        curve=curve,
        params=s,
        nodes=pts,
        weights=weights,
        tangents=tangents,
        normals=normals,
        total_length=float(np.sum(weights)),
    )


@dataclass(frozen=True)
class ThinInclusion:
    """Thin penetrable inclusion: supporting curve, half-thickness, materials.

    The background holds (eps0, mu0) and the inclusion (eps, mu); all four are
    positive, and the half-thickness h must be small against the incident
    wavelengths (checked where frequencies are known).
    """

    curve: ParametricCurve
    h: float = 0.02
    eps: float = 5.0
    mu: float = 5.0
    eps0: float = 1.0
    mu0: float = 1.0

    def __post_init__(self) -> None:
        if not (self.h > 0.0):
            raise ConfigError(f"half-thickness must be positive, got {self.h}")
        for name in ("eps", "mu", "eps0", "mu0"):
            if not (getattr(self, name) > 0.0):
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")

    def tangential_contrast(self) -> float:
        """Polarization-tensor eigenvalue along the tangent: 2(1/mu - 1/mu0)."""
        return 2.0 * (1.0 / self.mu - 1.0 / self.mu0)

    def normal_contrast(self) -> float:
        """Polarization-tensor eigenvalue along the normal: 2(1/mu0 - mu/mu0^2)."""
        return 2.0 * (1.0 / self.mu0 - self.mu / self.mu0**2)

    def permittivity_contrast(self) -> float:
        return self.eps - self.eps0


@dataclass(frozen=True)
class BoundaryGrid:
    """Equispaced measurement points on the unit circle with trapezoid weights."""

    n_points: int
    angles: np.ndarray = field(init=False)
    points: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        if self.n_points < 16:
            raise ConfigError(f"boundary grid needs at least 16 points, got {self.n_points}")
        angles = 2.0 * math.pi * np.arange(1, self.n_points + 1) / self.n_points
        points = np.column_stack([np.cos(angles), np.sin(angles)])
        angles.setflags(write=False)
        points.setflags(write=False)
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "points", points)

    @property
    def normals(self) -> np.ndarray:
        return self.points

    @property
    def weight(self) -> float:
        return 2.0 * math.pi / self.n_points


def boundary_grid(n_points: int) -> BoundaryGrid:
    return BoundaryGrid(n_points)


def distance_to_curve(points, disc: CurveDiscretization) -> np.ndarray | float:
    """Distance from point(s) to a discretized curve.

    Nearest-node search refined by projection onto the chords adjacent to the
    nearest node, so the result is accurate to O(node spacing squared).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    nodes = disc.nodes
    out = np.empty(len(pts))
    # Chunk the distance matrix to keep memory bounded for large point sets.
    step = max(1, 4_000_000 // max(len(nodes), 1))
    for lo in range(0, len(pts), step):
        chunk = pts[lo : lo + step]
        d = np.hypot(chunk[:, None, 0] - nodes[None, :, 0], chunk[:, None, 1] - nodes[None, :, 1])
        nearest = np.argmin(d, axis=1)
        best = d[np.arange(len(chunk)), nearest]
        for a_idx in (nearest - 1, nearest):
            valid = (a_idx >= 0) & (a_idx + 1 < len(nodes))
            a = nodes[np.clip(a_idx, 0, len(nodes) - 1)]
            b = nodes[np.clip(a_idx + 1, 0, len(nodes) - 1)]
            ab = b - a
            denom = np.sum(ab * ab, axis=1)
            tau = np.clip(np.sum((chunk - a) * ab, axis=1) / np.maximum(denom, 1e-300), 0.0, 1.0)
            proj = a + tau[:, None] * ab
            seg = np.hypot(chunk[:, 0] - proj[:, 0], chunk[:, 1] - proj[:, 1])
            best = np.where(valid, np.minimum(best, seg), best)
        out[lo : lo + step] = best
    if np.asarray(points).ndim == 1:
        return float(out[0])
    return out
