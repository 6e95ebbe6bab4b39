"""Topological-derivative imaging maps and their closed-form kernel models.

The imaging functional evaluates, at every lattice node z, the leading-order
sensitivity of the boundary data misfit to dropping a vanishingly small
inclusion at z. Both sensitivity components come from one adjoint field per
direction: the solution of the background Helmholtz problem whose Neumann
boundary flux equals the measured scattered trace. The permittivity component
pairs the adjoint with the incident wave, the permeability component pairs
their gradients.

The closed-form families at the end of the module express what those maps
converge to in various asymptotic regimes (single frequency, wide band with
few or many directions, infinite band). They serve as independent references:
they integrate explicit kernels over the known curve, with no boundary data
and no disk kernel involved.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError, FlatMapError, GeometryError
from .forward import (
    _RADIUS_BIN_EDGES,
    BoundaryDataset,
    ensure_not_resonant,
    bessel_j_table,
    jnp_values,
    mode_count,
)
from .geometry import BoundaryGrid, CurveDiscretization, ThinInclusion
from .maps import ImageMap, Lattice, from_point_values

_FLAT_TOL = 1e-14
_DEFAULT_MAP_TOL = 1e-8


# ---------------------------------------------------------------------------
# adjoint fields


def _modal_trace_coefficients(traces: np.ndarray, grid: BoundaryGrid, nmax: int):
    """Fourier coefficients of the boundary traces, orders 0..nmax and -1..-nmax."""
    orders = np.arange(nmax + 1)
    phase = np.exp(-1j * orders[:, None] * grid.angles[None, :])
    c_plus = grid.weight * (phase @ traces)
    c_minus = grid.weight * (phase.conj() @ traces)
    return c_plus, c_minus


def adjoint_field_batch(
    traces: np.ndarray,
    grid: BoundaryGrid,
    omega: float,
    points: np.ndarray,
    series_tol: float = _DEFAULT_MAP_TOL,
    gradient: bool = False,
):
    """Adjoint fields at many interior points for one frequency.

    Parameters
    ----------
    traces : ndarray, shape (N, L)
        Scattered boundary values per direction; they act as the Neumann
        flux of the adjoint problem.
    grid : BoundaryGrid
    omega : float
    points : ndarray, shape (P, 2)
        Interior evaluation points, |z| < 1.
    series_tol : float
        Mode-series tail tolerance.
    gradient : bool
        Also return gradients, shape (P, L, 2).

    Returns
    -------
    v : ndarray, shape (P, L) complex
    gv : ndarray, shape (P, L, 2) complex, only when gradient is set.

    Notes
    -----
    Uses the separable boundary form of the disk kernel: the traces collapse
    to Fourier coefficients once per call, and each point costs one row of a
    mode-space product. Points are processed in radius bins so small radii
    use only the few mode orders that reach them.
    """
    traces = np.asarray(traces, dtype=complex)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if traces.ndim != 2 or traces.shape[0] != grid.n_points:
        raise ValueError(f"traces must have shape (N={grid.n_points}, L)")
    ensure_not_resonant(omega)
    radii = np.hypot(pts[:, 0], pts[:, 1])
    thetas = np.arctan2(pts[:, 1], pts[:, 0])
    rmax = float(np.max(radii))
    if rmax > 0.999:
        raise GeometryError(f"adjoint evaluation needs |z| < 1 (max {rmax:.4f})")

    nmax = max(30, int(math.ceil(2 * omega)) + 20, mode_count(omega, rmax, series_tol))
    jnp, cut = jnp_values(omega, nmax + 1)
    nmax = min(nmax, cut - 1)
    c_plus, c_minus = _modal_trace_coefficients(traces, grid, nmax)

    n_l = traces.shape[1]
    scale = 1.0 / (2.0 * math.pi * omega)
    v = np.zeros((pts.shape[0], n_l), dtype=complex)
    gv = np.zeros((pts.shape[0], n_l, 2), dtype=complex) if gradient else None

    bin_idx = np.digitize(radii, _RADIUS_BIN_EDGES) - 1
    for b in range(_RADIUS_BIN_EDGES.size - 1):
        mask = bin_idx == b
        if not np.any(mask):
            continue
        r_hi = min(float(_RADIUS_BIN_EDGES[b + 1]), 0.999)
        n_b = min(nmax, mode_count(omega, r_hi, series_tol))
        orders = np.arange(n_b + 1)
        tab = bessel_j_table(n_b + 1, omega * radii[mask])
        ratio = tab[: n_b + 1] / jnp[: n_b + 1, None]
        ph = np.exp(1j * thetas[mask][:, None] * orders[None, :])
        a_plus = ratio.T * ph
        a_minus = ratio.T * ph.conj()
        a_minus[:, 0] = 0.0
        v[mask] = scale * (a_plus @ c_plus[: n_b + 1] + a_minus @ c_minus[: n_b + 1])
        if not gradient:
            continue
        jpr = np.empty_like(ratio)
        jpr[0] = -tab[1]
        jpr[1:] = 0.5 * (tab[:n_b] - tab[2 : n_b + 2])
        dr_ratio = omega * jpr / jnp[: n_b + 1, None]
        b_plus = dr_ratio.T * ph
        b_minus = dr_ratio.T * ph.conj()
        b_minus[:, 0] = 0.0
        dv_r = scale * (b_plus @ c_plus[: n_b + 1] + b_minus @ c_minus[: n_b + 1])
        t_plus = a_plus * (1j * orders[None, :])
        t_minus = a_minus * (-1j * orders[None, :])
        dv_t = scale * (t_plus @ c_plus[: n_b + 1] + t_minus @ c_minus[: n_b + 1])
        rr = radii[mask]
        interior = rr >= 1e-12
        ct = np.where(interior, np.cos(thetas[mask]), 1.0)
        st = np.where(interior, np.sin(thetas[mask]), 0.0)
        inv_r = np.where(interior, 1.0 / np.where(interior, rr, 1.0), 0.0)
        gx = ct[:, None] * dv_r - (st * inv_r)[:, None] * dv_t
        gy = st[:, None] * dv_r + (ct * inv_r)[:, None] * dv_t
        gv[mask, :, 0] = gx
        gv[mask, :, 1] = gy

    if gradient:
        centers = radii < 1e-12
        if np.any(centers) and nmax >= 1:
            # Analytic limit at the center: only the first angular modes move.
            coef = scale * omega / (2.0 * jnp[1])
            gx0 = coef * (c_plus[1] + c_minus[1])
            gy0 = coef * (1j * c_plus[1] - 1j * c_minus[1])
            gv[centers, :, 0] = gx0[None, :]
            gv[centers, :, 1] = gy0[None, :]
        return v, gv
    return v


def adjoint_field(
    traces: np.ndarray,
    grid: BoundaryGrid,
    omega: float,
    z,
    series_tol: float = _DEFAULT_MAP_TOL,
    gradient: bool = False,
):
    """Adjoint field (and optionally gradient) at a single interior point."""
    z = np.asarray(z, dtype=float).reshape(1, 2)
    if gradient:
        v, gv = adjoint_field_batch(traces, grid, omega, z, series_tol, gradient=True)
        return v[0], gv[0]
    return adjoint_field_batch(traces, grid, omega, z, series_tol)[0]


# ---------------------------------------------------------------------------
# topological-derivative maps


def td_component_maps(
    data: BoundaryDataset,
    lattice: Lattice,
    k_index: int = 0,
    series_tol: float = _DEFAULT_MAP_TOL,
) -> tuple[ImageMap, ImageMap]:
    """Raw permittivity- and permeability-sensitivity maps at one frequency.

    The permittivity component is Re sum_l v_l conj(u_l); the permeability
    component is Re sum_l grad v_l . conj(grad u_l), with u_l the incident
    wave and v_l the adjoint field of direction l.
    """
    if not 0 <= k_index < data.incident.n_frequencies:
        raise IndexError(f"frequency index {k_index} out of range")
    omega = float(data.incident.omegas[k_index])
    traces = data.traces[:, :, k_index]
    pts = lattice.points
    v, gv = adjoint_field_batch(traces, data.grid, omega, pts, series_tol, gradient=True)
    u = np.exp(1j * omega * (pts @ data.incident.directions.T))
    eps_vals = np.sum(np.real(v * u.conj()), axis=1)
    gu_x = (1j * omega) * u * data.incident.directions[None, :, 0]
    gu_y = (1j * omega) * u * data.incident.directions[None, :, 1]
    mu_vals = np.sum(
        np.real(gv[:, :, 0] * gu_x.conj() + gv[:, :, 1] * gu_y.conj()), axis=1
    )
    return from_point_values(lattice, eps_vals), from_point_values(lattice, mu_vals)


def normalized_combination(eps_map: ImageMap, mu_map: ImageMap) -> ImageMap:
    """Average of the two components, each scaled by its peak magnitude.

    The output lies in [-1, 1] and each scaled component touches magnitude 1
    somewhere. A component that is essentially zero everywhere cannot be
    scaled and raises FlatMapError.
    """
    ev = eps_map.inside_values
    mv = mu_map.inside_values
    emax = float(np.max(np.abs(ev)))
    mmax = float(np.max(np.abs(mv)))
    if emax < _FLAT_TOL or mmax < _FLAT_TOL:
        raise FlatMapError(
            "a sensitivity component is identically flat; check contrasts and data"
        )
    return from_point_values(eps_map.lattice, 0.5 * (ev / emax + mv / mmax))


def etd_single(
    data: BoundaryDataset,
    lattice: Lattice,
    k_index: int = 0,
    series_tol: float = _DEFAULT_MAP_TOL,
) -> ImageMap:
    """Normalized topological-derivative map at one frequency."""
    eps_map, mu_map = td_component_maps(data, lattice, k_index, series_tol)
    return normalized_combination(eps_map, mu_map)


def etd_multi(
    data: BoundaryDataset, lattice: Lattice, series_tol: float = _DEFAULT_MAP_TOL
) -> ImageMap:
    """Multi-frequency map: the mean of the per-frequency normalized maps.

    With a single frequency this reduces bitwise to the single-frequency map.
    """
    n_k = data.incident.n_frequencies
    acc = np.zeros(lattice.points.shape[0])
    for k in range(n_k):
        acc += etd_single(data, lattice, k, series_tol).inside_values
    return from_point_values(lattice, acc / float(n_k))


# ---------------------------------------------------------------------------
# closed-form kernel models


def _mu_bracket(disc: CurveDiscretization, inclusion: ThinInclusion, direction) -> np.ndarray:
    """Per-node weight [alpha d.t + beta d.n] of the permeability kernel."""
    d = np.asarray(direction, dtype=float)
    return inclusion.tangential_contrast() * (disc.tangents @ d) + inclusion.normal_contrast() * (
        disc.normals @ d
    )


def single_frequency_kernel_maps(
    lattice: Lattice,
    disc: CurveDiscretization,
    inclusion: ThinInclusion,
    directions: np.ndarray,
    omega: float,
) -> tuple[ImageMap, ImageMap]:
    """Model maps with the plane-wave kernel e^{i w d.(x-z)} at one frequency.

    These are the forms the raw sensitivity maps approach for a thin
    inclusion: oscillatory plane-wave kernels integrated over the true curve,
    weighted by the permittivity contrast and by the permeability bracket.
    The phase factor is separable, so each direction costs O(P + M).
    """
    pts = lattice.points
    gamma = inclusion.permittivity_contrast()
    eps_vals = np.zeros(pts.shape[0])
    mu_vals = np.zeros(pts.shape[0])
    for d in np.atleast_2d(np.asarray(directions, dtype=float)):
        curve_phase = np.exp(1j * omega * (disc.nodes @ d))
        z_phase = np.exp(-1j * omega * (pts @ d))
        eps_vals += np.real(z_phase * np.sum(disc.weights * gamma * curve_phase))
        mu_vals += np.real(
            z_phase * np.sum(disc.weights * _mu_bracket(disc, inclusion, d) * curve_phase)
        )
    return from_point_values(lattice, eps_vals), from_point_values(lattice, mu_vals)


def band_kernel_maps(
    lattice: Lattice,
    disc: CurveDiscretization,
    inclusion: ThinInclusion,
    directions: np.ndarray,
    omega_lo: float,
    omega_hi: float,
) -> tuple[ImageMap, ImageMap]:
    """Model maps with the frequency-band kernel, few directions.

    Integrating the plane-wave kernel across [omega_lo, omega_hi] replaces it
    with sinc(a s) cos(b s), s = d.(x-z), a and b the band half-width and
    center. The sinc envelope suppresses the oscillatory sidelobes that a
    single frequency leaves along each direction.
    """
    from .special import spherical_j0

    if not omega_hi > omega_lo:
        raise ConfigError("need omega_hi > omega_lo")
    half_width = 0.5 * (omega_hi - omega_lo)
    center = 0.5 * (omega_hi + omega_lo)
    pts = lattice.points
    gamma = inclusion.permittivity_contrast()
    eps_vals = np.zeros(pts.shape[0])
    mu_vals = np.zeros(pts.shape[0])
    for d in np.atleast_2d(np.asarray(directions, dtype=float)):
        s = (disc.nodes @ d)[None, :] - (pts @ d)[:, None]
        kern = spherical_j0(half_width * s) * np.cos(center * s)
        eps_vals += kern @ (disc.weights * gamma)
        mu_vals += kern @ (disc.weights * _mu_bracket(disc, inclusion, d))
    return from_point_values(lattice, eps_vals), from_point_values(lattice, mu_vals)


def radial_band_maps(
    lattice: Lattice,
    disc: CurveDiscretization,
    inclusion: ThinInclusion,
    directions: np.ndarray,
    omega_lo: float,
    omega_hi: float,
) -> tuple[ImageMap, ImageMap]:
    """Model maps with the direction-averaged band kernel.

    With many directions the plane-wave sum is 2 pi J0(w|x-z|); integrating
    that across the band gives 2 pi times the difference of the running
    J0 integral at the band edges, a radial kernel in |x-z| alone. The
    permeability bracket still depends on the supplied directions (for
    symmetric full-circle families it nearly cancels), so they must be given.
    """
    from .special import j0_band_integral

    if not omega_hi > omega_lo:
        raise ConfigError("need omega_hi > omega_lo")
    pts = lattice.points
    diff = disc.nodes[None, :, :] - pts[:, None, :]
    t = np.hypot(diff[:, :, 0], diff[:, :, 1])
    kern = 2.0 * math.pi * (j0_band_integral(t, omega_hi) - j0_band_integral(t, omega_lo))
    gamma = inclusion.permittivity_contrast()
    eps_vals = kern @ (disc.weights * gamma)
    mu_vals = np.zeros(pts.shape[0])
    for d in np.atleast_2d(np.asarray(directions, dtype=float)):
        mu_vals += kern @ (disc.weights * _mu_bracket(disc, inclusion, d))
    return from_point_values(lattice, eps_vals), from_point_values(lattice, mu_vals)


def inverse_distance_maps(
    lattice: Lattice,
    disc: CurveDiscretization,
    inclusion: ThinInclusion,
    directions: np.ndarray,
    min_distance: float | None = None,
) -> tuple[ImageMap, ImageMap]:
    """Model maps with the infinite-band limit kernel 2 pi / |x-z|.

    Curve nodes closer to a lattice point than ``min_distance`` (default:
    half the lattice spacing) are dropped from that point's quadrature so
    the kernel stays finite.
    """
    pts = lattice.points
    cutoff = 0.5 * lattice.spacing if min_distance is None else float(min_distance)
    diff = disc.nodes[None, :, :] - pts[:, None, :]
    t = np.hypot(diff[:, :, 0], diff[:, :, 1])
    with np.errstate(divide="ignore"):
        kern = np.where(t >= cutoff, 2.0 * math.pi / np.maximum(t, 1e-300), 0.0)
    gamma = inclusion.permittivity_contrast()
    eps_vals = kern @ (disc.weights * gamma)
    mu_vals = np.zeros(pts.shape[0])
    for d in np.atleast_2d(np.asarray(directions, dtype=float)):
        mu_vals += kern @ (disc.weights * _mu_bracket(disc, inclusion, d))
    return from_point_values(lattice, eps_vals), from_point_values(lattice, mu_vals)
