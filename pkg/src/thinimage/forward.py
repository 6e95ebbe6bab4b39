"""Forward data synthesis for thin inclusions in the unit disk.

The scattered boundary data follow the leading-order thin-inclusion
expansion: an arc-length integral over the supporting curve of a polarization
term (gradients through the anisotropic two-eigenvalue tensor) plus a
permittivity monopole term, both against the disk's Neumann function.

The Neumann function N(x, y; w) of the Helmholtz operator with vanishing
normal derivative on |x| = 1 is evaluated as the free-space Hankel kernel
(i/4)H0(w|x-y|) plus a Fourier-Bessel boundary correction whose coefficients
divide by J_n'(w); frequencies too close to a zero of some J_n' (a Neumann
eigenvalue of the disk) are rejected. For a source point on the boundary the
correction collapses, via the Wronskian, to the separable real kernel

    N(x, y)|_{|y|=1} = (1/2 pi w) * sum_n [J_n(w|x|)/J_n'(w)] e^{in(ax-ay)},

which is what makes synthesis (and the adjoint evaluations downstream)
factorizable into dense matrix products over a truncated mode range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import special as sp

from .errors import ConfigError, DataStateError, GeometryError, ResonanceError, SingularityError
from .geometry import BoundaryGrid, CurveDiscretization, ThinInclusion, discretize

_RESONANCE_TOL = 1e-8
# Geometric radius bins for mode tables: small radii need far fewer orders.
_RADIUS_BIN_EDGES = np.array([0.0, 0.15, 0.3, 0.45, 0.6, 0.72, 0.82, 0.9, 1.01])
# Coefficients beyond this J_n' magnitude floor would overflow; orders past it
# contribute below ~rho^cap anyway (see mode-count selection).
_JNP_FLOOR = 1e-260
_DEFAULT_SERIES_TOL = 1e-10
_DEFAULT_SYNTH_NODES = 400


# ---------------------------------------------------------------------------
# incident fields


@dataclass(frozen=True)
class IncidentSet:
    """Plane-wave directions (unit vectors) and an increasing frequency list."""

    directions: np.ndarray
    omegas: np.ndarray

    def __post_init__(self) -> None:
        directions = np.atleast_2d(np.asarray(self.directions, dtype=float))
        omegas = np.atleast_1d(np.asarray(self.omegas, dtype=float))
        if directions.ndim != 2 or directions.shape[1] != 2 or directions.shape[0] < 1:
            raise ConfigError("directions must be an (L, 2) array")
        norms = np.hypot(directions[:, 0], directions[:, 1])
        if np.max(np.abs(norms - 1.0)) > 1e-12:
            raise ConfigError("directions must be unit vectors")
        if omegas.size < 1 or np.any(~np.isfinite(omegas)) or np.any(omegas <= 0.0):
            raise ConfigError("omegas must be positive and finite")
        if np.any(np.diff(omegas) <= 0.0):
            raise ConfigError("omegas must be strictly increasing")
        directions = directions.copy()
        omegas = omegas.copy()
        directions.setflags(write=False)
        omegas.setflags(write=False)
        object.__setattr__(self, "directions", directions)
        object.__setattr__(self, "omegas", omegas)

    @property
    def n_directions(self) -> int:
        return self.directions.shape[0]

    @property
    def n_frequencies(self) -> int:
        return self.omegas.size

    @classmethod
    def standard(
        cls,
        n_directions: int,
        n_frequencies: int,
        lambda_min: float = 0.2,
        lambda_max: float = 0.5,
    ) -> "IncidentSet":
        """Equispaced directions with frequencies equispaced over the band.

        The band runs from 2 pi / lambda_max up to 2 pi / lambda_min; a single
        frequency picks the low band edge.
        """
        return cls(
            standard_directions(n_directions),
            frequency_band(n_frequencies, lambda_min, lambda_max),
        )


def standard_directions(n_directions: int) -> np.ndarray:
    """Unit directions d_l = (cos 2(l-1)pi/L, sin 2(l-1)pi/L), l = 1..L."""
    if n_directions < 1:
        raise ConfigError(f"need at least one direction, got {n_directions}")
    ang = 2.0 * math.pi * np.arange(n_directions) / n_directions
    return np.column_stack([np.cos(ang), np.sin(ang)])


def frequency_band(
    n_frequencies: int, lambda_min: float = 0.2, lambda_max: float = 0.5
) -> np.ndarray:
    """Frequencies equispaced in omega over [2 pi/lambda_max, 2 pi/lambda_min]."""
    if n_frequencies < 1:
        raise ConfigError(f"need at least one frequency, got {n_frequencies}")
    if not (0.0 < lambda_min <= lambda_max):
        raise ConfigError("wavelength band must satisfy 0 < lambda_min <= lambda_max")
    lo = 2.0 * math.pi / lambda_max
    hi = 2.0 * math.pi / lambda_min
    if n_frequencies == 1:
        return np.array([lo])
    return np.linspace(lo, hi, n_frequencies)


def plane_wave(direction, omega: float, points):
    """Incident plane wave e^{i w d.x} and its gradient at the given points.

    Returns (values, gradients) with shapes (P,) and (P, 2); scalar-shaped
    input points yield scalar value and (2,) gradient.
    """
    d = np.asarray(direction, dtype=float)
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts2 = np.atleast_2d(pts)
    phase = omega * (pts2 @ d)
    vals = np.exp(1j * phase)
    grads = (1j * omega) * vals[:, None] * d[None, :]
    if single:
        return vals[0], grads[0]
    return vals, grads


# ---------------------------------------------------------------------------
# resonance detection


def resonance_orders(omega: float, threshold: float = _RESONANCE_TOL) -> list[tuple[int, float]]:
    """Orders n with |J_n'(omega)| below threshold.

    Only orders n <= ceil(omega)+1 can carry a zero of J_n' (the disk's
    Neumann eigenvalues satisfy j'_{n,1} > n), so the scan stops there.
    """
    if not (omega > 0.0 and math.isfinite(omega)):
        raise ConfigError(f"omega must be positive and finite, got {omega!r}")
    orders = np.arange(0, int(math.ceil(omega)) + 2)
    vals = np.abs(sp.jvp(orders, omega))
    flagged = vals < threshold
    return [(int(n), float(v)) for n, v in zip(orders[flagged], vals[flagged])]


def ensure_not_resonant(omega: float, threshold: float = _RESONANCE_TOL) -> None:
    hits = resonance_orders(omega, threshold)
    if hits:
        listing = ", ".join(f"n={n} (|J_n'|={v:.2e})" for n, v in hits)
        raise ResonanceError(f"omega = {omega:.10g} is next to a Neumann eigenvalue: {listing}")


# ---------------------------------------------------------------------------
# Bessel mode tables


def bessel_j_table(nmax: int, x) -> np.ndarray:
    """J_n(x) for all orders n = 0..nmax at once, vectorized over x.

    Miller's downward recurrence normalized by J0 + 2*sum J_{2k} = 1; this is
    orders of magnitude faster than per-order library calls when every order
    is needed, which is the access pattern of all mode sums here.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0.0):
        raise ValueError("bessel_j_table requires x >= 0")
    out = np.zeros((nmax + 1, x.size))
    zero = x == 0.0
    xs = np.where(zero, 1.0, x)
    inv_x = 1.0 / xs

    start = nmax + 15 + int(math.sqrt(40.0 * max(nmax, 1)))
    jp = np.zeros(x.size)
    jc = np.full(x.size, 1e-30)
    even_sum = np.zeros(x.size)
    if start % 2 == 0:
        even_sum += jc
    for n in range(start, 0, -1):
        jm = (2.0 * n) * inv_x * jc - jp
        jp, jc = jc, jm
        if n - 1 <= nmax:
            out[n - 1] = jc
        if (n - 1) % 2 == 0 and n - 1 > 0:
            even_sum += jc
        big = np.abs(jc) > 1e250
        if np.any(big):
            # Rescale only the offending points; growth rates differ wildly
            # across arguments and a global rescale would flush slow-growing
            # columns to zero.
            jc[big] *= 1e-250
            jp[big] *= 1e-250
            even_sum[big] *= 1e-250
            out[:, big] *= 1e-250
    # Normalization J0 + 2*sum_{k>=1} J_{2k} = 1 (even_sum excludes J0).
    norm = jc + 2.0 * even_sum
    out /= norm
    if np.any(zero):
        out[:, zero] = 0.0
        out[0, zero] = 1.0
    return out


def mode_count(omega: float, rho: float, tol: float) -> int:
    """Mode cutoff for correction series with geometric tail ratio rho."""
    rho = min(max(rho, 0.05), 0.999)
    tail = int(math.ceil(math.log(1.0 / tol) / math.log(1.0 / rho)))
    return int(math.ceil(omega)) + 10 + tail


def jnp_values(omega: float, nmax: int) -> tuple[np.ndarray, int]:
    """J_n'(omega) for n = 0..nmax and the usable cutoff before underflow."""
    orders = np.arange(nmax + 1)
    vals = sp.jvp(orders, omega)
    small = np.abs(vals) < _JNP_FLOOR
    cut = int(np.argmax(small)) - 1 if np.any(small) else nmax
    return vals, max(cut, 0)


def _radius_binned_table(nmax: int, omega: float, radii: np.ndarray) -> np.ndarray:
    """J_n(omega * r) for n = 0..nmax over points, binned by radius.

    Small radii need (and numerically tolerate) far fewer orders; rows above
    each bin's own cutoff stay zero, which matches their true magnitude to
    well below the series tolerances used here.
    """
    out = np.zeros((nmax + 1, radii.size))
    edges = _RADIUS_BIN_EDGES
    idx = np.digitize(radii, edges) - 1
    for b in range(len(edges) - 1):
        mask = idx == b
        if not np.any(mask):
            continue
        r_hi = min(float(edges[b + 1]), 0.999)
        n_b = min(nmax, mode_count(omega, r_hi, 1e-12))
        tab = bessel_j_table(n_b, omega * radii[mask])
        out[: n_b + 1, mask] = tab
    return out


# ---------------------------------------------------------------------------
# Neumann function of the disk


def _pair_mode_count(omega: float, rx: float, ry: float, tol: float) -> int:
    rho = rx * ry
    if rx >= 0.98:
        rho = max(rho, ry)
    if ry >= 0.98:
        rho = max(rho, rx)
    return mode_count(omega, rho, tol)


def neumann_function(
    x,
    y,
    omega: float,
    trunc: int | None = None,
    series_tol: float = _DEFAULT_SERIES_TOL,
    gradient: bool = False,
):
    """Neumann function N(x, y; omega) of the unit disk, one point pair.

    Parameters
    ----------
    x, y : array-like, shape (2,)
        Evaluation and source points. x may sit slightly outside the closed
        disk (up to |x| <= 1.001) so derivative probes across the boundary
        are possible; y must satisfy |y| <= 1.
    omega : float
        Frequency; rejected when within 1e-8 of a Neumann eigenvalue.
    trunc : int, optional
        Correction-series order override. The default grows with omega and
        with the points' radii so the series tail stays below series_tol.
    gradient : bool
        Also return the gradient with respect to x.

    Returns
    -------
    complex or (complex, ndarray)
        The kernel value (imaginary part is a truncation residual; the exact
        kernel is real-valued), and optionally the x-gradient, shape (2,).
    """
    xp = np.asarray(x, dtype=float)
    yp = np.asarray(y, dtype=float)
    if xp.shape != (2,) or yp.shape != (2,):
        raise ValueError("x and y must be points in the plane")
    if not (np.all(np.isfinite(xp)) and np.all(np.isfinite(yp))):
        raise ValueError("points must be finite")
    ensure_not_resonant(omega)
    rx = float(np.hypot(*xp))
    ry = float(np.hypot(*yp))
    if rx > 1.0 + 1e-3 or ry > 1.0 + 1e-12:
        raise GeometryError(f"points must lie in the closed disk (|x|={rx:.4f}, |y|={ry:.4f})")
    dvec = xp - yp
    dist = float(np.hypot(*dvec))
    if dist < 1e-12:
        raise SingularityError("Neumann function evaluated on its diagonal")

    nmax = trunc if trunc is not None else max(
        30, int(math.ceil(2 * omega)) + 20, _pair_mode_count(omega, rx, ry, series_tol)
    )
    jnp, cut = jnp_values(omega, nmax)
    nmax = min(nmax, cut)
    orders = np.arange(nmax + 1)
    jnp = jnp[: nmax + 1]
    ynp = sp.yvp(orders, omega)

    # J tables at both radii; one extra order for the x-derivative.
    jx = bessel_j_table(nmax + 1, np.array([omega * rx]))[:, 0]
    jy = bessel_j_table(nmax + 1, np.array([omega * ry]))[:, 0]

    tx = math.atan2(xp[1], xp[0]) if rx > 0 else 0.0
    ty = math.atan2(yp[1], yp[0]) if ry > 0 else 0.0
    dtheta = tx - ty
    eps_n = np.full(nmax + 1, 2.0)
    eps_n[0] = 1.0
    cosd = np.cos(orders * dtheta)

    # Stable ordering: pair the huge Y_n' with the larger J factor first.
    jx_n = jx[: nmax + 1]
    jy_n = jy[: nmax + 1]
    big_is_x = np.abs(jx_n) >= np.abs(jy_n)
    prod_y = np.where(big_is_x, (ynp * jx_n) * jy_n, (ynp * jy_n) * jx_n)
    ratio = prod_y / jnp

    j0d = sp.jv(0, omega * dist)
    y0d = sp.yv(0, omega * dist)
    re_val = -0.25 * y0d + 0.25 * float(np.sum(eps_n * ratio * cosd))
    im_val = 0.25 * j0d - 0.25 * float(np.sum(eps_n * jx_n * jy_n * cosd))
    value = complex(re_val, im_val)
    if not gradient:
        return value

    j1d = sp.jv(1, omega * dist)
    y1d = sp.yv(1, omega * dist)
    unit = dvec / dist
    grad_free = (-0.25j * omega) * (j1d + 1j * y1d) * unit

    jpx = np.empty(nmax + 1)
    jpx[0] = -jx[1]
    if nmax >= 1:
        jpx[1:] = 0.5 * (jx[:nmax] - jx[2 : nmax + 2])

    if rx < 1e-12:
        # Only the n=1 mode contributes to the correction gradient at the
        # center; take its analytic limit.
        ey = np.array([math.cos(ty), math.sin(ty)])
        if nmax >= 1:
            coef = (0.25 * (ynp[1] * jy_n[1]) / jnp[1] - 0.25j * jy_n[1]) * omega
            grad_corr = coef * ey
        else:
            grad_corr = np.zeros(2, dtype=complex)
    else:
        sind = np.sin(orders * dtheta)
        big_x = np.abs(omega * jpx) >= np.abs(jy_n)
        prod_dr = np.where(big_x, (ynp * (omega * jpx)) * jy_n, (ynp * jy_n) * (omega * jpx))
        coef_r = 0.25 * (prod_dr / jnp) - 0.25j * (omega * jpx) * jy_n
        coef_t = 0.25 * ratio - 0.25j * jx_n * jy_n
        dr = float(np.sum(eps_n * np.real(coef_r) * cosd)) + 1j * float(
            np.sum(eps_n * np.imag(coef_r) * cosd)
        )
        dt = -float(np.sum(eps_n * orders * np.real(coef_t) * sind)) - 1j * float(
            np.sum(eps_n * orders * np.imag(coef_t) * sind)
        )
        e_r = xp / rx
        e_t = np.array([-e_r[1], e_r[0]])
        grad_corr = dr * e_r + (dt / rx) * e_t

    return value, grad_free + grad_corr


def boundary_kernel_tables(
    omega: float,
    points: np.ndarray,
    boundary_angles: np.ndarray,
    series_tol: float = _DEFAULT_SERIES_TOL,
    gradient: bool = False,
):
    """Neumann kernel N(x, y_b) for interior points against boundary points.

    Uses the separable boundary form, assembled as dense products over the
    truncated mode range. Returns the (P, NB) kernel matrix, plus radial and
    angular derivative matrices when ``gradient`` is set (the angular one not
    yet divided by r).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    radii = np.hypot(pts[:, 0], pts[:, 1])
    thetas = np.arctan2(pts[:, 1], pts[:, 0])
    rmax = float(np.max(radii))
    if rmax > 0.999:
        raise GeometryError(f"interior points must satisfy |x| < 1 (max {rmax:.4f})")
    ensure_not_resonant(omega)

    nmax = max(30, int(math.ceil(2 * omega)) + 20, mode_count(omega, rmax, series_tol))
    jnp, cut = jnp_values(omega, nmax + 1)
    nmax = min(nmax, cut - 1)
    orders = np.arange(nmax + 1)

    jr = _radius_binned_table(nmax + 1, omega, radii)
    ratios = jr[: nmax + 1] / jnp[: nmax + 1, None]

    eps_n = np.full(nmax + 1, 2.0)
    eps_n[0] = 1.0
    phase = np.exp(1j * thetas[:, None] * orders[None, :])
    q = np.exp(-1j * orders[:, None] * boundary_angles[None, :])
    scale = 1.0 / (2.0 * math.pi * omega)

    p_val = (eps_n[None, :] * ratios.T) * phase
    kernel = scale * np.real(p_val @ q)
    if not gradient:
        return kernel

    jpr = np.empty_like(jr[: nmax + 1])
    jpr[0] = -jr[1]
    jpr[1:] = 0.5 * (jr[:nmax] - jr[2 : nmax + 2])
    dr_ratios = omega * jpr / jnp[: nmax + 1, None]
    p_dr = (eps_n[None, :] * dr_ratios.T) * phase
    d_radial = scale * np.real(p_dr @ q)
    p_dt = p_val * (1j * orders[None, :])
    d_angular = scale * np.real(p_dt @ q)
    return kernel, d_radial, d_angular


def boundary_kernel_gradients(
    omega: float,
    points: np.ndarray,
    boundary_angles: np.ndarray,
    series_tol: float = _DEFAULT_SERIES_TOL,
):
    """Kernel matrix and cartesian gradient matrices (P, NB) each."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    radii = np.hypot(pts[:, 0], pts[:, 1])
    kernel, d_r, d_t = boundary_kernel_tables(
        omega, pts, boundary_angles, series_tol, gradient=True
    )
    gx = np.empty_like(kernel)
    gy = np.empty_like(kernel)
    interior = radii >= 1e-12
    rr = np.where(interior, radii, 1.0)
    ct = pts[:, 0] / rr
    st = pts[:, 1] / rr
    gx[interior] = ct[interior, None] * d_r[interior] - (st / rr)[interior, None] * d_t[interior]
    gy[interior] = st[interior, None] * d_r[interior] + (ct / rr)[interior, None] * d_t[interior]
    if np.any(~interior):
        # Analytic center limit: only the n = 1 mode moves the kernel.
        jnp1 = float(sp.jvp(1, omega))
        scale = 1.0 / (2.0 * math.pi * omega) * omega / jnp1
        gx[~interior] = scale * np.cos(boundary_angles)[None, :]
        gy[~interior] = scale * np.sin(boundary_angles)[None, :]
    return kernel, gx, gy


# ---------------------------------------------------------------------------
# datasets


@dataclass(frozen=True)
class BoundaryDataset:
    """Scattered-field traces on the boundary grid, per direction and frequency.

    ``traces[n, l, k]`` is (u_tot - u_bac) at boundary point n for incident
    direction l and frequency k. ``snr_db`` is +inf for clean data.
    """

    traces: np.ndarray
    grid: BoundaryGrid
    incident: IncidentSet
    snr_db: float = math.inf
    noise_seed: int | None = None

    def __post_init__(self) -> None:
        tr = np.asarray(self.traces)
        expected = (self.grid.n_points, self.incident.n_directions, self.incident.n_frequencies)
        if tr.shape != expected:
            raise ConfigError(f"traces shape {tr.shape} does not match {expected}")
        if not np.all(np.isfinite(tr.real)) or not np.all(np.isfinite(tr.imag)):
            raise ConfigError("traces must be finite")

    @property
    def is_clean(self) -> bool:
        return math.isinf(self.snr_db)


def synthesize(
    inclusions,
    incident: IncidentSet,
    grid: BoundaryGrid,
    m_nodes: int = _DEFAULT_SYNTH_NODES,
    series_tol: float = _DEFAULT_SERIES_TOL,
) -> BoundaryDataset:
    """Synthesize clean boundary traces for one or more thin inclusions.

    Parameters
    ----------
    inclusions : ThinInclusion or sequence of ThinInclusion
    incident : IncidentSet
    grid : BoundaryGrid
    m_nodes : int
        Curve quadrature nodes (default 400; keep this at least twice any
        node count used on the inversion side).
    series_tol : float
        Mode-series tail tolerance for the boundary kernel.

    Returns
    -------
    BoundaryDataset
        Clean traces of shape (N, L, K).
    """
    if isinstance(inclusions, ThinInclusion):
        inclusions = [inclusions]
    inclusions = list(inclusions)
    if not inclusions:
        raise ConfigError("need at least one inclusion")
    for omega in incident.omegas:
        ensure_not_resonant(float(omega))
    lam_min = 2.0 * math.pi / float(np.max(incident.omegas))
    for inc in inclusions:
        if inc.h > lam_min / 10.0 + 1e-15:
            raise ConfigError(
                f"half-thickness {inc.h} too large for the shortest wavelength {lam_min:.4f}"
            )

    n_b = grid.n_points
    L = incident.n_directions
    K = incident.n_frequencies
    traces = np.zeros((n_b, L, K), dtype=complex)

    for inc in inclusions:
        disc = discretize(inc.curve, m_nodes)
        nodes = disc.nodes
        alpha = inc.tangential_contrast()
        beta = inc.normal_contrast()
        gamma = inc.permittivity_contrast()
        # d_l . t and d_l . n at every node, per direction: (M, L)
        tan_dot = disc.tangents @ incident.directions.T
        nor_dot = disc.normals @ incident.directions.T
        for k in range(K):
            omega = float(incident.omegas[k])
            kernel, gx, gy = boundary_kernel_gradients(omega, nodes, grid.angles, series_tol)
            g_tan = disc.tangents[:, 0:1] * gx + disc.tangents[:, 1:2] * gy
            g_nor = disc.normals[:, 0:1] * gx + disc.normals[:, 1:2] * gy
            u = np.exp(1j * omega * (nodes @ incident.directions.T))  # (M, L)
            coupled = (1j * omega) * u
            w = disc.weights[:, None]
            block = (
                (alpha * w * coupled * tan_dot).T @ g_tan
                + (beta * w * coupled * nor_dot).T @ g_nor
                + (gamma * omega**2 * w * u).T @ kernel
            )  # (L, NB)
            traces[:, :, k] += inc.h * block.T
    return BoundaryDataset(traces=traces, grid=grid, incident=incident)


def add_awgn(data: BoundaryDataset, snr_db: float, seed: int) -> BoundaryDataset:
    """Add complex white Gaussian noise at a target SNR per (l, k) trace.

    Noise power is set from each trace's own mean power; the per-trace
    substream is spawned from the master seed, so the result is bit-identical
    regardless of evaluation order. Passing snr_db = +inf returns the input
    unchanged. Traces that are identically zero stay noiseless (their SNR is
    undefined).
    """
    if not data.is_clean:
        raise DataStateError("dataset already carries noise; synthesize a fresh one")
    if math.isinf(snr_db):
        return data
    if not math.isfinite(snr_db):
        raise ConfigError(f"snr_db must be finite or +inf, got {snr_db!r}")
    n_b, L, K = data.traces.shape
    noisy = data.traces.copy()
    children = np.random.SeedSequence(seed).spawn(L * K)
    factor = 10.0 ** (-snr_db / 10.0)
    for l in range(L):
        for k in range(K):
            trace = data.traces[:, l, k]
            power = float(np.mean(np.abs(trace) ** 2))
            if power == 0.0:
                continue
            rng = np.random.Generator(np.random.PCG64(children[l * K + k]))
            scale = math.sqrt(power * factor / 2.0)
            noise = scale * (rng.standard_normal(n_b) + 1j * rng.standard_normal(n_b))
            noisy[:, l, k] = trace + noise
    return BoundaryDataset(
        traces=noisy, grid=data.grid, incident=data.incident, snr_db=float(snr_db), noise_seed=seed
    )


# ---------------------------------------------------------------------------
# dataset file format


def save_dataset(data: BoundaryDataset, path) -> None:
    """Write a dataset as self-describing columnar text (bit-exact floats).

    Only standard equispaced direction families are representable (the header
    stores just L); anything else is rejected rather than silently dropped.
    """
    if not np.array_equal(data.incident.directions, standard_directions(data.incident.n_directions)):
        raise ConfigError("only standard equispaced direction sets can be serialized")
    n_b, L, K = data.traces.shape
    lines = [
        "# thinimage boundary dataset v1",
        f"# n_boundary {n_b}",
        f"# n_directions {L}",
        f"# n_frequencies {K}",
        "# omegas " + " ".join(repr(float(w)) for w in data.incident.omegas),
        "# snr_db " + ("clean" if data.is_clean else repr(float(data.snr_db))),
        "# noise_seed " + ("none" if data.noise_seed is None else str(int(data.noise_seed))),
        "# columns n l k re im",
    ]
    body = []
    for n in range(n_b):
        for l in range(L):
            for k in range(K):
                z = data.traces[n, l, k]
                body.append(f"{n} {l} {k} {float(z.real)!r} {float(z.imag)!r}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines + body))
        fh.write("\n")


def load_dataset(path) -> BoundaryDataset:
    """Read a dataset written by save_dataset (bit-exact round trip)."""
    header: dict[str, str] = {}
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].strip().split(None, 1)
                if len(parts) == 2:
                    header[parts[0]] = parts[1]
                continue
            rows.append(line.split())
    try:
        n_b = int(header["n_boundary"])
        L = int(header["n_directions"])
        K = int(header["n_frequencies"])
        omegas = np.array([float(tok) for tok in header["omegas"].split()])
        snr = math.inf if header["snr_db"] == "clean" else float(header["snr_db"])
        seed = None if header["noise_seed"] == "none" else int(header["noise_seed"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed dataset header: {exc}") from exc
    if len(rows) != n_b * L * K:
        raise ConfigError(f"expected {n_b * L * K} rows, found {len(rows)}")
    traces = np.zeros((n_b, L, K), dtype=complex)
    for row in rows:
        if len(row) != 5:
            raise ConfigError(f"malformed dataset row: {' '.join(row)}")
        n, l, k = int(row[0]), int(row[1]), int(row[2])
        traces[n, l, k] = complex(float(row[3]), float(row[4]))
    incident = IncidentSet(standard_directions(L), omegas)
    return BoundaryDataset(
        traces=traces,
        grid=BoundaryGrid(n_b),
        incident=incident,
        snr_db=snr,
        noise_seed=seed,
    )


# ---------------------------------------------------------------------------
# multistatic response matrix


@dataclass(frozen=True)
class MultistaticMatrix:
    """Full-aperture observation matrix at one frequency, with its SVD.

    Entry (j, l) pairs the scattered trace of incident direction l with the
    normal flux of the plane wave travelling along direction j, integrated
    over the boundary. Observation and incidence share one direction set.
    """

    matrix: np.ndarray
    omega: float
    directions: np.ndarray
    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors_h: np.ndarray

    @property
    def n_directions(self) -> int:
        return self.matrix.shape[0]


def assemble_multistatic(data: BoundaryDataset, k_index: int = 0) -> MultistaticMatrix:
    """Assemble the observation matrix from boundary traces at one frequency.

    The observation functional for row j is the trapezoid quadrature of the
    trace against i*omega (d_j . nu(y)) e^{i omega d_j . y}, the boundary
    normal derivative of the plane wave with direction d_j. On the unit
    circle nu(y) = y.

    Parameters
    ----------
    data : BoundaryDataset
    k_index : int
        Frequency index into the dataset.

    Returns
    -------
    MultistaticMatrix
        The matrix together with its singular value decomposition.
    """
    if not 0 <= k_index < data.incident.n_frequencies:
        raise IndexError(f"frequency index {k_index} out of range")
    omega = float(data.incident.omegas[k_index])
    directions = data.incident.directions
    boundary = data.grid.points
    # (N, L) flux of each observation plane wave at each boundary point
    radial = boundary @ directions.T
    flux = (1j * omega) * radial * np.exp(1j * omega * radial)
    traces = data.traces[:, :, k_index]
    matrix = data.grid.weight * (flux.T @ traces)
    left, sing, right_h = np.linalg.svd(matrix)
    return MultistaticMatrix(
        matrix=matrix,
        omega=omega,
        directions=directions,
        left_vectors=left,
        singular_values=sing,
        right_vectors_h=right_h,
    )


def point_scatterer_matrix(
    points: np.ndarray, amplitudes: np.ndarray, directions: np.ndarray, omega: float
) -> MultistaticMatrix:
    """Synthetic observation matrix for a few monopole point scatterers.

    Each scatterer at x_p with amplitude a_p contributes the rank-one block
    a_p e^{i omega (d_j + d_l) . x_p}; the full matrix is complex symmetric
    with rank at most the number of points. Useful as a matrix with an
    exactly known signal space.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    amps = np.atleast_1d(np.asarray(amplitudes, dtype=complex))
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    if pts.shape[0] != amps.shape[0]:
        raise ConfigError("need one amplitude per scatterer")
    phases = np.exp(1j * float(omega) * (dirs @ pts.T))
    matrix = (phases * amps[None, :]) @ phases.T
    left, sing, right_h = np.linalg.svd(matrix)
    return MultistaticMatrix(
        matrix=matrix,
        omega=float(omega),
        directions=dirs,
        left_vectors=left,
        singular_values=sing,
        right_vectors_h=right_h,
    )
