"""The drift potential, the weighted Laplacian and the two first
approximations (caloric and barycentric) of 0-homogeneous boundary data.

The weighted operator is Delta + (r/2) d/dr, the natural elliptic operator
for self-similar profiles; its potential |x|^2/4 + n/2 is normalized so
the operator reproduces the potential itself.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss

from .boundary import BoundaryMap
from .errors import AccuracyError, GridError, TimeOrderError
from .fields import MapField
from .grids import RadialGrid, SphereGrid
from .target import quintic_step


def potential(x, n: int = 3):
    """f(x) = |x|^2 / 4 + n / 2 for Cartesian points (..., n)."""
    x = np.asarray(x, dtype=float)
    return 0.25 * (x * x).sum(axis=-1) + 0.5 * n


def potential_radial(r, n: int = 3):
    r = np.asarray(r, dtype=float)
    return 0.25 * r * r + 0.5 * n


# ---------------------------------------------------------------------------
# weighted Laplacian


def weighted_laplacian_profile(values: np.ndarray, grid: RadialGrid, n: int) -> np.ndarray:
    """Delta_f of a radial profile: u'' + ((n-1)/r + r/2) u'.

    At r = 0 the smooth-origin rule Delta u(0) = n u''(0) is used.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.size,):
        raise GridError("profile does not match the radial grid")
    if grid.size < 3:
        raise GridError("weighted Laplacian needs at least 3 radial nodes")
    r = grid.nodes
    d1 = grid.apply_d1(values)
    d2 = grid.apply_d2(values)
    out = np.empty_like(values)
    out[1:] = d2[1:] + ((n - 1) / r[1:] + 0.5 * r[1:]) * d1[1:]
    out[0] = n * d2[0]
    return out


def _sphere_laplacian_stencil(values: np.ndarray, sphere: SphereGrid) -> np.ndarray:
    """Conservative second-order lat-long Laplace-Beltrami on S^2.

    Fluxes through the pole faces vanish (sin(theta) = 0 there), so the
    coordinate singularity needs no special ghost values.
    """
    v = np.asarray(values, dtype=float)
    nt, nphi = sphere.n_theta, sphere.n_phi
    if v.shape[-3] != nt or v.shape[-2] != nphi:
        raise GridError("samples do not match the sphere grid")
    dt, dp = sphere.d_theta, sphere.d_phi
    theta = sphere.theta
    sin_c = np.sin(theta)
    sin_f = np.sin(theta + 0.5 * dt)  # face above row j (towards south)
    sin_f0 = np.sin(theta - 0.5 * dt)
    shape = (1,) * (v.ndim - 3) + (nt, 1, 1)
    sin_c = sin_c.reshape(shape)
    sin_f = sin_f.reshape(shape)
    sin_f0 = sin_f0.reshape(shape)

    flux_down = np.zeros_like(v)
    flux_up = np.zeros_like(v)
    flux_down[..., :-1, :, :] = (v[..., 1:, :, :] - v[..., :-1, :, :]) / dt
    flux_up[..., 1:, :, :] = (v[..., 1:, :, :] - v[..., :-1, :, :]) / dt
    lap_theta = (sin_f * flux_down - sin_f0 * flux_up) / (sin_c * dt)

    lap_phi = (np.roll(v, -1, axis=-2) - 2.0 * v + np.roll(v, 1, axis=-2)) \
        / (sin_c**2 * dp**2)
    return lap_theta + lap_phi


def weighted_laplacian_field(field: MapField) -> MapField:
    """Delta_f of a full map field, second-order conservative stencils.

    Matches the operator discretization used by the linear Dirichlet solve,
    so fixed-point residual checks are exact statements about the solver.
    """
    n = field.n
    r = field.radial.nodes
    v = field.values
    d1 = field.radial.apply_d1(v, axis=0)
    d2 = field.radial.apply_d2(v, axis=0)
    lap_s = _sphere_laplacian_stencil(v, field.sphere)

    out = np.empty_like(v)
    rr = r[1:, None, None, None]
    out[1:] = d2[1:] + ((n - 1) / rr + 0.5 * rr) * d1[1:] + lap_s[1:] / rr**2
    # origin: single physical point; Delta u(0) ~ 2n (mean_shell - u(0)) / r1^2
    shell_mean = field.sphere.mean(v[1])
    out[0] = 2.0 * n * (shell_mean - v[0, 0, 0]) / r[1] ** 2
    return field.with_values(out)


# ---------------------------------------------------------------------------
# heat kernels


def backward_heat_weight(z0, x, t, n: int = 3):
    """Backward heat kernel centred at z0 = (x0, t0), evaluated at (x, t < t0)."""
    x0, t0 = z0
    x0 = np.asarray(x0, dtype=float)
    x = np.asarray(x, dtype=float)
    tau = t0 - t
    if np.any(np.asarray(tau) <= 0.0):
        raise TimeOrderError("backward heat kernel needs t < t0")
    d2 = ((x - x0) ** 2).sum(axis=-1)
    return (4.0 * np.pi * tau) ** (-0.5 * n) * np.exp(-d2 / (4.0 * tau))


# ---------------------------------------------------------------------------
# caloric extension


class CaloricQuadrature:
    """Fixed quadrature for K_t * u0 in spherical coordinates around x.

    Gauss-Legendre radial nodes out to ``cutoff`` kernel standard radii
    (tail below 1e-10 of the mass) and a lat-long sphere rule.
    """

    def __init__(self, n_radial: int = 32, n_theta: int = 24, n_phi: int = 48,
                 cutoff: float = 10.0):
        self.sphere = SphereGrid(n_theta, n_phi)
        x_gl, w_gl = leggauss(n_radial)
        self.rho = 0.5 * cutoff * (x_gl + 1.0)
        self.w_rho = 0.5 * cutoff * w_gl
        self.cutoff = cutoff

    def extend(self, u0: BoundaryMap, points: np.ndarray, t: float = 1.0,
               chunk: int = 256) -> np.ndarray:
        """Evaluate (K_t * u0)(x) for Cartesian points (..., 3)."""
        if t <= 0.0:
            raise TimeOrderError("caloric extension needs t > 0")
        pts = np.asarray(points, dtype=float)
        shape = pts.shape[:-1]
        flat = pts.reshape(-1, 3)
        sqrt_t = np.sqrt(t)
        rho = self.rho * sqrt_t  # physical radius; self.rho is in kernel units
        # after scaling out t the radial measure is (4 pi)^{-3/2} s^2 e^{-s^2/4} ds
        w_rad = self.w_rho * (4.0 * np.pi) ** (-1.5) * self.rho**2 \
            * np.exp(-self.rho**2 / 4.0)
        dirs = self.sphere.directions.reshape(-1, 3)
        w_dir = self.sphere.weights.reshape(-1)
        out = np.empty((flat.shape[0], u0.m))
        for lo in range(0, flat.shape[0], chunk):
            block = flat[lo:lo + chunk]
            y = (block[:, None, None, :]
                 + rho[None, :, None, None] * dirs[None, None, :, :])
            vals = u0(y)  # (B, n_rho, n_dir, m)
            out[lo:lo + chunk] = np.einsum("i,j,bijm->bm", w_rad, w_dir, vals)
        return out.reshape(*shape, u0.m)


_DEFAULT_QUAD = None
_COARSE_QUAD = None


def _default_quadrature() -> CaloricQuadrature:
    global _DEFAULT_QUAD
    if _DEFAULT_QUAD is None:
        _DEFAULT_QUAD = CaloricQuadrature()
    return _DEFAULT_QUAD


def _coarse_quadrature() -> CaloricQuadrature:
    global _COARSE_QUAD
    if _COARSE_QUAD is None:
        _COARSE_QUAD = CaloricQuadrature(n_radial=20, n_theta=16, n_phi=32)
    return _COARSE_QUAD


def caloric_extension_points(u0: BoundaryMap, points: np.ndarray, t: float = 1.0,
                             quad: CaloricQuadrature | None = None,
                             self_check: bool = False,
                             check_tol: float = 5e-4) -> np.ndarray:
    """Heat-kernel smoothing of the boundary data at arbitrary points."""
    quad = quad if quad is not None else _default_quadrature()
    out = quad.extend(u0, points, t=t)
    if self_check:
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        sample = pts[:: max(1, pts.shape[0] // 16)]
        coarse = _coarse_quadrature().extend(u0, sample, t=t)
        fine = quad.extend(u0, sample, t=t)
        err = np.abs(coarse - fine).max()
        if err > check_tol:
            raise AccuracyError(
                f"caloric quadrature self-estimate {err:.3e} exceeds {check_tol:.1e}")
    return out


def caloric_extension(u0: BoundaryMap, radial: RadialGrid, sphere: SphereGrid,
                      quad: CaloricQuadrature | None = None,
                      self_check: bool = True) -> MapField:
    """Caloric first approximation sampled on a product grid (t = 1).

    The discrete maximum principle |U0| <= max |u0| is asserted post hoc.
    """
    pts = radial.nodes[:, None, None, None] * sphere.directions[None]
    vals = caloric_extension_points(u0, pts, t=1.0, quad=quad,
                                    self_check=self_check)
    vals[0] = vals[0, 0, 0]
    field = MapField(radial, sphere, vals)
    bound = np.linalg.norm(u0.sphere_samples(sphere), axis=-1).max()
    if field.norm_samples().max() > bound + 1e-6:
        raise AccuracyError("caloric extension violates the discrete maximum principle")
    return field


# ---------------------------------------------------------------------------
# barycentric extension


def barycentric_cutoff(r):
    """eta(r): 0 on |x| <= 1, 1 on |x| >= 2, C^2 quintic in between."""
    return quintic_step(np.asarray(r, dtype=float) - 1.0)


def barycentric_extension_points(u0: BoundaryMap, points: np.ndarray,
                                 target_point: np.ndarray | None = None) -> np.ndarray:
    """(1 - eta) P + eta u0(x/|x|): exact boundary data past |x| = 2."""
    if target_point is None:
        if u0.target_point is None:
            raise GridError("boundary map carries no target point for the barycentre")
        target_point = u0.target_point
    target_point = np.asarray(target_point, dtype=float)
    pts = np.asarray(points, dtype=float)
    r = np.linalg.norm(pts, axis=-1)
    eta = barycentric_cutoff(r)[..., None]
    vals = u0(pts)
    return (1.0 - eta) * target_point + eta * vals


def barycentric_extension(u0: BoundaryMap, radial: RadialGrid, sphere: SphereGrid,
                          target_point: np.ndarray | None = None) -> MapField:
    pts = radial.nodes[:, None, None, None] * sphere.directions[None]
    vals = barycentric_extension_points(u0, pts, target_point)
    vals[0] = vals[0, 0, 0]
    return MapField(radial, sphere, vals)
