"""Self-similar solution wrappers with pointwise evaluation and gradients.

A self-similar solution is determined by its profile U at time 1 through
u(x, t) = U(x / sqrt(t)); the wrappers expose U, its spatial gradient and
the induced time derivative at arbitrary points, so every diagnostic can
quadrature against smooth callables instead of grid samples.  Equivariant
profiles get exact closed-form gradients; full grid fields fall back on
trilinear interpolation of the discrete gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.interpolate

from .errors import DomainExceededError, HmfxError, TimeOrderError
from .fields import MapField, gradient, interpolate
from .target import TargetSphere


@dataclass(frozen=True)
class SelfSimilarSolution:
    """Profile-at-time-1 view of a self-similar map R^3 x (0, inf) -> R^m.

    ``profile_fn(points) -> (..., m)`` and ``profile_gradient_fn(points) ->
    (..., 3, m)`` evaluate U and its Cartesian gradient; ``flavor`` selects
    the penalty entering the energy density ('hm' for exactly
    sphere-valued maps, 'gl' or 'cs' for penalized ones with strength K).
    """

    name: str
    m: int
    flavor: str  # 'hm' | 'gl' | 'cs'
    profile_fn: object
    profile_gradient_fn: object
    K: float | None = None
    domain_radius: float = np.inf
    boundary_gradient_sq: object = None  # |grad u_0|^2(x) of the boundary data
    target: TargetSphere = field(default_factory=TargetSphere)

    def __post_init__(self):
        if self.flavor not in ("hm", "gl", "cs"):
            raise HmfxError("solution flavor must be 'hm', 'gl' or 'cs'")
        if self.flavor != "hm" and (self.K is None or self.K <= 0):
            raise HmfxError("penalized solutions need a positive K")

    def _check_domain(self, points: np.ndarray, t: float) -> np.ndarray:
        if t <= 0.0:
            raise TimeOrderError("self-similar evaluation needs t > 0")
        y = np.asarray(points, dtype=float) / np.sqrt(t)
        r = np.linalg.norm(y, axis=-1)
        if np.any(r > self.domain_radius * (1.0 + 1e-12)):
            raise DomainExceededError(
                "evaluation point leaves the profile domain after rescaling")
        return y

    def evaluate(self, points, t: float = 1.0) -> np.ndarray:
        """u(x, t) = U(x / sqrt(t))."""
        return np.asarray(self.profile_fn(self._check_domain(points, t)), dtype=float)

    def gradient(self, points, t: float = 1.0) -> np.ndarray:
        """Spatial gradient: (grad u)(x, t) = t^{-1/2} (grad U)(x / sqrt(t))."""
        y = self._check_domain(points, t)
        return np.asarray(self.profile_gradient_fn(y), dtype=float) / np.sqrt(t)

    def time_derivative(self, points, t: float = 1.0) -> np.ndarray:
        """d/dt of u(x, t) = -(1 / 2t) (y . grad U)(y), y = x / sqrt(t)."""
        y = self._check_domain(points, t)
        g = np.asarray(self.profile_gradient_fn(y), dtype=float)
        return -(y[..., :, None] * g).sum(axis=-2) / (2.0 * t)


# ---------------------------------------------------------------------------
# equivariant profiles (closed-form gradients)


def _equivariant_fns(P, dP, Q, dQ, m: int):
    """Evaluators for U(x) = (P(r) x/|x|, Q(r)) with radial callables."""

    def fn(points):
        pts = np.asarray(points, dtype=float)
        r = np.linalg.norm(pts, axis=-1)
        r_safe = np.where(r > 0, r, 1.0)
        omega = pts / r_safe[..., None]
        out = np.empty(pts.shape[:-1] + (m,))
        out[..., :3] = P(r)[..., None] * omega
        out[..., 3:] = Q(r)[..., None]
        out[..., :3] = np.where((r > 0)[..., None], out[..., :3], 0.0)
        return out

    def grad_fn(points):
        pts = np.asarray(points, dtype=float)
        r = np.linalg.norm(pts, axis=-1)
        r_safe = np.where(r > 0, r, 1.0)
        omega = pts / r_safe[..., None]
        p, dp = P(r), dP(r)
        q_prime = dQ(r)
        out = np.zeros(pts.shape[:-1] + (3, m))
        eye = np.eye(3)
        # d_j (P omega_i) = P' w_j w_i + (P / r)(delta_ij - w_i w_j)
        ww = omega[..., :, None] * omega[..., None, :]
        out[..., :, :3] = (dp[..., None, None] * ww
                           + (p / r_safe)[..., None, None] * (eye - ww))
        out[..., :, 3] = q_prime[..., None] * omega
        return out

    return fn, grad_fn


def from_angle(angle_at, angle_slope_at, name: str = "equivariant",
               boundary_angle: float | None = None) -> SelfSimilarSolution:
    """Sphere-valued equivariant solution from an angle profile h(r).

    ``angle_at`` / ``angle_slope_at`` evaluate h and h' at radii (the
    shooting result exposes both through its dense interpolant).
    """
    P = lambda r: np.sin(angle_at(r))
    dP = lambda r: np.cos(angle_at(r)) * angle_slope_at(r)
    Q = lambda r: np.cos(angle_at(r))
    dQ = lambda r: -np.sin(angle_at(r)) * angle_slope_at(r)
    fn, grad_fn = _equivariant_fns(P, dP, Q, dQ, 4)
    bgrad = None
    if boundary_angle is not None:
        s2 = 2.0 * np.sin(boundary_angle) ** 2

        def bgrad(points):
            r2 = (np.asarray(points, dtype=float) ** 2).sum(axis=-1)
            return s2 / r2

    return SelfSimilarSolution(name, 4, "hm", fn, grad_fn,
                               boundary_gradient_sq=bgrad)


def from_shooting(result, name: str | None = None) -> SelfSimilarSolution:
    """Wrap a converged angle shooting result (n = 3 profiles only)."""
    if result.profile.n != 3:
        raise HmfxError("full-space wrappers cover the n = 3 domain only")
    return from_angle(result.angle_at, result.angle_slope_at,
                      name or f"corotational({result.h_inf:g})",
                      boundary_angle=result.h_inf)


def equator_solution() -> SelfSimilarSolution:
    """The exact constant-angle branch h = pi/2 (energy density 1/|x|^2)."""
    return from_angle(lambda r: np.full(np.shape(r), np.pi / 2.0),
                      lambda r: np.zeros(np.shape(r)),
                      "equator", boundary_angle=np.pi / 2.0)


def constant_solution(m: int = 4) -> SelfSimilarSolution:
    point = np.zeros(m)
    point[-1] = 1.0

    def fn(points):
        pts = np.asarray(points, dtype=float)
        return np.broadcast_to(point, pts.shape[:-1] + (m,)).copy()

    def grad_fn(points):
        pts = np.asarray(points, dtype=float)
        return np.zeros(pts.shape[:-1] + (3, m))

    return SelfSimilarSolution("constant", m, "hm", fn, grad_fn,
                               boundary_gradient_sq=lambda p: np.zeros(
                                   np.asarray(p, dtype=float).shape[:-1]))


def from_gl_profile(profile, K: float, name: str | None = None) -> SelfSimilarSolution:
    """Wrap a converged penalized (psi, phi) collocation profile, n = 3."""
    if profile.n != 3 or profile.is_angle_form:
        raise HmfxError("needs an n = 3 profile in (psi, phi) form")
    grid = profile.grid
    sp_p = scipy.interpolate.CubicSpline(grid.nodes, profile.psi)
    sp_q = scipy.interpolate.CubicSpline(grid.nodes, profile.phi)
    fn, grad_fn = _equivariant_fns(sp_p, sp_p.derivative(), sp_q,
                                   sp_q.derivative(), 4)
    h_inf = float(np.arctan2(profile.psi[-1], profile.phi[-1]))
    s2 = 2.0 * np.sin(h_inf) ** 2

    def bgrad(points):
        r2 = (np.asarray(points, dtype=float) ** 2).sum(axis=-1)
        return s2 / r2

    return SelfSimilarSolution(name or f"gl(K={K:g})", 4, "gl", fn, grad_fn,
                               K=K, domain_radius=grid.r_max,
                               boundary_gradient_sq=bgrad)


# ---------------------------------------------------------------------------
# grid-backed profiles


def from_mapfield(fld: MapField, flavor: str = "hm", K: float | None = None,
                  name: str = "grid-field",
                  boundary_gradient_sq=None) -> SelfSimilarSolution:
    """Wrap a discrete map field; gradient by interpolating the grid gradient."""
    g = gradient(fld)
    grad_field = MapField(fld.radial, fld.sphere,
                          g.reshape(g.shape[:3] + (3 * fld.m,)))

    def fn(points):
        return interpolate(fld, points)

    def grad_fn(points):
        flat = interpolate(grad_field, points)
        return flat.reshape(flat.shape[:-1] + (3, fld.m))

    return SelfSimilarSolution(name, fld.m, flavor, fn, grad_fn, K=K,
                               domain_radius=fld.radial.r_max,
                               boundary_gradient_sq=boundary_gradient_sq)
