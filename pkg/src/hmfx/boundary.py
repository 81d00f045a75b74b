"""Built-in 0-homogeneous boundary maps and CSV ingestion.

A boundary map is determined by its restriction to the unit sphere; the
built-ins cover the smooth, Lipschitz and exactly-harmonic cases used by
the solvers and the verification suite.
"""

from __future__ import annotations

from dataclasses import dataclass
import re

import numpy as np

from .errors import ConfigError, GridError
from .grids import SphereGrid


@dataclass(frozen=True)
class BoundaryMap:
    """Map S^2 (or S^{n-1} corotationally) -> S^{m-1} given by ``fn(dirs)``."""

    name: str
    m: int
    fn: object
    smoothness: str = "smooth"  # 'constant' | 'smooth' | 'lipschitz'
    h_inf: float | None = None  # set for corotational maps
    target_point: np.ndarray | None = None

    def __call__(self, dirs: np.ndarray) -> np.ndarray:
        dirs = np.asarray(dirs, dtype=float)
        out = np.asarray(self.fn(dirs), dtype=float)
        return out

    @property
    def is_corotational(self) -> bool:
        return self.h_inf is not None

    def sphere_samples(self, sphere: SphereGrid) -> np.ndarray:
        return self(sphere.directions)


def _unit(dirs):
    d = np.asarray(dirs, dtype=float)
    r = np.linalg.norm(d, axis=-1, keepdims=True)
    return d / np.where(r > 0, r, 1.0)


def constant_map(m: int = 3) -> BoundaryMap:
    point = np.zeros(m)
    point[-1] = 1.0

    def fn(dirs):
        dirs = np.asarray(dirs, dtype=float)
        return np.broadcast_to(point, dirs.shape[:-1] + (m,)).copy()

    return BoundaryMap("constant", m, fn, smoothness="constant",
                       h_inf=0.0, target_point=point)


def corotational_map(h_inf: float, n: int = 3) -> BoundaryMap:
    """omega -> (sin(h_inf) * omega, cos(h_inf)), valued in S^n in R^{n+1}."""
    s, c = np.sin(h_inf), np.cos(h_inf)

    def fn(dirs):
        w = _unit(dirs)
        out = np.empty(w.shape[:-1] + (w.shape[-1] + 1,))
        out[..., :-1] = s * w
        out[..., -1] = c
        return out

    pole = np.zeros(n + 1)
    pole[-1] = 1.0
    return BoundaryMap(f"corotational({h_inf:g})", n + 1, fn,
                       smoothness="constant" if h_inf == 0.0 else "smooth",
                       h_inf=float(h_inf), target_point=pole)


def equator_map(n: int = 3) -> BoundaryMap:
    bm = corotational_map(np.pi / 2.0, n)
    return BoundaryMap("equator", bm.m, bm.fn, smoothness="smooth",
                       h_inf=np.pi / 2.0, target_point=bm.target_point)


def identity_sphere_map() -> BoundaryMap:
    """The identity S^2 -> S^2; harmonic, hence all far-field corrections die."""
    return BoundaryMap("identity-sphere", 3, _unit, smoothness="smooth")


def lipschitz_wedge_map() -> BoundaryMap:
    """Fold map: latitude angle g = min(theta, pi - theta), so the southern
    hemisphere mirrors onto the northern one.  Continuous everywhere (the
    angle vanishes at both poles), Lipschitz with a gradient kink along the
    equator, not C^1."""

    def fn(dirs):
        w = _unit(dirs)
        theta = np.arccos(np.clip(w[..., 2], -1.0, 1.0))
        phi = np.arctan2(w[..., 1], w[..., 0])
        g = np.minimum(theta, np.pi - theta)
        out = np.empty_like(w)
        out[..., 0] = np.sin(g) * np.cos(phi)
        out[..., 1] = np.sin(g) * np.sin(phi)
        out[..., 2] = np.cos(g)
        return out

    return BoundaryMap("lipschitz-wedge", 3, fn, smoothness="lipschitz")


def from_sphere_samples(samples: np.ndarray, sphere: SphereGrid,
                        name: str = "csv") -> BoundaryMap:
    """Boundary map interpolated bilinearly from samples on a sphere grid."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape[:2] != (sphere.n_theta, sphere.n_phi):
        raise GridError("boundary samples do not match the sphere grid")
    m = samples.shape[-1]
    north = samples[0].mean(axis=0)
    south = samples[-1].mean(axis=0)
    vals = np.concatenate([north[None, None].repeat(sphere.n_phi, axis=1),
                           samples,
                           south[None, None].repeat(sphere.n_phi, axis=1)], axis=0)
    theta_aug = np.concatenate([[0.0], sphere.theta, [np.pi]])

    def fn(dirs):
        w = _unit(dirs)
        shape = w.shape[:-1]
        flat = w.reshape(-1, 3)
        theta = np.arccos(np.clip(flat[:, 2], -1.0, 1.0))
        phi = np.mod(np.arctan2(flat[:, 1], flat[:, 0]), 2.0 * np.pi)
        j1 = np.clip(np.searchsorted(theta_aug, theta), 1, theta_aug.size - 1)
        j0 = j1 - 1
        tt = (theta - theta_aug[j0]) / (theta_aug[j1] - theta_aug[j0])
        kf = phi / sphere.d_phi
        k0 = np.floor(kf).astype(int) % sphere.n_phi
        k1 = (k0 + 1) % sphere.n_phi
        tp = kf - np.floor(kf)
        out = ((1 - tt) * (1 - tp))[:, None] * vals[j0, k0] \
            + ((1 - tt) * tp)[:, None] * vals[j0, k1] \
            + (tt * (1 - tp))[:, None] * vals[j1, k0] \
            + (tt * tp)[:, None] * vals[j1, k1]
        return out.reshape(*shape, m)

    return BoundaryMap(name, m, fn, smoothness="lipschitz")


def load_boundary_csv(path, sphere: SphereGrid) -> BoundaryMap:
    """Rows theta, phi, components; nodes must enumerate the sphere grid."""
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    m = data.shape[1] - 2
    vals = data[:, 2:].reshape(sphere.n_theta, sphere.n_phi, m)
    return from_sphere_samples(vals, sphere, name=str(path))


_COROT_RE = re.compile(r"^corotational\(([^)]+)\)$")


def builtin_boundary(spec: str, n: int = 3) -> BoundaryMap:
    """Resolve a boundary-map name like ``equator`` or ``corotational(0.1)``."""
    spec = spec.strip()
    if spec == "constant":
        return constant_map(n + 1)
    if spec == "equator":
        return equator_map(n)
    if spec == "identity-sphere":
        return identity_sphere_map()
    if spec == "lipschitz-wedge":
        return lipschitz_wedge_map()
    match = _COROT_RE.match(spec)
    if match:
        try:
            h_inf = float(match.group(1))
        except ValueError as exc:
            raise ConfigError(f"bad corotational angle in {spec!r}") from exc
        return corotational_map(h_inf, n)
    raise ConfigError(f"unknown boundary map {spec!r}")
