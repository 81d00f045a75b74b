"""Equivariant reduction to radial boundary-value problems.

The angle profile h of the map (sin h * x/|x|, cos h) satisfies

    h'' + ((n-1)/r + r/2) h' - ((n-1) / (2 r^2)) sin(2h) = 0,

with h(0) = 0 and a prescribed limit angle at infinity; the penalized
modulus pair (psi, phi) of the map (psi * x/|x|, phi) satisfies the
coupled system with the quartic penalty of strength K.  Shooting handles
the angle equation; a damped-Newton collocation handles the stiff
penalized system.  Individual solves are deterministic and single
threaded; parameter sweeps may run them as independent jobs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.sparse
import scipy.sparse.linalg

from .errors import (GridError, NonconvergenceError, NotAttainedError,
                     PartialResultError, ShootingDivergedError)
from .fields import CorotationalProfile
from .grids import RadialGrid

_SERIES_R0 = 1e-3
_BLOWUP = 50.0


# ---------------------------------------------------------------------------
# angle equation


def _hm_rhs(n: int):
    def rhs(r, y):
        h, dh = y
        return (dh,
                -((n - 1) / r + 0.5 * r) * dh
                + (n - 1) / (2.0 * r * r) * np.sin(2.0 * h))
    return rhs


def _series_seed(a: float, n: int, r0: float) -> tuple[float, float]:
    """Regular-center expansion h = a r + c3 r^3 forced by the equation."""
    c3 = -(0.5 * a + (2.0 / 3.0) * (n - 1) * a**3) / (2.0 * n + 4.0)
    return a * r0 + c3 * r0**3, a + 3.0 * c3 * r0**2


def hm_residual(profile: CorotationalProfile, n: int | None = None) -> np.ndarray:
    """Pointwise finite-difference residual of the angle equation.

    The node at r = 0 uses the regular expansion (the residual of a
    regular profile vanishes there in the limit); profiles that are
    singular at the origin report an infinite residual at that node.
    """
    if not profile.is_angle_form:
        raise GridError("angle residual needs the pure-angle form")
    if profile.grid.size < 50:
        raise GridError("angle residual needs at least 50 radial nodes")
    n = n if n is not None else profile.n
    grid = profile.grid
    h = profile.angle
    r = grid.nodes
    d1 = grid.apply_d1(h)
    d2 = grid.apply_d2(h)
    res = np.empty_like(h)
    res[1:] = (d2[1:] + ((n - 1) / r[1:] + 0.5 * r[1:]) * d1[1:]
               - (n - 1) / (2.0 * r[1:] ** 2) * np.sin(2.0 * h[1:]))
    if abs(h[0]) < 1e-14 or abs(np.sin(2.0 * h[0])) < 1e-14:
        res[0] = 0.0
    else:
        res[0] = np.inf
    return res


@dataclass(frozen=True)
class ShootingResult:
    """Outcome of one shooting integration of the angle equation."""

    profile: CorotationalProfile
    slope: float
    h_end: float
    h_inf: float
    farfield_coeff: float
    residual_sup: float
    converged: bool
    dense: object  # OdeSolution; None for constant branches

    def angle_at(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.dense is None:
            return np.full(r.shape, self.h_inf)
        out = np.empty(r.shape)
        small = r < _SERIES_R0
        if np.any(small):
            h0, _ = np.vectorize(lambda rr: _series_seed(self.slope, self.profile.n, rr))(
                np.maximum(r[small], 0.0))
            out[small] = h0
        out[~small] = self.dense(r[~small])[0]
        return out

    def angle_slope_at(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.dense is None:
            return np.zeros(r.shape)
        out = np.empty(r.shape)
        small = r < _SERIES_R0
        if np.any(small):
            _, dh = np.vectorize(lambda rr: _series_seed(self.slope, self.profile.n, rr))(
                np.maximum(r[small], 0.0))
            out[small] = dh
        out[~small] = self.dense(r[~small])[1]
        return out


def _constant_branch(n: int, value: float, grid: RadialGrid) -> ShootingResult:
    profile = CorotationalProfile(grid, n, angle=np.full(grid.size, value))
    return ShootingResult(profile, 0.0, value, value, 0.0, 0.0, True, None)


def _dense_defect(dense, n: int, r: np.ndarray, delta: float = 1e-2) -> np.ndarray:
    """ODE defect of the integrator interpolant via a 5-point stencil on h'."""
    r = np.asarray(r, dtype=float)
    offs = np.array([-2.0, -1.0, 1.0, 2.0]) * delta
    w = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * delta)
    d2h = sum(wi * dense(r + oi)[1] for wi, oi in zip(w, offs))
    h, dh = dense(r)
    return np.abs(d2h + ((n - 1) / r + 0.5 * r) * dh
                  - (n - 1) / (2.0 * r * r) * np.sin(2.0 * h))


def shoot_hm(n: int, slope: float, r_max: float = 40.0,
             grid: RadialGrid | None = None,
             fit_window: tuple[float, float] | None = None) -> ShootingResult:
    """Integrate the regular angle solution with initial slope ``slope``.

    The limit angle is the constant of a {1, r^-2} least-squares fit on
    the tail window, which removes the leading truncation error of simply
    reading off h(r_max).
    """
    if r_max < 20.0:
        raise GridError("truncation radius must be at least 20")
    grid = grid if grid is not None else RadialGrid.graded(r_max, 0.02)
    if abs(grid.r_max - r_max) > 1e-9:
        raise GridError("grid does not end at the requested truncation radius")
    if slope == 0.0:
        return _constant_branch(n, 0.0, grid)

    h0, dh0 = _series_seed(slope, n, _SERIES_R0)
    blow = lambda r, y: abs(y[1]) - _BLOWUP
    blow.terminal = True
    sol = scipy.integrate.solve_ivp(
        _hm_rhs(n), (_SERIES_R0, r_max + 0.1), [h0, dh0], method="DOP853",
        dense_output=True, rtol=1e-12, atol=1e-13, events=blow)
    if sol.status == 1 or not sol.success:
        raise ShootingDivergedError(
            f"angle integration blew up at r = {sol.t[-1]:.3f} for slope {slope:g}")

    window = fit_window if fit_window is not None else (0.5 * r_max, r_max)
    r_fit = np.linspace(window[0], window[1], 40)
    basis = np.stack([np.ones_like(r_fit), r_fit**-2.0], axis=1)
    coef, *_ = np.linalg.lstsq(basis, sol.sol(r_fit)[0], rcond=None)
    h_inf, farfield = float(coef[0]), float(coef[1])

    h_nodes = np.empty(grid.size)
    h_nodes[0] = 0.0
    h_nodes[1:] = sol.sol(grid.nodes[1:])[0]
    profile = CorotationalProfile(grid, n, angle=h_nodes)

    r_check = grid.nodes[(grid.nodes > 0.1) & (grid.nodes < r_max - 0.1)]
    residual = float(_dense_defect(sol.sol, n, r_check).max())
    return ShootingResult(profile, slope, float(sol.sol(r_max)[0]), h_inf,
                          farfield, residual, True, sol.sol)


def _attained_range(n: int, r_max: float, grid: RadialGrid) -> tuple[float, float]:
    angles = []
    for a in np.linspace(0.0, 4.0, 17):
        try:
            angles.append(shoot_hm(n, a, r_max, grid).h_inf)
        except ShootingDivergedError:
            break
    return (min(angles), max(angles)) if angles else (0.0, 0.0)


def solve_corot(n: int, h_inf: float, r_max: float = 40.0,
                grid: RadialGrid | None = None,
                tol: float = 1e-8) -> ShootingResult:
    """Find the regular profile with prescribed limit angle by shooting.

    Constant branches (limit angle a zero of sin 2h) are returned exactly;
    otherwise the initial slope is bracketed and bisected until the
    attained limit angle matches to ``tol``.
    """
    grid = grid if grid is not None else RadialGrid.graded(r_max, 0.02)
    if abs(np.sin(2.0 * h_inf)) < 1e-14:
        return _constant_branch(n, h_inf, grid)
    sign = 1.0 if h_inf > 0 else -1.0
    target = abs(h_inf)

    def attained(a: float) -> ShootingResult:
        return shoot_hm(n, a, r_max, grid)

    lo, hi = 0.0, 0.05
    res_hi = attained(hi)
    tries = 0
    while res_hi.h_inf < target:
        lo, hi = hi, hi * 2.0
        tries += 1
        if tries > 12:
            raise NotAttainedError(
                f"limit angle {target:g} not reached by slopes up to {hi:g}",
                reachable=_attained_range(n, r_max, grid))
        try:
            res_hi = attained(hi)
        except ShootingDivergedError:
            raise NotAttainedError(
                f"shooting diverges before attaining limit angle {target:g}",
                reachable=_attained_range(n, r_max, grid))
    # bisection on the slope; the attained angle is monotone on the bracket
    result = res_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        res_mid = attained(mid)
        if abs(res_mid.h_inf - target) < tol:
            result = res_mid
            break
        if res_mid.h_inf < target:
            lo = mid
        else:
            hi, result = mid, res_mid
    else:
        raise NonconvergenceError("slope bisection failed to meet tolerance",
                                  last_iterate=result)
    if sign < 0:
        prof = CorotationalProfile(result.profile.grid, n, angle=-result.profile.angle)
        dense = result.dense
        neg = _NegatedDense(dense) if dense is not None else None
        result = ShootingResult(prof, -result.slope, -result.h_end, -result.h_inf,
                                -result.farfield_coeff, result.residual_sup,
                                result.converged, neg)
    return result


class _NegatedDense:
    def __init__(self, dense):
        self._dense = dense

    def __call__(self, r):
        return -self._dense(r)


# ---------------------------------------------------------------------------
# penalized (psi, phi) system


def gl_farfield_correction(n: int, K: float, psi_inf: float, phi_inf: float,
                           r: float) -> tuple[float, float]:
    """Order-1 far-field values of the penalized system at radius r.

    The first correction of the series is the rank-one-solved coefficient
    of the boundary map (see the asymptotics module); in the equivariant
    variables it is closed form.
    """
    lam = 2.0 * K / (2.0 * K + 1.0)
    psi1 = -(n - 1) * psi_inf + lam * (n - 1) * psi_inf**3
    phi1 = lam * (n - 1) * psi_inf**2 * phi_inf
    return psi_inf + psi1 / r**2, phi_inf + phi1 / r**2


def gl_residual(profile: CorotationalProfile, K: float,
                n: int | None = None) -> np.ndarray:
    """Stacked finite-difference residuals of the penalized system (interior)."""
    if profile.is_angle_form:
        raise GridError("penalized residual needs the (psi, phi) form")
    n = n if n is not None else profile.n
    grid = profile.grid
    r = grid.nodes
    psi, phi = profile.psi, profile.phi
    d1p, d2p = grid.apply_d1(psi), grid.apply_d2(psi)
    d1q, d2q = grid.apply_d1(phi), grid.apply_d2(phi)
    pen = K * (1.0 - psi**2 - phi**2)
    res_psi = np.zeros_like(psi)
    res_phi = np.zeros_like(phi)
    res_psi[1:-1] = (d2p[1:-1] + ((n - 1) / r[1:-1] + 0.5 * r[1:-1]) * d1p[1:-1]
                     - (n - 1) * psi[1:-1] / r[1:-1] ** 2 + pen[1:-1] * psi[1:-1])
    res_phi[1:-1] = (d2q[1:-1] + ((n - 1) / r[1:-1] + 0.5 * r[1:-1]) * d1q[1:-1]
                     + pen[1:-1] * phi[1:-1])
    return np.concatenate([res_psi, res_phi])


@dataclass(frozen=True)
class GlSolveInfo:
    iterations: int
    residual_sup: float
    max_modulus: float


def _gl_initial_guess(grid: RadialGrid, n: int, K: float,
                      psi_inf: float, phi_inf: float) -> tuple[np.ndarray, np.ndarray]:
    r = grid.nodes
    core = np.sqrt((n - 1) / max(K, 1.0))
    psi = psi_inf * r / np.sqrt(r * r + core * core)
    phi = np.full_like(r, phi_inf if phi_inf != 0.0 else 0.0)
    if phi_inf == 0.0:
        phi = np.sqrt(np.clip(1.0 - psi**2, 0.0, 1.0)) * 0.0
    return psi, phi


def solve_gl_corot(n: int, K: float, psi_inf: float, phi_inf: float,
                   r_max: float = 40.0, grid: RadialGrid | None = None,
                   initial: CorotationalProfile | None = None,
                   tol: float = 1e-9, max_iter: int = 60) -> tuple[CorotationalProfile, GlSolveInfo]:
    """Damped-Newton collocation for the penalized equivariant system.

    Boundary conditions: psi(0) = 0, phi'(0) = 0, and far-field values at
    r_max corrected by the order-1 series (removes the O(r_max^-2)
    truncation bias).  The step is halved until the residual decreases,
    at most 30 times.
    """
    if K <= 0:
        raise GridError("penalty strength K must be positive")
    if abs(psi_inf**2 + phi_inf**2 - 1.0) > 1e-10:
        raise GridError("far-field values must lie on the unit circle")
    grid = grid if grid is not None else RadialGrid.graded(r_max, 0.02)
    N = grid.size
    r = grid.nodes
    d1w, d2w = grid.d1_weights, grid.d2_weights
    psi_bc, phi_bc = gl_farfield_correction(n, K, psi_inf, phi_inf, grid.r_max)

    if initial is not None and not initial.is_angle_form:
        psi, phi = initial.psi.copy(), initial.phi.copy()
    elif initial is not None:
        psi, phi = np.sin(initial.angle), np.cos(initial.angle)
        psi[0] = 0.0
    else:
        psi, phi = _gl_initial_guess(grid, n, K, psi_inf, phi_inf)
    psi[0], psi[-1], phi[-1] = 0.0, psi_bc, phi_bc

    def residual_vec(psi, phi):
        prof = CorotationalProfile(grid, n, psi=psi, phi=phi)
        res = gl_residual(prof, K, n)
        res_psi, res_phi = res[:N], res[N:]
        res_psi[0] = psi[0]
        res_psi[-1] = psi[-1] - psi_bc
        # regularity at the center: one-sided phi'(0) = 0
        res_phi[0] = d1w[0, 0] * phi[0] + d1w[0, 1] * phi[1] + d1w[0, 2] * phi[2]
        res_phi[-1] = phi[-1] - phi_bc
        return np.concatenate([res_psi, res_phi])

    def jacobian(psi, phi):
        rows, cols, vals = [], [], []

        def add(i, j, v):
            rows.append(i)
            cols.append(j)
            vals.append(v)

        for i in range(1, N - 1):
            cr = (n - 1) / r[i] + 0.5 * r[i]
            stencil = [(i - 1, d2w[i, 0] + cr * d1w[i, 0]),
                       (i, d2w[i, 1] + cr * d1w[i, 1]),
                       (i + 1, d2w[i, 2] + cr * d1w[i, 2])]
            pen = K * (1.0 - psi[i] ** 2 - phi[i] ** 2)
            # psi equation
            for j, v in stencil:
                add(i, j, v)
            add(i, i, -(n - 1) / r[i] ** 2 + pen - 2.0 * K * psi[i] ** 2)
            add(i, N + i, -2.0 * K * psi[i] * phi[i])
            # phi equation
            for j, v in stencil:
                add(N + i, N + j, v)
            add(N + i, N + i, pen - 2.0 * K * phi[i] ** 2)
            add(N + i, i, -2.0 * K * psi[i] * phi[i])
        add(0, 0, 1.0)
        add(N - 1, N - 1, 1.0)
        for j in range(3):
            add(N, N + j, d1w[0, j])
        add(2 * N - 1, 2 * N - 1, 1.0)
        return scipy.sparse.csr_matrix(
            (vals, (rows, cols)), shape=(2 * N, 2 * N))

    res = residual_vec(psi, phi)
    res_norm = np.abs(res).max()
    iters = 0
    while res_norm > tol and iters < max_iter:
        jac = jacobian(psi, phi)
        try:
            step = scipy.sparse.linalg.spsolve(jac, -res)
        except RuntimeError as exc:
            raise NonconvergenceError(f"singular collocation Jacobian: {exc}",
                                      last_iterate=(psi, phi))
        lam = 1.0
        for _ in range(30):
            psi_new = psi + lam * step[:N]
            phi_new = phi + lam * step[N:]
            res_new = residual_vec(psi_new, phi_new)
            if np.abs(res_new).max() < res_norm:
                break
            lam *= 0.5
        else:
            raise NonconvergenceError(
                "Newton stagnated (30 halvings without decrease)",
                last_iterate=CorotationalProfile(grid, n, psi=psi, phi=phi))
        if lam * np.abs(step).max() < 1e-14 and np.abs(res_new).max() > tol:
            raise NonconvergenceError(
                "Newton step collapsed before reaching tolerance",
                last_iterate=CorotationalProfile(grid, n, psi=psi, phi=phi))
        psi, phi, res, res_norm = psi_new, phi_new, res_new, np.abs(res_new).max()
        iters += 1
    if res_norm > tol:
        raise NonconvergenceError(
            f"Newton did not converge in {max_iter} iterations "
            f"(residual {res_norm:.3e})",
            last_iterate=CorotationalProfile(grid, n, psi=psi, phi=phi))
    profile = CorotationalProfile(grid, n, psi=psi, phi=phi)
    return profile, GlSolveInfo(iters, float(res_norm), float(profile.modulus().max()))


# ---------------------------------------------------------------------------
# continuation


@dataclass(frozen=True)
class ContinuationRung:
    sigma: float
    K: float
    profile: CorotationalProfile
    iterations: int
    residual_sup: float


def continuation(n: int, K_ladder, h_inf: float, sigma_path,
                 r_max: float = 40.0,
                 grid: RadialGrid | None = None) -> list[ContinuationRung]:
    """Warm-started sweep over the penalty ladder and the boundary homotopy.

    The boundary angle along the path is (1 - sigma) * h_inf.  Each rung
    starts from the previous converged profile; a rung failure aborts with
    the completed prefix attached.
    """
    K_ladder = list(K_ladder)
    sigma_path = list(sigma_path)
    if any(b <= a for a, b in zip(K_ladder, K_ladder[1:])):
        raise GridError("penalty ladder must be strictly increasing")
    if any(b >= a for a, b in zip(sigma_path, sigma_path[1:])):
        raise GridError("homotopy path must be strictly decreasing")
    grid = grid if grid is not None else RadialGrid.graded(r_max, 0.02)
    rungs: list[ContinuationRung] = []
    previous = None
    for K in K_ladder:
        for sigma in sigma_path:
            angle = (1.0 - sigma) * h_inf
            try:
                profile, info = solve_gl_corot(
                    n, K, np.sin(angle), np.cos(angle), r_max, grid,
                    initial=previous)
            except NonconvergenceError as exc:
                raise PartialResultError(
                    f"continuation failed at K={K:g}, sigma={sigma:g}: {exc}",
                    completed=rungs)
            rungs.append(ContinuationRung(sigma, K, profile, info.iterations,
                                          info.residual_sup))
            previous = profile
    return rungs
