"""Constructive fixed-point scheme on the full product grid (n = 3).

The correction V to a first approximation U0 of the boundary data is the
fixed point of V -> A^{-1} rhs(V), where A is the weighted Laplacian minus
the non-compact rank-one penalty linearization (kept on the left, exactly
as the construction splits it) with a zero Dirichlet condition on the
outer shell, and rhs collects the penalty nonlinearity Q plus the discrete
defect of the first approximation.  The linear operator is assembled once
per (U0, K) and factorized; Picard steps reuse the factorization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .boundary import BoundaryMap, corotational_map
from .errors import DivergenceError, GridError, LinearSolveError, SingularPointError
from .fields import MapField, x_norm
from .grids import RadialGrid, SphereGrid
from .target import TargetSphere
from .weighted import CaloricQuadrature, weighted_laplacian_field

AMBIENT_FLOOR = 1e-6
DIRECT_SOLVE_LIMIT = 30000


def default_grids() -> tuple[RadialGrid, SphereGrid]:
    """Coarse product grid keeping the linear solve under a second."""
    return RadialGrid.graded(16.0, 0.2), SphereGrid(8, 16)


# ---------------------------------------------------------------------------
# boundary homotopy and first approximations


def path_map(u0: BoundaryMap, sigma: float) -> BoundaryMap:
    """Geodesic interpolation from u0 (sigma = 0) to its target point (sigma = 1).

    Each value slides along the great circle towards the target point P;
    for corotational data this is exactly the angle scaling (1 - sigma) h.
    """
    if not (0.0 <= sigma <= 1.0):
        raise GridError("homotopy parameter must lie in [0, 1]")
    if u0.target_point is None:
        raise GridError("boundary map carries no target point for the homotopy")
    if u0.is_corotational:
        return corotational_map((1.0 - sigma) * u0.h_inf, u0.m - 1)
    P = np.asarray(u0.target_point, dtype=float)

    def fn(dirs):
        v = u0(dirs)
        cos_a = np.clip((v * P).sum(axis=-1), -1.0, 1.0)
        alpha = np.arccos(cos_a)
        perp = v - cos_a[..., None] * P
        norm = np.linalg.norm(perp, axis=-1, keepdims=True)
        perp = np.divide(perp, norm, out=np.zeros_like(perp), where=norm > 1e-14)
        beta = (1.0 - sigma) * alpha
        return np.cos(beta)[..., None] * P + np.sin(beta)[..., None] * perp

    return BoundaryMap(f"{u0.name}@sigma={sigma:g}", u0.m, fn,
                       smoothness=u0.smoothness, target_point=P)


def caloric_corotational_field(u0: BoundaryMap, radial: RadialGrid,
                               sphere: SphereGrid,
                               quad: CaloricQuadrature | None = None) -> MapField:
    """Heat-kernel first approximation of corotational data, symmetry-fast.

    The smoothing of (sin h * omega, cos h) is itself of the form
    (P(r) omega, Q(r)), so one kernel quadrature per radius suffices; the
    field is then assembled in closed form on the product grid.
    """
    if not u0.is_corotational or u0.m != 4:
        raise GridError("symmetric extension needs corotational data into S^3")
    quad = quad if quad is not None else CaloricQuadrature(20, 16, 32)
    probes = np.zeros((radial.size, 3))
    probes[:, 2] = radial.nodes
    vals = quad.extend(u0, probes, t=1.0)  # (Nr, 4): (0, 0, P, Q)
    P, Q = vals[:, 2], vals[:, 3]
    dirs = sphere.directions
    out = np.empty((radial.size, sphere.n_theta, sphere.n_phi, 4))
    out[..., :3] = P[:, None, None, None] * dirs[None]
    out[..., 3] = Q[:, None, None]
    out[0, ..., :3] = 0.0
    return MapField(radial, sphere, out)


# ---------------------------------------------------------------------------
# penalty right-hand side


def _chi_and_unit(u: np.ndarray, target: TargetSphere):
    mag = np.linalg.norm(u, axis=-1)
    if np.any(mag < AMBIENT_FLOOR):
        raise SingularPointError(
            "field magnitude below the ambient floor; sphere formulas undefined")
    chi_p = target.chi_prime((mag - 1.0) ** 2)
    return mag, chi_p, u / mag[..., None]


def assemble_Q(U0: MapField, V: MapField, K: float,
               target: TargetSphere | None = None) -> MapField:
    """Penalty nonlinearity Q(U0, V) of the fixed-point splitting.

    Q = -K chi'(d^2(U0)) <u_hat, V> u_hat
        + K chi'(d^2(U0 + V)) (|U0 + V| - 1)(U0 + V)/|U0 + V|,
    with u_hat = U0/|U0|; the first term cancels the linearization kept on
    the operator side.
    """
    target = target if target is not None else TargetSphere(m=U0.m)
    _, chi0, uhat = _chi_and_unit(U0.values, target)
    w = U0.values + V.values
    magw, chiw, what = _chi_and_unit(w, target)
    lin = -K * chi0[..., None] * (uhat * V.values).sum(axis=-1)[..., None] * uhat
    full = K * chiw[..., None] * (magw - 1.0)[..., None] * what
    return U0.with_values(lin + full)


def assemble_rhs(U0: MapField, V: MapField, K: float,
                 target: TargetSphere | None = None,
                 extension_defect: MapField | None = None) -> MapField:
    """Q plus the discrete defect -Delta_f U0 of the first approximation.

    The continuum heat-kernel approximation is annihilated by the weighted
    Laplacian; its discrete defect is kept on the right-hand side so the
    Picard limit solves the discrete static equation exactly.
    """
    q = assemble_Q(U0, V, K, target)
    defect = extension_defect if extension_defect is not None \
        else weighted_laplacian_field(U0)
    return q.with_values(q.values - defect.values)


# ---------------------------------------------------------------------------
# linear Dirichlet operator


class LinearizedOperator:
    """Factorized discrete Delta_f - K chi' <u_hat, .> u_hat, zero outer shell.

    Unknowns: the origin vector plus every interior shell node; the
    discretization matches ``weighted_laplacian_field`` entry for entry.
    """

    def __init__(self, U0: MapField, K: float,
                 target: TargetSphere | None = None):
        if K <= 0:
            raise GridError("penalty strength K must be positive")
        self.U0 = U0
        self.K = K
        self.target = target if target is not None else TargetSphere(m=U0.m)
        self._build()

    def _build(self):
        U0, K = self.U0, self.K
        grid, sph, m = U0.radial, U0.sphere, U0.m
        N, nt, nph = grid.size, sph.n_theta, sph.n_phi
        self._shape = (N, nt, nph, m)
        n_dom = U0.n
        r = grid.nodes
        d1w, d2w = grid.d1_weights, grid.d2_weights
        dt, dp = sph.d_theta, sph.d_phi
        theta = sph.theta
        sin_c = np.sin(theta)
        sin_f = np.sin(theta + 0.5 * dt)
        sin_f0 = np.sin(theta - 0.5 * dt)
        w_mean = sph.weights / (4.0 * np.pi)

        def idx(i, j, k, c):
            return m + (((i - 1) * nt + j) * nph + k) * m + c

        n_unknown = m + (N - 2) * nt * nph * m
        self.n_unknown = n_unknown
        rows, cols, vals = [], [], []

        def add(a, b, v):
            rows.append(a)
            cols.append(b)
            vals.append(v)

        _, chi0, uhat = _chi_and_unit(U0.values, self.target)

        # origin rows
        coeff0 = 2.0 * n_dom / r[1] ** 2
        for c in range(m):
            add(c, c, -coeff0)
            for j in range(nt):
                for k in range(nph):
                    add(c, idx(1, j, k, c), coeff0 * w_mean[j, k])
            for c2 in range(m):
                add(c, c2, -K * chi0[0, 0, 0] * uhat[0, 0, 0, c] * uhat[0, 0, 0, c2])

        # interior rows
        for i in range(1, N - 1):
            cr = (n_dom - 1) / r[i] + 0.5 * r[i]
            rad = (d2w[i, 0] + cr * d1w[i, 0],
                   d2w[i, 1] + cr * d1w[i, 1],
                   d2w[i, 2] + cr * d1w[i, 2])
            inv_r2 = 1.0 / r[i] ** 2
            for j in range(nt):
                c_th_p = sin_f[j] / (sin_c[j] * dt * dt) if j < nt - 1 else 0.0
                c_th_m = sin_f0[j] / (sin_c[j] * dt * dt) if j > 0 else 0.0
                c_ph = 1.0 / (sin_c[j] ** 2 * dp * dp)
                diag_sph = -(c_th_p + c_th_m + 2.0 * c_ph)
                for k in range(nph):
                    for c in range(m):
                        row = idx(i, j, k, c)
                        # radial coupling
                        if i - 1 == 0:
                            add(row, c, rad[0])
                        else:
                            add(row, idx(i - 1, j, k, c), rad[0])
                        add(row, row, rad[1] + inv_r2 * diag_sph)
                        if i + 1 < N - 1:
                            add(row, idx(i + 1, j, k, c), rad[2])
                        # angular coupling
                        if c_th_p:
                            add(row, idx(i, j + 1, k, c), inv_r2 * c_th_p)
                        if c_th_m:
                            add(row, idx(i, j - 1, k, c), inv_r2 * c_th_m)
                        add(row, idx(i, j, (k + 1) % nph, c), inv_r2 * c_ph)
                        add(row, idx(i, j, (k - 1) % nph, c), inv_r2 * c_ph)
                        # rank-one penalty linearization
                        fac = -K * chi0[i, j, k] * uhat[i, j, k, c]
                        for c2 in range(m):
                            add(row, idx(i, j, k, c2), fac * uhat[i, j, k, c2])

        mat = scipy.sparse.csc_matrix(
            (vals, (rows, cols)), shape=(n_unknown, n_unknown))
        self._mat = mat
        # small systems factorize exactly; large ones use an incomplete
        # factorization as preconditioner (direct fill-in grows too fast)
        try:
            if n_unknown <= DIRECT_SOLVE_LIMIT:
                self._lu = scipy.sparse.linalg.splu(mat)
                self._precond = None
            else:
                self._lu = None
                ilu = scipy.sparse.linalg.spilu(mat, drop_tol=1e-5,
                                                fill_factor=20)
                self._precond = scipy.sparse.linalg.LinearOperator(
                    mat.shape, ilu.solve)
        except RuntimeError as exc:
            raise LinearSolveError(f"operator factorization failed: {exc}")
        self._idx = idx

    def _pack(self, field: MapField) -> np.ndarray:
        v = field.values
        out = np.empty(self.n_unknown)
        out[: v.shape[-1]] = v[0, 0, 0]
        out[v.shape[-1]:] = v[1:-1].reshape(-1)
        return out

    def _unpack(self, vec: np.ndarray) -> MapField:
        N, nt, nph, m = self._shape
        vals = np.zeros((N, nt, nph, m))
        vals[0] = vec[:m]
        vals[1:-1] = vec[m:].reshape(N - 2, nt, nph, m)
        return self.U0.with_values(vals)

    def solve(self, rhs: MapField) -> MapField:
        """W with A W = rhs in the interior, W = 0 on the outer shell."""
        b = self._pack(rhs)
        if self._lu is not None:
            sol = self._lu.solve(b)
        else:
            sol, info = scipy.sparse.linalg.lgmres(
                self._mat, b, M=self._precond, rtol=1e-10, atol=0.0,
                maxiter=300)
            if info != 0:
                raise LinearSolveError(
                    f"iterative linear solve did not converge (info={info})")
        if not np.all(np.isfinite(sol)):
            raise LinearSolveError("linear solve produced non-finite entries")
        return self._unpack(sol)

    def apply(self, field: MapField) -> MapField:
        """Forward application (for manufactured-solution verification)."""
        lap = weighted_laplacian_field(field)
        _, chi0, uhat = _chi_and_unit(self.U0.values, self.target)
        lin = -self.K * chi0[..., None] \
            * (uhat * field.values).sum(axis=-1)[..., None] * uhat
        return field.with_values(lap.values + lin)


def solve_linear_dirichlet(Q: MapField, U0: MapField, K: float,
                           operator: LinearizedOperator | None = None,
                           target: TargetSphere | None = None
                           ) -> tuple[MapField, float]:
    """Solve the linearized Dirichlet problem; returns (W, barrier ratio).

    The barrier ratio max f |W| / ||Q||_X tracks the weighted a priori
    bound of the construction.
    """
    op = operator if operator is not None else LinearizedOperator(U0, K, target)
    W = op.solve(Q)
    f = 0.25 * U0.radial.nodes**2 + 0.5 * U0.n
    fw = (f[:, None, None] * W.norm_samples()).max()
    q_norm = x_norm(Q)
    return W, float(fw / q_norm) if q_norm > 0 else 0.0


# ---------------------------------------------------------------------------
# Picard iteration


@dataclass(frozen=True)
class FixedPointState:
    sigma: float
    K: float
    U0: MapField
    V: MapField
    x_norm_V: float
    step_norms: tuple      # ||V_{j+1} - V_j||_X per step
    contraction_ratios: tuple
    static_residual: float
    barrier_ratio: float
    converged: bool


def static_residual(U0: MapField, V: MapField, K: float,
                    target: TargetSphere | None = None) -> float:
    """Sup residual of the discrete static penalized equation on U0 + V.

    The outer Dirichlet shell is excluded (the truncation lives there).
    """
    target = target if target is not None else TargetSphere(m=U0.m)
    total = U0.with_values(U0.values + V.values)
    lap = weighted_laplacian_field(total)
    mag, chi_p, what = _chi_and_unit(total.values, target)
    force = K * chi_p[..., None] * (mag - 1.0)[..., None] * what
    res = lap.values - force
    return float(np.abs(res[:-1]).max())


def picard_iterate(U0: MapField, K: float, sigma: float = 0.0,
                   max_iters: int = 40, tol: float = 1e-8,
                   target: TargetSphere | None = None) -> FixedPointState:
    """Iterate V -> A^{-1}(Q(U0, V) - Delta_f U0) from V = 0.

    Stops when consecutive iterates differ by less than ``tol`` in the
    weighted correction norm; three consecutive non-contractive steps
    abort with the iteration ledger attached.
    """
    target = target if target is not None else TargetSphere(m=U0.m)
    op = LinearizedOperator(U0, K, target)
    defect = weighted_laplacian_field(U0)
    V = U0.with_values(np.zeros_like(U0.values))
    steps, ratios = [], []
    barrier = 0.0
    bad = 0
    converged = False
    for _ in range(max_iters):
        rhs = assemble_rhs(U0, V, K, target, extension_defect=defect)
        W, b = solve_linear_dirichlet(rhs, U0, K, operator=op)
        barrier = max(barrier, b)
        diff = x_norm(U0.with_values(W.values - V.values))
        steps.append(diff)
        if len(steps) > 1 and steps[-2] > 0:
            q = diff / steps[-2]
            ratios.append(q)
            if q >= 1.0:
                bad += 1
                if bad >= 3:
                    raise DivergenceError(
                        "three consecutive non-contractive Picard steps",
                        ledger={"step_norms": steps, "ratios": ratios})
            else:
                bad = 0
        V = W
        if diff < tol:
            converged = True
            break
    resid = static_residual(U0, V, K, target)
    return FixedPointState(sigma, K, U0, V, x_norm(V), tuple(steps),
                           tuple(ratios), resid, barrier, converged)


# ---------------------------------------------------------------------------
# decay report


@dataclass(frozen=True)
class DecayReport:
    sup_fV: float
    sup_f32_gradV: float
    value_slope: float | None
    gradient_slope: float | None


def verify_decay(V: MapField) -> DecayReport:
    """Weighted sups and fitted tail decay exponents of a correction field."""
    from .fields import gradient  # local import to avoid cycle at module load

    r = V.radial.nodes
    f = 0.25 * r**2 + 0.5 * V.n
    mag = V.norm_samples().max(axis=(1, 2))
    g = gradient(V)
    gmag = np.sqrt((g * g).sum(axis=(-2, -1))).max(axis=(1, 2))
    sup_fv = float((f * mag).max())
    sup_fg = float((f**1.5 * gmag).max())

    def tail_slope(values):
        mask = (r > 0.25 * r[-1]) & (r < 0.95 * r[-1]) & (values > 1e-14)
        if mask.sum() < 3:
            return None
        return float(np.polyfit(np.log(r[mask]), np.log(values[mask]), 1)[0])

    return DecayReport(sup_fv, sup_fg, tail_slope(mag), tail_slope(gmag))
