"""Acceptance gate: one test per shipped guarantee, at stated tolerance.

Each test appends a single pass/fail line to the terminal summary (see
conftest) including its wall-clock time against the stated budget.
"""

import json
import time

import numpy as np
import pytest

import conftest
from conftest import loglog_slope

from hmfx.asymptotics import (gl_coefficients, hmf_coefficients,
                              rate_classify, sup_deviation)
from hmfx.boundary import (constant_map, corotational_map, equator_map,
                           identity_sphere_map, lipschitz_wedge_map)
from hmfx.cli import main as cli_main
from hmfx.corotational import gl_residual, solve_corot, solve_gl_corot
from hmfx.diagnostics import (energy_inequality_report, eps_regularity_scan,
                              monotonicity_table, pohozaev_residual)
from hmfx.fields import MapField, x_norm
from hmfx.fixedpoint import (assemble_Q, caloric_corotational_field,
                             default_grids, path_map, picard_iterate,
                             static_residual)
from hmfx.grids import RadialGrid, SphereGrid
from hmfx.solutions import equator_solution, from_shooting
from hmfx.weighted import (CaloricQuadrature, potential_radial,
                           weighted_laplacian_profile)

_CACHE = {}


class _criterion:
    """Times a criterion body and emits the one-line verdict."""

    def __init__(self, number, budget, description):
        self.number = number
        self.budget = budget
        self.description = description

    def __enter__(self):
        self.t0 = time.time()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.time() - self.t0
        ok = exc_type is None and elapsed < self.budget
        status = "PASS" if ok else "FAIL"
        conftest.ACCEPTANCE_LINES.append(
            f"criterion {self.number:2d} [{status}] {self.description} "
            f"({elapsed:.1f}s / budget {self.budget:.0f}s)")
        if exc_type is None:
            assert elapsed < self.budget, (
                f"criterion {self.number} exceeded its {self.budget:.0f}s "
                f"budget ({elapsed:.1f}s)")
        return False


def _smooth_grid(n_cells, r_max=20.0):
    xi = np.linspace(0.0, 1.0, n_cells + 1)
    return RadialGrid(r_max * np.sinh(3.0 * xi) / np.sinh(3.0))


def _deviation_ladder(name):
    """Cached caloric-extension deviation ladders shared by criteria 9/10."""
    if name not in _CACHE:
        u0 = {"wedge": lipschitz_wedge_map(),
              "smooth": identity_sphere_map()}[name]
        radii = np.array([4.0, 7.0, 12.0, 20.0, 33.0, 50.0])
        quad = CaloricQuadrature(20, 16, 32)
        samples = {}

        def evaluate(pts):
            vals = quad.extend(u0, pts, t=1.0)
            samples["max"] = max(samples.get("max", 0.0),
                                 float(np.linalg.norm(vals, axis=-1).max()))
            return vals

        devs = sup_deviation(evaluate, u0, radii)
        _CACHE[name] = (u0, radii, devs, samples["max"])
    return _CACHE[name]


def test_criterion_01_weighted_operator_identity():
    with _criterion(1, 1.0, "drift operator identities and refinement order"):
        n = 3
        # Delta_f f = f on the default graded mesh
        grid = RadialGrid.graded(40.0, 0.05)
        f = potential_radial(grid.nodes, n)
        lap = weighted_laplacian_profile(f, grid, n)
        rel = np.abs(lap - f)[1:-1] / np.abs(f)[1:-1]
        assert rel.max() < 1e-3
        # closed form for r^-2 and second-order refinement on a smoothly
        # graded ladder (the quadratic potential is differentiated exactly,
        # so the genuine truncation order is measured on r^-2)
        errs, hs = [], []
        for n_cells in (200, 400, 800):
            g = _smooth_grid(n_cells)
            r = g.nodes
            vals = np.where(r > 0, r, 1.0) ** -2.0
            lap2 = weighted_laplacian_profile(vals, g, n)
            mask = (r >= 1.0) & (r <= 10.0)
            exact = 2.0 * (4 - n) * r[mask] ** -4 - r[mask] ** -2
            errs.append(np.abs(lap2[mask] - exact).max())
            hs.append(1.0 / n_cells)
        assert errs[-1] < 1e-3
        assert loglog_slope(hs, errs) >= 1.8


def test_criterion_02_exact_branches():
    with _criterion(2, 5.0, "equator and constant maps are exact fixed "
                            "points with vanishing coefficient ladders"):
        # the right-angle branch solves the angle equation exactly
        res = solve_corot(3, np.pi / 2.0)
        assert res.residual_sup <= 1e-10
        # the constant branch solves the penalized system exactly
        profile, info = solve_gl_corot(3, 10.0, 0.0, 1.0)
        assert info.residual_sup <= 1e-10
        assert np.abs(gl_residual(profile, 10.0)).max() <= 1e-10
        # the constant field solves the discrete static equation exactly
        radial, sphere = default_grids()
        const = MapField.constant(radial, sphere, [0.0, 0.0, 0.0, 1.0])
        zero = const.with_values(np.zeros_like(const.values))
        assert static_residual(const, zero, 10.0) <= 1e-10
        # u_1..u_4 vanish for both reference maps in the sphere-valued
        # series; the penalized series also vanishes for the constant map
        # (the equator map is not a critical point of the penalized energy
        # at finite K, so its penalized u_1 is genuinely O(1/K))
        for u0 in (equator_map(), corotational_map(0.0)):
            assert max(hmf_coefficients(u0, 4).sup_norms()) < 1e-10
        assert max(gl_coefficients(corotational_map(0.0), 10.0,
                                   4).sup_norms()) < 1e-10


def test_criterion_03_corotational_cross_check():
    with _criterion(3, 30.0, "far-field coefficient matches the recursion "
                             "across n and boundary angles"):
        for n in (3, 4, 5, 6):
            for h in (0.05, 0.1, 0.2, 0.3):
                res = solve_corot(n, h, r_max=60.0, tol=1e-5)
                radii = np.geomspace(5.0, 59.0, 28)
                vals = res.angle_at(radii)
                # order-2 far-field fit with the limit angle refined by the
                # fit itself (constant column); coefficients estimated on
                # the far tail so the next-order term stays visible
                A = np.vstack([np.ones_like(radii), radii**-2.0,
                               radii**-4.0]).T
                tail = radii > 25.0
                coef, *_ = np.linalg.lstsq(A[tail], vals[tail], rcond=None)
                pred = -((n - 1) / 2.0) * np.sin(2.0 * h)
                assert abs(coef[1] - pred) <= 0.02 * abs(pred)
                resid = np.abs(vals - A @ coef)
                mid = (radii >= 7.0) & (radii <= 20.0)
                assert loglog_slope(radii[mid], resid[mid]) <= -3.7


def test_criterion_04_gl_consistency():
    with _criterion(4, 60.0, "penalized solutions approach the sphere-"
                             "valued profile at one decade per K-decade"):
        n, h = 3, 0.1
        exact = solve_corot(n, h)
        psi_inf, phi_inf = np.sin(h), np.cos(h)
        mod_devs, profiles = [], []
        profile = None
        for K in (1.0, 10.0, 100.0):
            profile, _ = solve_gl_corot(n, K, psi_inf, phi_inf,
                                        initial=profile)
            mod_devs.append(float(np.abs(profile.modulus() - 1.0).max()))
            profiles.append(profile)
        assert mod_devs[0] > mod_devs[1] > mod_devs[2]
        # extracted angle of the K = 100 solution vs the exact profile
        r = profiles[-1].grid.nodes
        angle = profiles[-1].extracted_angle()
        assert np.abs(angle - exact.angle_at(r)).max() <= 5e-2
        # first-order coefficient: K = 1 closed form with factor 2/3
        gl1 = gl_coefficients(corotational_map(h), 1.0, 1, n=n)
        p1, q1 = gl1.coefficients[1]
        s, c = np.sin(h), np.cos(h)
        lam = 2.0 / 3.0
        assert abs(p1 - (-(n - 1) * s + lam * (n - 1) * s**3)) <= 1e-6
        assert abs(q1 - lam * (n - 1) * s**2 * c) <= 1e-6
        # ||u1_GL - u1_HMF|| drops ~10x per decade of K
        hmf = hmf_coefficients(corotational_map(h), 1, n=n)
        diffs = []
        for K in (1.0, 10.0, 100.0):
            gl = gl_coefficients(corotational_map(h), K, 1, n=n)
            diffs.append(np.hypot(
                gl.coefficients[1][0] - hmf.coefficients[1][0],
                gl.coefficients[1][1] - hmf.coefficients[1][1]))
        for a, b in zip(diffs, diffs[1:]):
            assert 5.0 <= a / b <= 15.0


def test_criterion_05_fixed_point_scheme():
    with _criterion(5, 60.0, "one-step convergence at sigma = 1, "
                             "contraction at sigma = 0.9, quadratic "
                             "nonlinearity shape"):
        K = 10.0
        radial, sphere = default_grids()
        # sigma = 1: the constant configuration is the exact fixed point
        const = MapField.constant(radial, sphere, [0.0, 0.0, 0.0, 1.0])
        state1 = picard_iterate(const, K, sigma=1.0)
        assert state1.converged
        assert len(state1.step_norms) <= 2
        assert state1.x_norm_V < 1e-10
        # sigma = 0.9: near-constant boundary contracts
        path = path_map(corotational_map(0.1), 0.9)
        U0 = caloric_corotational_field(path, radial, sphere)
        state = picard_iterate(U0, K, sigma=0.9)
        assert state.converged
        assert max(state.contraction_ratios) < 1.0
        assert state.static_residual <= 1e-5 * K
        # ||Q(U0, tW)||_X along a ray: affine-plus-quadratic fit R^2 >= 0.95
        W = MapField.from_function(
            radial, sphere,
            lambda p: 0.05 * np.exp(-(p**2).sum(axis=-1, keepdims=True) / 4.0)
            * np.ones(p.shape[:-1] + (4,)))
        ts = np.linspace(0.0, 1.0, 10)
        norms = np.array([x_norm(assemble_Q(
            U0, W.with_values(t * W.values), K)) for t in ts])
        A = np.vstack([np.ones_like(ts), ts, ts**2]).T
        coef, res, *_ = np.linalg.lstsq(A, norms, rcond=None)
        ss_tot = float(np.sum((norms - norms.mean()) ** 2))
        r2 = 1.0 - (float(res[0]) / ss_tot if res.size else 0.0)
        assert r2 >= 0.95


def test_criterion_06_energy_inequality_shape():
    with _criterion(6, 10.0, "localized energy approaches its boundary "
                             "value with monotone excess"):
        sol = equator_solution()
        rep = energy_inequality_report(sol, np.array([10.0, 0.0, 0.0]),
                                       times=(1.0, 0.1, 0.01, 0.001))
        assert rep.excess_monotone
        assert rep.within(0.10, at_index=-1)


def test_criterion_07_monotonicity_tables():
    with _criterion(7, 20.0, "monotone localized energies on the "
                             "reference solutions"):
        radii = np.linspace(0.05, 0.45, 9)
        solutions = [equator_solution(),
                     from_shooting(solve_corot(3, 0.2))]
        for sol in solutions:
            for rho in (5.0, 10.0, 20.0):
                table = monotonicity_table(
                    sol, (np.array([rho, 0.0, 0.0]), 1.0), radii, slack=0.05)
                assert table.max_phi_violation <= table.budget
                assert not table.phi_flagged


def test_criterion_08_pohozaev_consistency():
    with _criterion(8, 20.0, "inner-variation identity residual within the "
                             "discretization estimate"):
        sol = equator_solution()
        center = np.array([5.0, 0.0, 0.0])
        ladder = [(16, SphereGrid(8, 16)), (32, SphereGrid(16, 32)),
                  (64, SphereGrid(32, 64))]
        residuals = []
        for n_radial, sphere in ladder:
            rep = pohozaev_residual(sol, center, n_radial=n_radial,
                                    sphere=sphere)
            residuals.append(rep.residual)
        hs = [1.0 / n for n, _ in ladder]
        assert loglog_slope(hs, residuals) >= 1.8
        # Richardson estimate of the discretization error at the default
        # (middle) resolution; the shipped residual must sit within 10x
        estimate = abs(residuals[1] - residuals[2]) * 4.0 / 3.0
        assert residuals[1] <= 10.0 * estimate


def test_criterion_09_eps_regularity_and_decay_chain():
    with _criterion(9, 30.0, "far probes unflagged, scaled energy bounded, "
                             "decay-rate classification"):
        sol = equator_solution()
        probes = [np.array([r, 0.0, 0.0]) for r in (10.0, 15.0, 20.0)]
        scan = eps_regularity_scan(sol, probes, eps0=0.02, C=10.0)
        scaled = []
        for v in scan:
            assert not v.flagged
            assert v.verified
            scaled.append(v.sup_energy * float((v.center**2).sum()))
        # e_K ~ C / |x|^2 structure: the scaled sups stay in a narrow band
        assert max(scaled) <= 10.0
        assert max(scaled) <= 2.0 * min(scaled)
        # rate classification of the caloric-extension deviation ladders
        _, radii_w, devs_w, _ = _deviation_ladder("wedge")
        cls_w = rate_classify(radii_w, devs_w)
        assert cls_w.verdict == "lipschitz-rate"
        assert abs(cls_w.slope + 1.0) <= 0.15
        _, radii_s, devs_s, _ = _deviation_ladder("smooth")
        cls_s = rate_classify(radii_s, devs_s)
        assert cls_s.verdict in ("smooth-rate", "super-polynomial")


def test_criterion_10_caloric_extension():
    with _criterion(10, 60.0, "maximum principle, decay slopes, and "
                              "0-homogeneous self-similarity"):
        quad = CaloricQuadrature(20, 16, 32)
        base_pts = np.array([[3.0, 0.0, 0.0], [0.0, 0.0, 7.0],
                             [1.0, 1.0, 1.0]])
        for name, slope_target, tol in (("wedge", -1.0, 0.2),
                                        ("smooth", -2.0, 0.2)):
            u0, radii, devs, observed_max = _deviation_ladder(name)
            # maximum principle across every point the ladder touched
            assert observed_max <= 1.0 + 1e-6
            assert abs(loglog_slope(radii, devs) - slope_target) <= tol
            # 0-homogeneous data: u(x, t) = U(x / sqrt(t)) exactly
            ref = quad.extend(u0, base_pts, t=1.0)
            for t in (0.25, 1.0, 4.0):
                scaled = quad.extend(u0, np.sqrt(t) * base_pts, t=t)
                assert np.abs(scaled - ref).max() <= 1e-8


def test_criterion_11_deterministic_artifacts(tmp_path):
    with _criterion(11, 120.0, "two runs of the default command suite "
                               "produce byte-identical CSVs"):
        commands = [
            ["solve-corot", "--set", "run.h_inf=0.1"],
            ["solve-gl", "--set", "run.h_inf=0.1", "--set", "run.K=10"],
            ["asymptotics", "--set", "run.boundary=equator"],
            ["diagnose", "--set", "run.boundary=equator"],
            ["fixed-point", "--set", "run.sigma=0.9"],
        ]
        digests = []
        for run in ("a", "b"):
            per_run = {}
            for i, cmd in enumerate(commands):
                out = tmp_path / run / str(i)
                assert cli_main([*cmd, "--out", str(out)]) == 0
                for csv_path in sorted(out.glob("*.csv")):
                    per_run[f"{i}/{csv_path.name}"] = csv_path.read_bytes()
            digests.append(per_run)
        assert digests[0].keys() == digests[1].keys()
        assert len(digests[0]) >= 5
        for key in digests[0]:
            assert digests[0][key] == digests[1][key], f"{key} differs"
