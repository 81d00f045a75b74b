"""Command-line surface: configuration, orchestration, artifact output.

Every command reads a flat key = value config, writes CSV artifacts plus a
JSON run summary (stable key order, atomic rename), and exits with the
fixed contract: 0 success, 2 config error, 3 solver error, 4 partial
sweep.  CSV output is deterministic: fixed iteration orders, no
time-seeded randomness, LF line endings, repr-exact floats.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import os
import pathlib
import time

import numpy as np

from . import asymptotics, diagnostics, fixedpoint, solutions, weighted
from .boundary import builtin_boundary
from .config import RunConfig
from .corotational import solve_corot, solve_gl_corot
from .errors import ConfigError, HmfxError, NotAttainedError, PartialResultError
from .fields import save_field_csv, save_profile_csv
from .grids import RadialGrid, SphereGrid

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_PARTIAL = 4


def _write_json(path: pathlib.Path, payload: dict) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                   encoding="utf-8")
    os.replace(tmp, path)


def _write_csv(path: pathlib.Path, header: list[str], rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v
                             for v in row])


# ---------------------------------------------------------------------------
# commands


def cmd_solve_corot(cfg: RunConfig, out: pathlib.Path) -> dict:
    n = cfg.get_int("run.n")
    h_inf = cfg.get_float("run.h_inf")
    r_max = cfg.get_float("grid.r_max")
    result = solve_corot(n, h_inf, r_max=r_max, tol=cfg.get_tolerance("tol.shoot"))
    save_profile_csv(result.profile, out / "profile.csv")
    return {
        "n": n, "h_inf_requested": h_inf, "h_inf_attained": result.h_inf,
        "center_slope": result.slope, "farfield_coefficient": result.farfield_coeff,
        "residual_sup": result.residual_sup, "artifacts": ["profile.csv"],
    }


def cmd_solve_gl(cfg: RunConfig, out: pathlib.Path) -> dict:
    n = cfg.get_int("run.n")
    K = cfg.get_float("run.K")
    h_inf = cfg.get_float("run.h_inf")
    profile, info = solve_gl_corot(
        n, K, np.sin(h_inf), np.cos(h_inf), r_max=cfg.get_float("grid.r_max"),
        tol=cfg.get_tolerance("tol.newton"))
    save_profile_csv(profile, out / "profile.csv")
    return {
        "n": n, "K": K, "h_inf": h_inf, "iterations": info.iterations,
        "residual_sup": info.residual_sup, "max_modulus": info.max_modulus,
        "artifacts": ["profile.csv"],
    }


def cmd_fixed_point(cfg: RunConfig, out: pathlib.Path) -> dict:
    sigma = cfg.get_float("run.sigma")
    K = cfg.get_float("run.K")
    u0 = builtin_boundary(cfg.get_str("run.boundary"), cfg.get_int("run.n"))
    radial = RadialGrid.graded(cfg.get_float("grid.fp_r_max"),
                               cfg.get_float("grid.fp_inner_spacing"))
    sphere = SphereGrid(cfg.get_int("grid.fp_n_theta"),
                        cfg.get_int("grid.fp_n_phi"))
    path = fixedpoint.path_map(u0, sigma)
    if path.is_corotational and path.m == 4:
        U0 = fixedpoint.caloric_corotational_field(path, radial, sphere)
    else:
        U0 = weighted.caloric_extension(path, radial, sphere, self_check=False)
    state = fixedpoint.picard_iterate(U0, K, sigma=sigma,
                                      tol=cfg.get_tolerance("tol.picard"))
    save_field_csv(state.V, out / "correction.csv")
    _write_csv(out / "iterations.csv", ["step", "step_norm", "contraction_ratio"],
               [(i, s, state.contraction_ratios[i - 1] if i >= 1 else "")
                for i, s in enumerate(state.step_norms)])
    decay = fixedpoint.verify_decay(state.V)
    return {
        "sigma": sigma, "K": K, "boundary": u0.name,
        "iterations": len(state.step_norms),
        "contraction_ratios": list(state.contraction_ratios),
        "x_norm": state.x_norm_V, "static_residual": state.static_residual,
        "barrier_ratio": state.barrier_ratio, "converged": state.converged,
        "sup_fV": decay.sup_fV, "sup_f32_gradV": decay.sup_f32_gradV,
        "value_slope": decay.value_slope, "gradient_slope": decay.gradient_slope,
        "artifacts": ["correction.csv", "iterations.csv"],
    }


def cmd_caloric(cfg: RunConfig, out: pathlib.Path) -> dict:
    u0 = builtin_boundary(cfg.get_str("run.boundary"), cfg.get_int("run.n"))
    radii = np.asarray(cfg.get_floats("caloric.radii"))
    times = cfg.get_floats("caloric.times")
    quad = weighted.CaloricQuadrature()
    sup_u0 = float(np.linalg.norm(u0.sphere_samples(SphereGrid(24, 48)),
                                  axis=-1).max())

    devs = asymptotics.sup_deviation(
        lambda pts: quad.extend(u0, pts, t=1.0), u0, radii)
    max_prin = 0.0
    for r in (0.0, 1.0, 5.0):
        pt = np.array([[0.0, 0.0, r]])
        max_prin = max(max_prin, float(
            np.linalg.norm(quad.extend(u0, pt, t=1.0), axis=-1).max()))
    # 0-homogeneity: the rescaled extension is time-independent
    base = quad.extend(u0, np.array([[3.0, 0.0, 0.0], [0.0, 0.0, 7.0]]), t=1.0)
    homo_err = 0.0
    for t in times:
        scaled = quad.extend(
            u0, np.sqrt(t) * np.array([[3.0, 0.0, 0.0], [0.0, 0.0, 7.0]]), t=t)
        homo_err = max(homo_err, float(np.abs(scaled - base).max()))
    cls = asymptotics.rate_classify(radii, devs)
    _write_csv(out / "deviation.csv", ["r", "sup_deviation"],
               list(zip(radii.tolist(), devs.tolist())))
    return {
        "boundary": u0.name, "smoothness": u0.smoothness,
        "max_principle_bound": sup_u0, "max_observed": max_prin,
        "max_principle_ok": max_prin <= sup_u0 + 1e-6,
        "decay_slope": cls.slope, "rate_verdict": cls.verdict,
        "homogeneity_error": homo_err, "times": times,
        "artifacts": ["deviation.csv"],
    }


def cmd_asymptotics(cfg: RunConfig, out: pathlib.Path) -> dict:
    u0 = builtin_boundary(cfg.get_str("run.boundary"), cfg.get_int("run.n"))
    k = cfg.get_int("run.k_order")
    flavor = cfg.get_str("run.flavor")
    if flavor == "hmf":
        series = asymptotics.hmf_coefficients(u0, k, n=cfg.get_int("run.n"))
    elif flavor == "gl":
        series = asymptotics.gl_coefficients(u0, cfg.get_float("run.K"), k,
                                             n=cfg.get_int("run.n"))
    else:
        raise ConfigError(f"unknown series flavor {flavor!r}")
    sups = series.sup_norms()
    floor = cfg.get_tolerance("tol.coefficient_floor")
    if series.is_equivariant:
        rows = [(i, p, q, series.ledger[i])
                for i, (p, q) in enumerate(series.coefficients)]
        _write_csv(out / "coefficients.csv", ["order", "p", "q", "ledger"], rows)
    else:
        rows = [(i, float(np.linalg.norm(np.asarray(u), axis=-1).max()),
                 float(np.abs(series.ledger[i]).max()))
                for i, u in enumerate(series.coefficients)]
        _write_csv(out / "coefficients.csv",
                   ["order", "sup_norm", "ledger_sup"], rows)
    return {
        "boundary": u0.name, "flavor": flavor, "order": k,
        "coefficient_sups": sups,
        "all_below_floor": bool(all(s < floor for s in sups)),
        "artifacts": ["coefficients.csv"],
    }


def _resolve_solution(cfg: RunConfig) -> solutions.SelfSimilarSolution:
    spec = cfg.get_str("run.boundary")
    u0 = builtin_boundary(spec, cfg.get_int("run.n"))
    if spec == "constant":
        return solutions.constant_solution()
    if not u0.is_corotational:
        raise ConfigError("diagnostics need corotational or constant data")
    if abs(u0.h_inf - np.pi / 2.0) < 1e-12:
        return solutions.equator_solution()
    result = solve_corot(3, u0.h_inf, r_max=cfg.get_float("grid.r_max"))
    return solutions.from_shooting(result)


def cmd_diagnose(cfg: RunConfig, out: pathlib.Path) -> dict:
    sol = _resolve_solution(cfg)
    probe_radii = cfg.get_floats("diag.probe_radii")
    mono_radii = np.asarray(cfg.get_floats("diag.mono_radii"))
    slack = cfg.get_tolerance("tol.slack")
    eps0 = cfg.get_tolerance("tol.eps0")
    bound_c = cfg.get_float("tol.C")
    verdicts = []
    rows = []
    for rho in probe_radii:
        x0 = np.array([rho, 0.0, 0.0])
        table = diagnostics.monotonicity_table(sol, (x0, 1.0), mono_radii,
                                               slack=slack)
        for R, phi, psi in zip(table.radii, table.phi_values, table.psi_values):
            rows.append((rho, float(R), float(phi), float(psi)))
        verdicts.append({"check": "phi-monotonicity", "probe": rho,
                         "value": table.max_phi_violation,
                         "tolerance": table.budget,
                         "pass": not table.phi_flagged})
    scan = diagnostics.eps_regularity_scan(
        sol, [np.array([r, 0.0, 0.0]) for r in probe_radii], eps0=eps0,
        C=bound_c)
    for v in scan:
        verdicts.append({"check": "eps-regularity",
                         "probe": float(np.linalg.norm(v.center)),
                         "value": v.psi_value, "tolerance": eps0,
                         "pass": (not v.flagged) and bool(v.verified)})
    boch = diagnostics.bochner_check(
        sol, np.array([[r, 0.0, 0.0] for r in probe_radii]), C=bound_c)
    verdicts.append({"check": "bochner-ratio", "value": boch.max_ratio,
                     "tolerance": bound_c, "pass": bool(boch.passed)})
    poho = diagnostics.pohozaev_residual(sol, np.array([probe_radii[0], 0.0, 0.0]))
    verdicts.append({"check": "pohozaev-residual", "value": poho.residual,
                     "tolerance": 1e-2, "pass": poho.residual <= 1e-2})
    _write_csv(out / "monotonicity.csv", ["probe", "R", "phi", "psi"], rows)
    _write_json(out / "verdicts.json", {"verdicts": verdicts})
    return {
        "solution": sol.name,
        "checks": len(verdicts),
        "all_pass": bool(all(v["pass"] for v in verdicts)),
        "artifacts": ["monotonicity.csv", "verdicts.json"],
    }


def cmd_sweep(cfg: RunConfig, out: pathlib.Path, jobs: int = 1) -> dict:
    child_cmd = cfg.get_str("run.sweep_command")
    if child_cmd not in _COMMANDS or child_cmd == "sweep":
        raise ConfigError(f"cannot sweep over command {child_cmd!r}")
    ladder = cfg.get_floats("run.K_ladder")
    children = []
    for K in ladder:
        values = dict(cfg.values)
        values["run.K"] = f"{K:g}"
        children.append((f"K={K:g}", RunConfig(values, cfg.tolerance_profile)))

    def run_child(tag_child):
        tag, child = tag_child
        child_out = out / tag.replace("=", "_")
        child_out.mkdir(parents=True, exist_ok=True)
        summary = _COMMANDS[child_cmd](child, child_out)
        summary["tag"] = tag
        _write_json(child_out / "summary.json",
                    {"status": "ok", "command": child_cmd, **summary})
        return tag, summary

    results, failures = {}, {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, jobs)) as ex:
        futures = {ex.submit(run_child, tc): tc[0] for tc in children}
        for fut in concurrent.futures.as_completed(futures):
            tag = futures[fut]
            try:
                results[tag] = fut.result()[1]
            except HmfxError as exc:
                failures[tag] = str(exc)
    manifest = {
        "command": child_cmd,
        "children": [{"tag": t, **results[t]} for t in sorted(results)],
        "failures": {t: failures[t] for t in sorted(failures)},
    }
    _write_json(out / "manifest.json", manifest)
    if failures:
        raise PartialResultError(
            f"{len(failures)} of {len(children)} sweep children failed",
            completed=manifest)
    return {"children": len(children), "artifacts": ["manifest.json"]}


_COMMANDS = {
    "solve-corot": cmd_solve_corot,
    "solve-gl": cmd_solve_gl,
    "fixed-point": cmd_fixed_point,
    "caloric": cmd_caloric,
    "asymptotics": cmd_asymptotics,
    "diagnose": cmd_diagnose,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hmfx",
        description="Expanding self-similar harmonic map flow laboratory")
    parser.add_argument("command", choices=sorted(_COMMANDS) + ["sweep"])
    parser.add_argument("--config", type=pathlib.Path, default=None)
    parser.add_argument("--out", type=pathlib.Path, default=None)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--tolerance-profile", default="default",
                        choices=["strict", "default", "loose"])
    parser.add_argument("--set", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="override a flat config key (section.key=value)")
    args = parser.parse_args(argv)

    out_root = args.out or pathlib.Path(os.environ.get("HMFX_OUT", "hmfx-out"))
    out = out_root
    started = time.time()
    try:
        if args.config is not None:
            cfg = RunConfig.load(args.config, args.tolerance_profile)
        else:
            cfg = RunConfig({}, args.tolerance_profile)
        if args.set:
            values = dict(cfg.values)
            for item in args.set:
                if "=" not in item:
                    raise ConfigError(f"bad --set override {item!r}")
                key, value = item.split("=", 1)
                values[key.strip()] = value.strip()
            cfg = RunConfig(values, args.tolerance_profile)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "sweep":
            summary = cmd_sweep(cfg, out, jobs=args.jobs)
        else:
            summary = _COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        _safe_summary(out, {"status": "config-error", "error": str(exc),
                            "command": args.command})
        print(f"config error: {exc}")
        return EXIT_CONFIG
    except PartialResultError as exc:
        _safe_summary(out, {"status": "partial", "error": str(exc),
                            "command": args.command})
        print(f"partial result: {exc}")
        return EXIT_PARTIAL
    except NotAttainedError as exc:
        _safe_summary(out, {"status": "solver-error", "error": str(exc),
                            "reachable_range": list(exc.reachable),
                            "command": args.command})
        print(f"solver error: {exc} (reachable range {exc.reachable})")
        return EXIT_SOLVER
    except HmfxError as exc:
        _safe_summary(out, {"status": "solver-error", "error": str(exc),
                            "command": args.command})
        print(f"solver error: {exc}")
        return EXIT_SOLVER
    payload = {
        "status": "ok",
        "command": args.command,
        "tolerance_profile": args.tolerance_profile,
        "config": cfg.echo(),
        "wall_clock_seconds": round(time.time() - started, 3),
        **summary,
    }
    _write_json(out / "summary.json", payload)
    return EXIT_OK


def _safe_summary(out: pathlib.Path, payload: dict) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "summary.json", payload)
    except OSError:
        pass


if __name__ == "__main__":
    raise SystemExit(main())
