"""Experiment orchestration: one config in, artifact files and a verdict out.

Every run writes a top-level ``report.json`` embedding the fully resolved
config, the verdicts with the tolerances they used, and stage timings; data
files (CSV) are bit-reproducible for identical configs.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import (
    boundary_attainment,
    solve_duality_potential,
    unit_bump_source,
)
from .barriers import (
    BarrierParams,
    build_barrier,
    build_boundary_potential,
    build_miller_barrier,
    select_barrier_constants,
    select_localization_radius,
    verify_barrier_residual,
)
from .config import (
    ExperimentConfig,
    build_boundary,
    build_density,
    build_domain,
    build_grid_from,
    build_initial,
    build_nonlinearity,
    build_scheme,
)
from .errors import CollarError, ConfigError, ConfigParseError, RegimeError
from .geometry import Domain, build_grid
from .models import DensityModel, check_hypotheses, global_bound, h4_integral
from .solver import ApproxProblem, extract_limit_solution, solve_eps_eta

EXIT_PASS = 0
EXIT_VERDICT_FAIL = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3


def _pmap(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


class _Stage:
    """Wall-clock bookkeeping for the report; data files never see it."""

    def __init__(self):
        self.timings: dict[str, float] = {}

    def run(self, name, fn):
        t0 = time.perf_counter()
        out = fn()
        self.timings[name] = time.perf_counter() - t0
        return out


def _models(cfg: ExperimentConfig):
    domain = build_domain(cfg)
    grid = build_grid_from(cfg, domain)
    return {
        "domain": domain,
        "grid": grid,
        "rho": build_density(cfg, domain),
        "flux": build_nonlinearity(cfg),
        "phi": build_boundary(cfg, domain),
        "initial": build_initial(cfg, domain),
        "scheme": build_scheme(cfg),
    }


def _problem(cfg: ExperimentConfig, m: dict, **overrides) -> ApproxProblem:
    num = cfg.sections["numerics"]
    exp = cfg.sections["experiment"]
    base = dict(
        grid=m["grid"],
        rho=m["rho"],
        flux=m["flux"],
        phi=m["phi"],
        initial=m["initial"],
        eps=exp.get("eps", 0.0),
        eta=exp.get("eta", 0.0),
        eta_cap=cfg.eta_cap,
        horizon=cfg.t_final,
        dt=num["dt"],
    )
    base.update(overrides)
    return ApproxProblem(**base)


# ---------------------------------------------------------------------------
# Runners (one per experiment kind); each returns (verdict_ok, payload)
# ---------------------------------------------------------------------------


def _run_solve(cfg, m, out: Path, threads):
    num = cfg.sections["numerics"]
    problem = _problem(cfg, m)
    fieldobj = solve_eps_eta(problem, m["scheme"], store_stride=num.get("store_stride", 1))
    fieldobj.to_csv(out / "trajectory.csv")
    _write_json(out / "trajectory_meta.json", fieldobj.meta)
    return bool(fieldobj.meta["max_principle_ok"]), {"meta": fieldobj.meta}


def _run_family(cfg, m, out: Path, threads):
    exp = cfg.sections["experiment"]
    num = cfg.sections["numerics"]
    problem = _problem(cfg, m)
    finest, diag = extract_limit_solution(
        problem, exp["eps_list"], exp["eta_list"], m["scheme"],
        store_stride=num.get("store_stride", 1),
    )
    finest.to_csv(out / "limit_candidate.csv")
    _write_json(out / "family_diagnostics.json", diag.as_dict())
    ok = diag.converged or not exp.get("assert_convergence", True)
    return ok, {"diagnostics": diag.as_dict()}


def _barrier_ingredients(cfg, m):
    exp = cfg.sections["experiment"]
    domain: Domain = m["domain"]
    grid = m["grid"]
    flux = m["flux"]
    rho: DensityModel = m["rho"]
    phi = m["phi"]
    case = exp.get("barrier_case", "potential-timed")
    x0 = domain.lo if exp.get("anchor", "left") == "left" else domain.hi
    if domain.kind == "radial-ball":
        x0 = domain.hi
    timed = case.endswith("timed")
    t0 = exp.get("t0", cfg.t_final / 2.0) if timed else None
    sigma = exp.get("sigma", 0.1)
    eta = exp.get("eta", 0.0)

    if case.startswith("potential"):
        potential = build_boundary_potential(
            rho.majorant, domain.collar_cap, exp.get("curvature_margin", 2.0)
        )
        cap_space = domain.collar_cap
    else:
        radius = domain.collar_cap
        potential = build_miller_barrier(domain, x0, radius)
        cap_space = radius
    cap = min(cap_space, 0.49 * domain.width)
    if timed:
        cap = min(cap, t0)
    delta = select_localization_radius(
        case, phi, flux, (x0, t0), sigma, eta, cap,
        initial=m["initial"], domain=domain,
    )
    if case.startswith("potential"):
        pot_edge = float(potential.at_distance(min(delta, domain.collar_cap)))
    else:
        pot_edge = float(potential.at_offset(delta))

    K = global_bound(m["initial"].sup_norm(grid), phi.sup_norm(domain), cfg.eta_cap)
    phi_scale = phi.sup_norm(domain) if timed else abs(float(phi.phi(x0, 0.0)))
    params = BarrierParams(
        inf_rho=rho.inf_on(grid),
        sup_rho=rho.sup_on(grid) if rho.is_bounded else np.inf,
        alpha0=flux.alpha0,
        delta=delta,
        phi_scale=phi_scale,
        eta_cap=cfg.eta_cap,
        bound_K=K,
        dim=domain.dim,
        pot_edge=pot_edge,
    )
    return case, (x0, t0), sigma, eta, potential, params


def _run_barrier_certify(cfg, m, out: Path, threads):
    exp = cfg.sections["experiment"]
    num = cfg.sections["numerics"]
    case, anchor, sigma, eta, potential, params = _barrier_ingredients(cfg, m)
    sides = ["lower", "upper"] if exp.get("barrier_side", "both") == "both" else [
        exp["barrier_side"]
    ]
    safety = exp.get("safety", 1.05)
    certificates = []
    all_pass = True
    for side in sides:
        constants = select_barrier_constants(case, side, m["flux"], params, safety)
        barrier = build_barrier(
            case, side, m["domain"], anchor, sigma, eta, constants,
            potential, m["flux"], m["phi"], delta=params.delta, bound_K=params.bound_K,
        )
        report = verify_barrier_residual(barrier, m["grid"], m["rho"], m["flux"], num["dt"])
        all_pass &= report.verdict
        certificates.append(
            {
                "constants": constants.as_dict(),
                "delta": params.delta,
                "sigma": sigma,
                "eta": eta,
                "anchor": {"x0": anchor[0], "t0": anchor[1]},
                "window": list(barrier.t_window),
                "residual": report.as_dict(),
            }
        )
    _write_json(out / "barrier_certificates.json", {"case": case, "certificates": certificates})
    return all_pass, {"certificates": certificates}


def _run_duality(cfg, m, out: Path, threads):
    exp = cfg.sections["experiment"]
    grid = m["grid"]
    eps_values = exp.get("eps_list") or [exp.get("eps") or 4.0 * grid.h]
    source = unit_bump_source(grid, exp.get("source_center"), exp.get("source_width"))
    rows = []
    ok = True
    for eps in eps_values:
        pot = solve_duality_potential(grid, float(eps), source)
        interior = grid.steps_from_boundary > int(round(eps / grid.h))
        psi_pos = bool(np.all(pot.psi[interior] > 0.0))
        derivs_neg = bool(np.all(pot.normal_derivatives < 0.0))
        defect_ok = abs(pot.flux_sum - pot.source_integral) <= 1e-6 * pot.source_integral
        ok &= psi_pos and derivs_neg and defect_ok
        row = pot.as_dict()
        row.update({"psi_positive": psi_pos, "normal_derivatives_negative": derivs_neg,
                    "flux_identity_ok": bool(defect_ok)})
        rows.append(row)
    _write_json(out / "duality.json", {"levels": rows})
    return ok, {"levels": rows}


def _attainment_grid(cfg, m, eps: float):
    exp = cfg.sections["experiment"]
    domain: Domain = m["domain"]
    if not exp.get("scale_nodes_with_eps", True):
        return m["grid"]
    # Resolve each level with four cells across its collar so the probe
    # distance tracks the collar width.
    n = int(round(domain.width / (eps / 4.0))) + 1
    return build_grid(domain, max(n, 16))


def _solve_levels(cfg, m, eps_list, phi, threads):
    num = cfg.sections["numerics"]
    exp = cfg.sections["experiment"]

    def one(eps):
        grid = _attainment_grid(cfg, m, eps)
        problem = ApproxProblem(
            grid=grid, rho=m["rho"], flux=m["flux"], phi=phi, initial=m["initial"],
            eps=float(eps), eta=exp.get("eta", 0.0), eta_cap=cfg.eta_cap,
            horizon=cfg.t_final, dt=num["dt"],
        )
        return solve_eps_eta(problem, m["scheme"], store_stride=num.get("store_stride", 1))

    return _pmap(one, list(eps_list), threads)


def _run_attainment(cfg, m, out: Path, threads):
    exp = cfg.sections["experiment"]
    fields = _solve_levels(cfg, m, exp["eps_list"], m["phi"], threads)
    report = boundary_attainment(
        fields, m["phi"], cfg.tau, threshold=exp.get("threshold", 0.05)
    )
    _write_json(out / "attainment.json", report.as_dict())
    rows = np.array(report.csv_rows())
    np.savetxt(out / "attainment.csv", rows, delimiter=",", header="eps,sup_gap",
               comments="", fmt="%.17g")
    return report.attained, {"report": report.as_dict()}


def _probe_diffs(fields_a, fields_b, coords, tau):
    diffs = []
    for fa, fb in zip(fields_a, fields_b):
        idx = np.array([fa.grid.index_of(c) for c in coords])
        tmask = fa.times >= tau - 1e-12
        gap = np.abs(fa.values[idx][:, tmask] - fb.values[idx][:, tmask])
        diffs.append(float(np.nanmax(gap)))
    return diffs


def _run_dichotomy(cfg, m, out: Path, threads):
    exp = cfg.sections["experiment"]
    offset = exp.get("conflict_offset", 0.5)
    eps_list = exp["eps_list"]
    domain: Domain = m["domain"]
    threshold = exp.get("threshold", 0.05)

    coarse = _attainment_grid(cfg, m, eps_list[0])
    margin = int(round(eps_list[0] / coarse.h)) + 2
    coords = coarse.nodes[coarse.steps_from_boundary >= margin]
    if coords.size > 33:
        coords = coords[:: int(np.ceil(coords.size / 33))]

    from .models import BoundaryData

    rows = []
    for alpha in exp["alpha_list"]:
        rho = DensityModel.power_law(float(alpha), domain)
        verdict = h4_integral(rho.majorant, domain.collar_cap)
        m_alpha = dict(m, rho=rho)
        phi_a = m["phi"]
        # The conflicting run shifts the whole boundary trace by a constant.
        phi_b = BoundaryData.from_callable(
            lambda x, t, _p=phi_a: np.asarray(_p.phi(x, t)) + offset,
            horizon=phi_a.horizon,
            time_dependent=phi_a.time_dependent,
        )
        fields_a = _solve_levels(cfg, m_alpha, eps_list, phi_a, threads)
        fields_b = _solve_levels(cfg, m_alpha, eps_list, phi_b, threads)
        rep_a = boundary_attainment(fields_a, phi_a, cfg.tau, threshold=threshold)
        rep_b = boundary_attainment(fields_b, phi_b, cfg.tau, threshold=threshold)
        diffs = _probe_diffs(fields_a, fields_b, coords, cfg.tau)
        decreasing = all(b < a for a, b in zip(diffs[:-1], diffs[1:]))
        rows.append(
            {
                "alpha": float(alpha),
                "h4_finite": verdict.finite,
                "sups_first": rep_a.sups,
                "sups_second": rep_b.sups,
                "attained_first": rep_a.attained,
                "attained_second": rep_b.attained,
                "probe_diffs": diffs,
                "probe_diffs_decreasing": decreasing,
            }
        )
    _write_json(out / "dichotomy.json", {"eps_list": list(eps_list), "rows": rows})
    csv_rows = []
    for r in rows:
        for eps, d in zip(eps_list, r["probe_diffs"]):
            csv_rows.append((r["alpha"], eps, d))
    np.savetxt(out / "dichotomy.csv", np.array(csv_rows), delimiter=",",
               header="alpha,eps,probe_diff", comments="", fmt="%.17g")
    return True, {"rows": rows}


def _run_hypothesis(cfg, m, out: Path, threads):
    report = check_hypotheses(m["rho"], m["flux"], m["phi"], m["initial"], m["grid"])
    _write_json(out / "hypothesis.json", report.as_dict())
    return report.core_ok, {"hypothesis": report.as_dict()}


_RUNNERS = {
    "solve": _run_solve,
    "family": _run_family,
    "barrier-certify": _run_barrier_certify,
    "duality": _run_duality,
    "attainment": _run_attainment,
    "dichotomy-sweep": _run_dichotomy,
    "hypothesis-report": _run_hypothesis,
}


def run_experiment(cfg: ExperimentConfig, out_dir, threads: int = 1) -> int:
    """Execute one experiment, write its artifacts, and return the exit code."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stage = _Stage()
    report: dict = {"experiment": cfg.kind, "config": cfg.resolved()}
    try:
        m = stage.run("build_models", lambda: _models(cfg))
        hyp = stage.run(
            "hypotheses",
            lambda: check_hypotheses(m["rho"], m["flux"], m["phi"], m["initial"], m["grid"]),
        )
        report["hypothesis"] = hyp.as_dict()
        report["warnings"] = list(hyp.notes)
        runner = _RUNNERS[cfg.kind]
        ok, payload = stage.run(cfg.kind, lambda: runner(cfg, m, out, threads))
        report["verdict"] = "pass" if ok else "fail"
        report["payload"] = payload
        code = EXIT_PASS if ok else EXIT_VERDICT_FAIL
    except (ConfigParseError, ConfigError, RegimeError) as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        report["verdict"] = "error"
        code = EXIT_CONFIG_ERROR
    except CollarError as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        report["verdict"] = "error"
        code = EXIT_NUMERICAL_ERROR
    report["timings"] = stage.timings
    _write_json(out / "report.json", report)
    return code
