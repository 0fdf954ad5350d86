"""Batch runner: ``obslab <kind> --config <path> [--out <dir>] [--seed <n>] [--threads <n>]``.

Each run writes ``<out>/<kind>.json`` (and CSV tables where a curve exists).
Exit status: 0 when every built-in assertion passes, 1 on an assertion
failure, 2 on an invalid config.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import control, counterexample, floquet, geometry, gramian, lattice, quadrature

KINDS = ("geometry", "decompose", "obs-sweep", "hum", "counterexample", "gram-oracle")

REQUIRED = {
    "geometry": ("set",),
    "decompose": ("d", "cutoff"),
    "obs-sweep": ("T", "R_s", "cutoff", "n_theta"),
    "hum": ("theta", "T", "R_s", "cutoff", "time_steps"),
    "counterexample": ("T", "eps"),
    "gram-oracle": ("n_pairs",),
}

log = logging.getLogger("obslab")


class ConfigError(ValueError):
    def __init__(self, violations):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def validate(config) -> list[str]:
    """Violations of ``config``; empty iff ``run`` accepts it."""
    if not isinstance(config, dict):
        return ["config must be a JSON object"]
    out = []
    kind = config.get("kind")
    if kind is None:
        return ["missing field: kind"]
    if kind not in KINDS:
        return [f"kind must be one of {', '.join(KINDS)}"]
    for name in REQUIRED[kind]:
        if name not in config:
            out.append(f"missing field: {name}")
    if "seed" in config and not (_is_int(config["seed"]) and config["seed"] >= 0):
        out.append("seed must be a non-negative integer")

    def positive(name, label=None):
        if name in config and not (_is_num(config[name]) and config[name] > 0):
            out.append(f"{label or name} must be positive")

    def count(name, low=1):
        if name in config and not (_is_int(config[name]) and config[name] >= low):
            out.append(f"{name} must be an integer ≥ {low}")

    def dimension(name="d", allowed=(1, 2, 3)):
        if name in config and config[name] not in allowed:
            out.append(f"{name} must be one of {allowed}")

    if "R_s" in config:
        v = config["R_s"]
        if not (_is_num(v) and v > 0):
            out.append("R_s must be positive")
        elif v > math.pi:
            out.append("R_s exceeds torus half-width")
    for name in ("T", "eps", "rho", "L"):
        positive(name)
    positive("nu", "ν")
    positive("E")
    count("cutoff", 0)
    for name in ("n_theta", "time_steps", "n_pairs", "n_forms", "steps", "centers_per_axis",
                 "mc_samples", "direction_samples", "offset_samples", "line_resolution"):
        count(name)
    dimension()
    if "safety" in config and not (_is_num(config["safety"]) and config["safety"] >= 1):
        out.append("safety must be ≥ 1")
    if "R" in config:
        positive("R")

    if kind == "geometry" and "set" in config:
        try:
            geometry.from_config(config["set"])
        except (KeyError, TypeError, ValueError) as exc:
            out.append(f"set: {exc}")
    if kind == "hum":
        d = config.get("d", 1)
        th = np.atleast_1d(np.asarray(config.get("theta", 0.0), dtype=float))
        if th.size not in (1, d):
            out.append("theta must be a number or a list of length d")
        elif np.any(np.abs(th) > math.pi):
            out.append("theta must lie in [-π, π]")
        positive("tolerance")
    if kind == "counterexample":
        dimension(allowed=(1,))
        if "eps" in config and "T" in config and _is_num(config["eps"]) and _is_num(config["T"]):
            if config["eps"] >= config["T"]:
                out.append("eps must be smaller than T")
    if kind == "gram-oracle":
        if "m" in config:
            ms = config["m"] if isinstance(config["m"], list) else [config["m"]]
            if not ms or not all(_is_int(m) and 1 <= m <= 4 for m in ms):
                out.append("m must list ambient dimensions between 1 and 4")
        positive("R_max")
    return out


# --- per-kind runners ----------------------------------------------------------


def _run_geometry(cfg, rng, threads):
    S = geometry.from_config(cfg["set"])
    results, checks = {"set": S.to_config()}, {}
    if "rho" in cfg:
        th = geometry.thickness_check(S, cfg["rho"], cfg.get("centers_per_axis", 16),
                                      cfg.get("mc_samples", 4096), seed=cfg.get("seed", 0))
        results["thickness"] = th.to_dict()
        checks["thick_iff_positive_mass"] = th.is_thick == (th.gamma_mass > 0)
    if "L" in cfg:
        gc = geometry.gcc_check(S, cfg["L"], cfg.get("direction_samples", 32),
                                cfg.get("offset_samples", 32), cfg.get("line_resolution", 256))
        results["gcc"] = gc.to_dict()
        checks["gcc_iff_positive_line_mass"] = gc.satisfies_gcc == (gc.delta_line > 0)
    return results, checks, {}


def _thetas(cfg, rng, d):
    if "theta" in cfg:
        th = np.atleast_2d(np.asarray(cfg["theta"], dtype=float))
        return [np.resize(t, d) for t in th]
    n = cfg.get("n_theta", 1)
    return list(rng.uniform(-math.pi, math.pi, size=(n, d)))


def _run_decompose(cfg, rng, threads):
    d, cutoff = cfg["d"], cfg["cutoff"]
    c = lattice.ingham_c(d + 1, cfg.get("safety", 1.01))
    R = cfg.get("R", cfg.get("R_factor", 6.0) * c)
    rows, ok_part, ok_gap, ok_budget = [], True, True, True
    for th in _thetas(cfg, rng, d):
        lat = lattice.build_lifted(th, cutoff, d)
        dec = lattice.decompose(lat, R, c)
        seen = np.concatenate([s.indices for s in dec.subsets])
        ok_part &= bool(np.array_equal(np.sort(seen), np.arange(len(lat))))
        ok_gap &= all(s.gap <= lattice.gap_bruteforce(lat.points[s.indices]) for s in dec.subsets)
        ok_budget &= dec.budget <= R
        rows.append({"theta": list(map(float, th)), "n_subsets": dec.n_subsets,
                     "budget": dec.budget, "params": dec.to_dict()["params"]})
    results = {"c": c, "R": R, "runs": rows,
               "max_subsets": max(r["n_subsets"] for r in rows)}
    checks = {"partition": ok_part, "gaps_certified": ok_gap, "budget_within_R": ok_budget}
    return results, checks, {}


def _run_sweep(cfg, rng, threads):
    rep = control.theta_sweep(cfg["T"], cfg["R_s"], cfg["cutoff"], cfg["n_theta"],
                              d=cfg.get("d", 1), workers=threads)
    checks = {"all_positive": bool(np.all(np.asarray(rep.lambda_min) > 0))}
    return rep.to_dict(), checks, {"theta_sweep.csv": rep.to_csv}


def _run_hum(cfg, rng, threads):
    d = cfg.get("d", 1)
    theta = np.resize(np.atleast_1d(np.asarray(cfg["theta"], dtype=float)), d)
    if "initial" in cfg:
        u0 = floquet.ModalState.from_dict(cfg["initial"])
    else:
        u0 = floquet.ModalState.random(theta, cfg["cutoff"], rng)
    sol = control.hum_control(u0, cfg["T"], cfg["R_s"], cfg["time_steps"])
    res = sol.to_dict()
    timing = {"solve_seconds": sol.wall_time}
    tol = cfg.get("tolerance", 1e-8)
    checks = {
        "residual_within_tolerance": sol.residual <= tol,
        "cost_within_bound": sol.cost <= sol.cost_bound * (1 + 1e-3),
    }
    return res, checks, {}, timing


def _run_counterexample(cfg, rng, threads):
    T, eps = cfg["T"], cfg["eps"]
    base = geometry.PeriodicBalls(1, cfg.get("R_s", 1.0))
    if "nu" in cfg or "E" in cfg:
        E = cfg.get("E", counterexample.choose_E(T, eps))
        nu = cfg.get("nu", counterexample.choose_nu(T, eps, E, 1))
        u = counterexample.gaussian(nu, 0.0, 1)
        steps = cfg.get("steps", 4)
        start = 2 ** (steps - 1) * geometry.PERIOD
        rho = cfg.get("rho", counterexample.choose_clearing(u, base, T, eps, start=start))
        sched = counterexample.Schedule(T, eps, E, nu, rho, [rho / 2**j for j in range(steps - 1, -1, -1)])
        for r in sched.radii:
            sched.reports.append(counterexample.observability_quotient(
                u, geometry.Clearing(base, r, u.x0), T, E))
    else:
        sched = counterexample.run_schedule(T, eps, base, cfg.get("steps", 4))
    checks = {
        "strictly_decreasing": sched.decreasing(),
        "final_below_eps": sched.reports[-1].Q <= eps,
        "splitting_inequality": all(r.splitting_holds() for r in sched.reports),
    }
    return sched.to_dict(), checks, {"decay_curve.csv": sched.to_csv}


def _run_gram_oracle(cfg, rng, threads):
    ms = cfg.get("m", [2, 3])
    ms = ms if isinstance(ms, list) else [ms]
    r_max = cfg.get("R_max", 3.0)
    worst = 0.0
    for _ in range(cfg["n_pairs"]):
        m = int(rng.choice(ms))
        R = rng.uniform(0.2, r_max)
        k = rng.normal(size=m) * rng.uniform(0.0, 4.0)
        exact = gramian.ball_exp_integral(k, R)
        approx, _ = quadrature.ball_integral_adaptive(lambda z: np.cos(z @ k), R, m)
        worst = max(worst, abs(exact - approx))
    tol = cfg.get("tolerance", 1e-8)
    return {"max_abs_error": worst, "pairs": cfg["n_pairs"]}, {"analytic_matches_quadrature": worst <= tol}, {}


RUNNERS = {
    "geometry": _run_geometry,
    "decompose": _run_decompose,
    "obs-sweep": _run_sweep,
    "hum": _run_hum,
    "counterexample": _run_counterexample,
    "gram-oracle": _run_gram_oracle,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def run(config: dict, out_dir=None, threads: int | None = None) -> dict:
    """Validate, dispatch and (if ``out_dir`` is given) write the report."""
    problems = validate(config)
    if problems:
        raise ConfigError(problems)
    seed = config.get("seed", 0)
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    outcome = RUNNERS[config["kind"]](config, rng, threads)
    results, checks, tables = outcome[:3]
    timing = outcome[3] if len(outcome) > 3 else {}
    timing["total_seconds"] = time.perf_counter() - start
    report = {
        "kind": config["kind"],
        "config": config,
        "seed": seed,
        "version": __version__,
        "results": results,
        "assertions": {k: bool(v) for k, v in checks.items()},
        "passed": all(bool(v) for v in checks.values()),
        "timing": timing,
    }
    report = _jsonable(report)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{config['kind']}.json").write_text(json.dumps(report, indent=2, sort_keys=True))
        for name, writer in tables.items():
            writer(out / name)
    return report


def _threads(arg) -> int | None:
    if arg is not None:
        return arg
    env = os.environ.get("OBSLAB_THREADS")
    return int(env) if env and env.isdigit() and int(env) > 0 else None


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="obslab", description=__doc__.splitlines()[0])
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--config", required=True, help="JSON parameter block")
    parser.add_argument("--out", default="obslab-out", help="output directory")
    parser.add_argument("--seed", type=int, help="overrides the config seed")
    parser.add_argument("--threads", type=int, help="worker cap (default: $OBSLAB_THREADS)")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if not isinstance(config, dict):
        print("config error: config must be a JSON object", file=sys.stderr)
        return 2
    config = {**config, "kind": args.kind}
    if args.seed is not None:
        config["seed"] = args.seed
    try:
        report = run(config, args.out, _threads(args.threads))
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return 2
    for name, ok in report["assertions"].items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
