"""Command line front-end.

Usage::

    polycycles <command> --config run.toml [--out DIR] [--jobs N] [--seedless]

Commands: saddles, returnmap, find-cycle, theorem-a, design-arc, tau-check.
Exit codes: 0 success (including FAIL verdicts), 2 configuration error,
3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence

from .asymptotics import (
    DEFAULT_TAU_GRID,
    TauSpec,
    design_arc,
    find_limit_cycle,
    find_reference_point,
    geometric_path,
    offline_arc,
    tau_conditions,
    verify_theorem_a,
    verify_theorem_b,
)
from .config import RunConfig, _get, _pair, fit_grid_from, load_config, tau_from
from .errors import ConfigError, NumericalError
from .models import as_model
from .returnmap import (
    fit_power_law,
    fit_return_time,
    fit_summary,
    log_grid,
    samples_to_csv,
)
from .saddletools import check_invariance, graphic_number, no_bifurcation_guard

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

SADDLE_COLUMNS = ("label", "chart", "a", "b", "unstable_eig", "stable_eig", "ratio")
CYCLE_COLUMNS = ("s_star", "period", "multiplier_log", "residual")
TAU_COLUMNS = ("alpha", "alpha_tau", "alpha2_dtau", "log_over_tau")


def _f(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    return repr(float(x))


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_f(v) for v in row])
    return buf.getvalue()


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


class _Output:
    def __init__(self, out: Path | None):
        self.out = out
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str) -> None:
        if self.out is None:
            sys.stdout.write(f"# {name}\n{text}")
        else:
            (self.out / name).write_text(text, encoding="utf-8")


def _mu_cols(cfg: RunConfig) -> tuple[str, ...]:
    return tuple(f"mu_{n}" for n in cfg.params)


def _require_skeleton(cfg: RunConfig):
    if cfg.skeleton is None:
        raise ConfigError("this command needs a [skeleton] block")
    return cfg.skeleton


def _model(cfg: RunConfig, jobs: int):
    if cfg.offline:
        return cfg.model
    return as_model(cfg.family, _require_skeleton(cfg), cfg.integrator, jobs)


# commands -------------------------------------------------------------------------------


def cmd_saddles(cfg: RunConfig, out: _Output, jobs: int) -> dict:
    if cfg.offline:
        raise ConfigError("saddles needs an integrable family, not an offline model")
    sk = _require_skeleton(cfg)
    g = graphic_number(cfg.family, cfg.mu, sk)
    rows = [
        (d.label, d.chart.value, d.location.a, d.location.b, d.unstable_eig, d.stable_eig, d.ratio)
        for d in g.saddles
    ]
    rows.append(("graphic_number", "", math.nan, math.nan, math.nan, math.nan, g.value))
    out.write("saddles.csv", _csv(SADDLE_COLUMNS, rows))
    adv = no_bifurcation_guard(g, float(cfg.block("saddles").get("threshold", 1e-3)))
    carriers = {c.carrier: check_invariance(cfg.family, cfg.mu, c.carrier) for c in sk.connections if c.carrier}
    summary = {"graphic_number": g.value, "factors": list(g.factors),
               "advisory": adv.message if adv else None, "carriers_invariant": carriers}
    out.write("summary.json", _json(summary))
    return summary


def cmd_returnmap(cfg: RunConfig, out: _Output, jobs: int) -> dict:
    model = _model(cfg, jobs)
    samples = model.samples(cfg.mu, cfg.fit_grid)
    out.write("samples.csv", samples_to_csv(samples))
    summary = fit_summary(fit_power_law(samples, cfg.fit_noise_floor), fit_return_time(samples))
    summary["n_failed"] = sum(1 for s in samples if not s.ok)
    out.write("summary.json", _json(summary))
    return summary


def cmd_find_cycle(cfg: RunConfig, out: _Output, jobs: int) -> dict:
    block = cfg.block("find_cycle")
    model = _model(cfg, jobs)
    bracket = _pair(block.get("bracket", [1e-6, 1e-3]), "[find_cycle] bracket")
    cyc = find_limit_cycle(model, cfg.mu, bracket=bracket)
    header = (*_mu_cols(cfg), *CYCLE_COLUMNS)
    out.write("cycle.csv", _csv(header, [(*cfg.mu.components, cyc.s_star, cyc.period, cyc.multiplier_log, cyc.residual)]))
    summary = {"s_star": cyc.s_star, "period": cyc.period, "multiplier_log": cyc.multiplier_log}
    out.write("summary.json", _json(summary))
    return summary


def cmd_theorem_a(cfg: RunConfig, out: _Output, jobs: int) -> dict:
    block = cfg.block("theorem_a")
    model = _model(cfg, jobs)
    if "reference" in block:
        mu_star = cfg.point(block["reference"])
    else:
        seg = block.get("reference_segment")
        if not seg or "start" not in seg or "end" not in seg:
            raise ConfigError("[theorem_a] needs reference = {...} or reference_segment = {start, end}")
        mu_star = find_reference_point(model, None, cfg.point(seg["start"]), cfg.point(seg["end"]))
    if "start" not in block:
        raise ConfigError("[theorem_a] needs start = {...}, the first path point")
    mu_start = cfg.point(block["start"], mu_star)
    ks = [int(k) for k in block.get("ks", [0, 1, 2, 3])]
    path = geometric_path(mu_star, mu_start, ks)
    fit_grid = fit_grid_from(block["fit"], "theorem_a.fit") if "fit" in block else cfg.fit_grid
    scan = block.get("scan_window")
    rep = verify_theorem_a(
        model, None, path, fit_grid=fit_grid, ref_mu=mu_star,
        scan_window=_pair(scan, "[theorem_a] scan_window") if scan is not None else None,
        scan_points=int(block.get("scan_points", 25)),
        fit_noise_floor=cfg.fit_noise_floor,
    )
    header = (*_mu_cols(cfg), "r", "A_hat", "T0_bar", "s_star", "period", "u_k", "v_k", "sign_changes", "status")
    rows = [(*p.mu.components, p.r, p.A_hat, p.T0_bar, p.s_star, p.period, p.u, p.v, p.sign_changes, p.status)
            for p in rep.points]
    out.write("theorem_a.csv", _csv(header, rows))
    variation = float(block.get("variation", 0.05))
    limit_tol = float(block.get("limit_tol", 0.10))
    summary = {
        "reference": dict(zip(cfg.params, mu_star.components)),
        "u_variation": rep.u_variation, "v_variation": rep.v_variation,
        "u_limit": rep.u_limit, "u_target": rep.u_target,
        "v_limit": rep.v_limit, "v_target": rep.v_target,
        "final_v_error": rep.final_v_error,
        "A_hat_ref": rep.ref_A_hat, "T0_bar_ref": rep.ref_T0_bar,
        "verdict": rep.verdict(variation, limit_tol),
    }
    out.write("summary.json", _json(summary))
    return summary


def cmd_tau_check(cfg: RunConfig, out: _Output, jobs: int) -> dict:
    block = cfg.block("tau_check") or cfg.block("design_arc")
    tau = tau_from(block, "tau_check")
    grid = _tau_grid(block)
    v = tau_conditions(tau, grid, float(block.get("threshold", 1e-2)))
    rows = list(zip(grid, v.values["alpha_tau"], v.values["alpha2_dtau"], v.values["log_over_tau"]))
    out.write("tau.csv", _csv(TAU_COLUMNS, rows))
    summary = {"tau": tau.description, "conditions": v.conditions, "verdict": v.verdict}
    out.write("summary.json", _json(summary))
    return summary


def _tau_grid(block) -> tuple[float, ...]:
    g = block.get("tau_grid")
    if g is None:
        return DEFAULT_TAU_GRID
    lo, hi = _pair((g.get("alpha_min"), g.get("alpha_max")), "tau_grid")
    n = int(g.get("n", 100))
    return tuple(log_grid(lo, hi, n))


def cmd_design_arc(cfg: RunConfig, out: _Output, jobs: int) -> dict:
    block = cfg.block("design_arc")
    tau = tau_from(block, "design_arc")
    tv = tau_conditions(tau, _tau_grid(block), float(block.get("threshold", 1e-2)))
    header = (*_mu_cols(cfg), "alpha", "h", "r", "A_hat", "s_star", "period", "tau", "ratio",
              "res_r", "res_A", "ansatz_error", "status")
    if not tv.passed:
        # the arc construction has no guarantee for this tau; nothing is integrated
        out.write("arc.csv", _csv(header, []))
        summary = {"tau": tau.description, "tau_conditions": tv.conditions, "tau_verdict": "FAIL", "verdict": "FAIL"}
        out.write("summary.json", _json(summary))
        return summary
    alphas = log_grid(float(block.get("alpha_min", 1e-4)), float(block.get("alpha_max", 1e-2)),
                      int(block.get("n", 9)))
    fit_grid = fit_grid_from(block["fit"], "design_arc.fit") if "fit" in block else cfg.fit_grid
    if cfg.offline and block.get("exact", False):
        arc = offline_arc(cfg.model, tau, alphas)
    else:
        model = _model(cfg, jobs)
        free = block.get("free", [cfg.params[0], cfg.params[-1]])
        arc = design_arc(model, None, cfg.mu, tau, alphas, free, fit_grid=fit_grid,
                         fit_noise_floor=cfg.fit_noise_floor)
    if cfg.offline:
        T0_ref = cfg.model.T0_bar
    else:
        T0_ref = fit_return_time(_model(cfg, jobs).samples(cfg.mu, fit_grid)).T0_bar
    rows = [(*a.mu.components, a.alpha, a.h, a.r, a.A_hat, a.s_star, a.period, a.tau, a.ratio,
             a.newton_residuals[0], a.newton_residuals[1], a.ansatz_error, a.status)
            if len(a.mu.components) == len(cfg.params) else
            (*([math.nan] * len(cfg.params)), a.alpha, a.h, a.r, a.A_hat, a.s_star, a.period, a.tau,
             a.ratio, a.newton_residuals[0], a.newton_residuals[1], a.ansatz_error, a.status)
            for a in arc]
    out.write("arc.csv", _csv(header, rows))
    rep = verify_theorem_b(arc, T0_ref)
    good = [a for a in arc if a.ok]
    summary = {
        "tau": tau.description, "tau_conditions": tv.conditions, "tau_verdict": tv.verdict,
        "ratios": rep.ratios, "last_decade_variation": rep.last_decade_variation,
        "limit_estimate": rep.limit_estimate, "reference": rep.reference,
        "max_newton_residual": max((max(a.newton_residuals) for a in good), default=math.nan),
        "max_ansatz_error": max((a.ansatz_error for a in good), default=math.nan),
        "n_failed": len(arc) - len(good),
        "verdict": rep.verdict(float(block.get("variation", 0.10))),
    }
    out.write("summary.json", _json(summary))
    return summary


COMMANDS = {
    "saddles": cmd_saddles,
    "returnmap": cmd_returnmap,
    "find-cycle": cmd_find_cycle,
    "theorem-a": cmd_theorem_a,
    "design-arc": cmd_design_arc,
    "tau-check": cmd_tau_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polycycles", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--out", help="output directory (default: print to stdout)")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for sampling")
    parser.add_argument("--seedless", action="store_true", help="accepted for compatibility; nothing is random")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        out = _Output(Path(args.out) if args.out else None)
        summary = COMMANDS[args.command](cfg, out, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if "verdict" in summary:
        print(f"verdict: {summary['verdict']}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
