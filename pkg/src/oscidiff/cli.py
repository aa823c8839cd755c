"""Command-line entry point: sweeps, stability and resonance reports, defect tables."""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from oscidiff.config import ConfigError, ExperimentConfig, load_config
from oscidiff.core import SchemeParams, adjust_wavenumber
from oscidiff.harness import emit_csv, emit_svg, grid_for, resolve_tau, run
from oscidiff.resonance import SaturationError, saturate
from oscidiff.single_phase import compute_defect
from oscidiff.spectral import analyze_modes, stability_check, wiener_norm

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


def _num(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# ---------------------------------------------------------------------------
# stability


def stability_rows(cfg: ExperimentConfig) -> list[tuple]:
    """Per-mode linear leapfrog data for every (epsilon, h, kappa) of the config."""
    rows = []
    for eps in cfg.epsilons:
        for h in cfg.hs:
            g = grid_for(cfg, h)
            phases = cfg.phase_set().adjusted(eps, g)
            tau = resolve_tau(cfg, eps, g, phases).tau
            for kappa in phases.kappas:
                p = SchemeParams(eps, cfg.lam, kappa, tau, g.h)
                theta = stability_check(p).theta
                for m in sorted(analyze_modes(p, g), key=lambda m: m.k):
                    rows.append((eps, g.h, tau, kappa, theta, m.k, m.gamma_k, m.mu_k,
                                 abs(m.lambda_plus), abs(m.lambda_minus), m.condition))
    return rows


STABILITY_HEADER = "epsilon,h,tau,kappa,theta,k,gamma_k,mu_k,abs_lambda_plus,abs_lambda_minus,cond"


def stability_csv(cfg: ExperimentConfig) -> str:
    lines = [STABILITY_HEADER] + [",".join(_num(v) for v in r) for r in stability_rows(cfg)]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# resonance


def parse_kappas(text: str, dim: int = 1) -> list:
    """'1,-1' -> [1, -1]; with dim = 2, '1,0,0,1' -> [(1, 0), (0, 1)]. Entries are exact rationals."""
    try:
        vals = [Fraction(s.strip()) for s in text.split(",") if s.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad wave-number list {text!r}") from exc
    if dim < 1 or not vals or len(vals) % dim:
        raise ConfigError(f"need a nonempty multiple of {dim} wave-vector components")
    if dim == 1:
        return vals
    return [tuple(vals[i:i + dim]) for i in range(0, len(vals), dim)]


def resonance_report(kappas: list) -> dict:
    rs = saturate(kappas)
    om = rs.omegas
    K = [{"index": i, "kappa": [_num(c) for c in rs.K[i]], "omega": _num(om[i]),
          "input": i < rs.n_inputs} for i in range(rs.R)]
    N = [{"nu": list(t.nu), "kappa": [_num(c) for c in t.kappa], "omega": _num(t.omega),
          "omega_star": _num(t.omega_star), "delta": _num(t.delta)} for t in rs.N]
    return {"K": K, "N": N, "k_star": rs.k_star}


RESONANCE_HEADER = "kind,index,kappa,omega,omega_star,delta,nu"


def resonance_csv(report: dict) -> str:
    out = [RESONANCE_HEADER]
    for row in report["K"]:
        out.append(f"K,{row['index']},{';'.join(row['kappa'])},{row['omega']},,,")
    for i, row in enumerate(report["N"]):
        out.append(f"N,{i},{';'.join(row['kappa'])},{row['omega']},{row['omega_star']},"
                   f"{row['delta']},{';'.join(map(str, row['nu']))}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# defect


def defect_table(cfg: ExperimentConfig) -> list[dict]:
    """Leapfrog defect of the constant-profile solution under simultaneous (tau, h) refinement.

    The h list of the config gives the levels; tau follows the config's rule.
    Orders are in the step size sqrt(tau^2 + h^2), so a defect of size
    eps (tau^2 + h^2) shows order 2.
    """
    if len(cfg.kappas) != 1 or cfg.profiles[0].kind != "constant":
        raise ConfigError("defect needs exactly one phase with a constant profile")
    c = cfg.profiles[0].c
    rows = []
    for eps in cfg.epsilons:
        prev = None
        for h in sorted(cfg.hs, reverse=True):
            g = grid_for(cfg, h)
            kappa = adjust_wavenumber(cfg.kappas[0], eps, g)
            tau = resolve_tau(cfg, eps, g, cfg.phase_set().adjusted(eps, g)).tau
            p = SchemeParams(eps, cfg.lam, kappa, tau, g.h)

            def a(t, x):
                return np.full(np.shape(x), c * np.exp(-1j * cfg.lam * abs(c) ** 2 * t))

            d = compute_defect(a, p, 0.5 * cfg.T, g)
            dm, dw = float(np.max(np.abs(d.values))), wiener_norm(d)
            size = tau * tau + g.h * g.h
            row = {"epsilon": eps, "h": g.h, "tau": tau, "linf_defect": dm, "wiener_defect": dw,
                   "linf_over_eps": dm / eps, "order_linf": np.nan, "order_wiener": np.nan}
            if prev is not None:
                r = 0.5 * np.log(prev["size"] / size)
                row["order_linf"] = np.log(prev["dm"] / dm) / r
                row["order_wiener"] = np.log(prev["dw"] / dw) / r
            prev = {"size": size, "dm": dm, "dw": dw}
            rows.append(row)
    return rows


DEFECT_HEADER = "epsilon,h,tau,linf_defect,wiener_defect,linf_over_eps,order_linf,order_wiener"


def defect_csv(rows: list[dict]) -> str:
    keys = DEFECT_HEADER.split(",")
    return "\n".join([DEFECT_HEADER] + [",".join(_num(r[k]) for k in keys) for r in rows]) + "\n"


def fitted_order(rows: list[dict], key: str = "linf_defect") -> float:
    """Least-squares slope of log(defect) against log sqrt(tau^2 + h^2), per epsilon; minimum over epsilon."""
    out = []
    for eps in sorted({r["epsilon"] for r in rows}):
        sub = [r for r in rows if r["epsilon"] == eps]
        if len(sub) < 2:
            continue
        x = 0.5 * np.log([r["tau"] ** 2 + r["h"] ** 2 for r in sub])
        y = np.log([r[key] for r in sub])
        out.append(np.polyfit(x, y, 1)[0])
    return float(min(out)) if out else float("nan")


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oscidiff", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="error sweep over (epsilon, h); writes CSV and SVG")
    r.add_argument("--config", required=True)
    r.add_argument("--out", help="output directory (default: the config's [output] dir)")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--no-timing", action="store_true", help="write 0.0 in the runtime column")

    s = sub.add_parser("stability", help="per-mode amplification data as CSV")
    s.add_argument("--config", required=True)

    z = sub.add_parser("resonance", help="saturated wave-vector set and nonresonant triples")
    z.add_argument("--kappas", required=True, help="comma list, e.g. 1,-1")
    z.add_argument("--dim", type=int, default=1)
    z.add_argument("--json", action="store_true", help="emit JSON instead of CSV")

    d = sub.add_parser("defect", help="(tau, h)-halving table of the leapfrog defect")
    d.add_argument("--config", required=True)
    return ap


def main(argv: list[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        # usage errors count as configuration errors; --help exits cleanly
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        return _dispatch(args, stdout)
    except BrokenPipeError:
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK


def _dispatch(args, stdout) -> int:
    try:
        if args.command == "resonance":
            try:
                rep = resonance_report(parse_kappas(args.kappas, args.dim))
            except (SaturationError, ValueError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_PARTIAL
            stdout.write(json.dumps(rep, indent=2) + "\n" if args.json else resonance_csv(rep))
            return EXIT_OK
        cfg = load_config(args.config)
        if args.command == "stability":
            stdout.write(stability_csv(cfg))
            return EXIT_OK
        if args.command == "defect":
            rows = defect_table(cfg)
            stdout.write(defect_csv(rows))
            print(f"fitted order: linf {fitted_order(rows):.3f}, "
                  f"wiener {fitted_order(rows, 'wiener_defect'):.3f}", file=sys.stderr)
            return EXIT_OK
        report = run(cfg, jobs=max(1, args.jobs), timing=not args.no_timing)
        out = Path(args.out or cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        emit_csv(report, out / f"{cfg.name}.csv")
        emit_svg(report, out / f"{cfg.name}.svg", title=f"{cfg.name} ({cfg.scheme})")
        print(f"wrote {out / cfg.name}.csv and .svg: {len(report.rows)} rows, "
              f"{report.n_failed} failed", file=sys.stderr)
        return EXIT_PARTIAL if report.n_failed else EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
