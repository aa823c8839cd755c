"""Sweep execution and report emission for experiment configs."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from oscidiff.config import ExperimentConfig
from oscidiff.core import (
    ComplexField,
    PhaseSet,
    SchemeParams,
    TimeGrid,
    TorusGrid,
    carrier,
    linf_error,
    make_initial_data,
)
from oscidiff.multiphase import MultiphaseScheme, PhaseStructure
from oscidiff.reference import reference_field, resolve_reference_kind, standard_cn, standard_lf
from oscidiff.single_phase import run_wcn, run_wlf
from oscidiff.spectral import gamma_of_beta, stability_check, wiener_norm

CSV_HEADER = "epsilon,h,tau,scheme,reference,linf_error,wiener_error,runtime_s,theta,chi"


@dataclass(frozen=True)
class ErrorRow:
    epsilon: float
    h: float
    tau: float
    scheme: str
    reference: str
    linf_error: float
    wiener_error: float
    runtime_s: float
    theta: float
    chi: int

    @property
    def failed(self) -> bool:
        return self.reference.startswith("error:")


@dataclass
class ErrorReport:
    rows: list[ErrorRow] = field(default_factory=list)

    @property
    def n_failed(self) -> int:
        return sum(r.failed for r in self.rows)

    def by_h(self) -> dict[float, list[ErrorRow]]:
        out: dict[float, list[ErrorRow]] = {}
        for r in self.rows:
            out.setdefault(r.h, []).append(r)
        return out


def grid_for(cfg: ExperimentConfig, h: float) -> TorusGrid:
    return TorusGrid.from_mesh_size(cfg.x_left, cfg.length, h)


def adjusted_phases(cfg: ExperimentConfig, epsilon: float, grid: TorusGrid) -> PhaseSet:
    return cfg.phase_set().adjusted(epsilon, grid)


def gamma_for(cfg: ExperimentConfig, phases: PhaseSet, epsilon: float, grid: TorusGrid) -> float:
    """gamma entering the min(h/2, h^2/(2 eps gamma)) rule."""
    h = grid.h
    k0 = abs(phases.kappas[0])
    if cfg.gamma == "beta":
        return gamma_of_beta(k0 * h / epsilon)
    if cfg.gamma == "3beta":
        return gamma_of_beta(3 * k0 * h / epsilon)
    ps = PhaseStructure.build(phases, epsilon, grid)
    ks = list(ps.kappas) + list(ps.kappa_nu)
    return max(gamma_of_beta(k * h / epsilon) for k in ks)


def resolve_tau(cfg: ExperimentConfig, epsilon: float, grid: TorusGrid,
                phases: PhaseSet | None = None) -> TimeGrid:
    """Uniform time grid on [0, T] whose step is the rule's tau (rounded down to divide T)."""
    h = grid.h
    if cfg.tau_rule == "fixed":
        tau = cfg.tau
    elif cfg.tau_rule == "h/2":
        tau = h / 2
    else:
        phases = phases or adjusted_phases(cfg, epsilon, grid)
        tau = min(h / 2, h * h / (2 * epsilon * gamma_for(cfg, phases, epsilon, grid)))
    return TimeGrid.from_step(cfg.T, tau)


def closed_form(phases: PhaseSet, epsilon: float, lam: float, t: float, grid: TorusGrid) -> ComplexField:
    """Exact solution for one phase with constant profile c: c e^{-i lam |c|^2 t} e^{i(kx - wt)/eps}."""
    if len(phases) != 1:
        raise ValueError("closed-form reference needs a single phase")
    x = grid.nodes
    a0 = np.asarray(phases.profiles[0](x), dtype=complex)
    if np.ptp(np.abs(a0)) > 0 or np.ptp(a0.real) > 0 or np.ptp(a0.imag) > 0:
        raise ValueError("closed-form reference needs a constant profile")
    c = a0[0]
    k = phases.kappas[0]
    return ComplexField(grid, c * np.exp(-1j * lam * abs(c) ** 2 * t)
                        * carrier(grid, k, 0.5 * k * k, epsilon, t))


def _solve(cfg: ExperimentConfig, phases: PhaseSet, epsilon: float, grid: TorusGrid,
           tg: TimeGrid) -> tuple[ComplexField, float, int]:
    """Numerical solution at T, stability number and chi for one cell."""
    s = cfg.scheme
    tau = tg.tau
    if s in ("wlf", "wcn"):
        p = SchemeParams(epsilon, cfg.lam, phases.kappas[0], tau, grid.h)
        theta = stability_check(p).theta
        u0 = make_initial_data(phases, epsilon, grid)
        u = run_wlf(u0, p, tg.N) if s == "wlf" else run_wcn(u0, p, tg.N)
        return u, theta, 0
    if s in ("standard_lf", "standard_cn"):
        p = SchemeParams(epsilon, cfg.lam, 0.0, tau, grid.h)
        theta = stability_check(p).theta
        u0 = make_initial_data(phases, epsilon, grid)
        fn = standard_lf if s == "standard_lf" else standard_cn
        return fn(u0, epsilon, cfg.lam, tau, tg.N), theta, 0
    if s.startswith("two_phase_case"):
        case, method = "case" + s[-1], "lf"
    else:
        case, method = "extended", s.rsplit("_", 1)[1]
    scheme = MultiphaseScheme(phases, grid, epsilon, cfg.lam, tau, case=case, method=method,
                              c_chi=cfg.c_chi, enforce_stability=cfg.enforce_stability)
    return scheme.run(tg.N), float(np.max(scheme.theta)), scheme.chi


def run_epsilon(cfg: ExperimentConfig, epsilon: float, timing: bool = True) -> list[ErrorRow]:
    """All h for one epsilon; the reference is shared between them."""
    grids = [grid_for(cfg, h) for h in cfg.hs]
    rows = []
    try:
        phases = adjusted_phases(cfg, epsilon, grids[0])
        if cfg.reference == "closed_form":
            refs = {g.M: closed_form(phases, epsilon, cfg.lam, cfg.T, g) for g in grids}
            ref_name = "closed_form"
        else:
            ref_name = resolve_reference_kind(phases, epsilon, grids, cfg.reference)
            refs = reference_field(phases, epsilon, cfg.lam, cfg.T, grids, ref_name)
    except Exception as exc:  # noqa: BLE001 - recorded per cell
        tag = f"error:{type(exc).__name__}"
        return [ErrorRow(epsilon, g.h, math.nan, cfg.scheme, tag, math.nan, math.nan, 0.0,
                         math.nan, 0) for g in grids]
    for g in grids:
        t0 = time.perf_counter()
        try:
            tg = resolve_tau(cfg, epsilon, g, phases)
            u, theta, chi = _solve(cfg, phases, epsilon, g, tg)
            err = linf_error(u, refs[g.M])
            werr = wiener_norm(u.values - refs[g.M].values)
            dt = time.perf_counter() - t0 if timing else 0.0
            rows.append(ErrorRow(epsilon, g.h, tg.tau, cfg.scheme, ref_name, err, werr, dt, theta, chi))
        except Exception as exc:  # noqa: BLE001 - recorded per cell
            rows.append(ErrorRow(epsilon, g.h, math.nan, cfg.scheme, f"error:{type(exc).__name__}",
                                 math.nan, math.nan, 0.0, math.nan, 0))
    return rows


def _run_epsilon_job(args):
    cfg, eps, timing = args
    return run_epsilon(cfg, eps, timing)


def run(cfg: ExperimentConfig, jobs: int = 1, timing: bool = True) -> ErrorReport:
    """Every (epsilon, h) cell of the sweep; rows ordered by (epsilon, h) as configured."""
    tasks = [(cfg, e, timing) for e in cfg.epsilons]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_epsilon_job, tasks))
    else:
        chunks = [_run_epsilon_job(t) for t in tasks]
    return ErrorReport([r for chunk in chunks for r in chunk])


# ---------------------------------------------------------------------------
# emission


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_text(report: ErrorReport) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in report.rows:
        buf.write(",".join(_fmt(getattr(r, k)) for k in CSV_HEADER.split(",")) + "\n")
    return buf.getvalue()


def emit_csv(report: ErrorReport, path: str | Path) -> None:
    Path(path).write_text(csv_text(report))


def read_csv(path: str | Path) -> ErrorReport:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        rows = [ErrorRow(float(d["epsilon"]), float(d["h"]), float(d["tau"]), d["scheme"],
                         d["reference"], float(d["linf_error"]), float(d["wiener_error"]),
                         float(d["runtime_s"]), float(d["theta"]), int(d["chi"]))
                for d in reader]
    return ErrorReport(rows)


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def svg_text(report: ErrorReport, title: str = "") -> str:
    """Log-log plot of error against epsilon, one polyline per h."""
    W, H, pad = 640, 440, 70
    groups = {h: [r for r in rows if not r.failed and r.linf_error > 0]
              for h, rows in sorted(report.by_h().items())}
    pts = [(r.epsilon, r.linf_error) for rows in groups.values() for r in rows]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}">', '<rect width="100%" height="100%" fill="white"/>']
    if pts:
        lx = np.log10([p[0] for p in pts])
        ly = np.log10([p[1] for p in pts])
        x0, x1 = math.floor(lx.min()), math.ceil(lx.max())
        y0, y1 = math.floor(ly.min()), math.ceil(ly.max())
        x1, y1 = max(x1, x0 + 1), max(y1, y0 + 1)
    else:
        x0, x1, y0, y1 = -4, -1, -4, -1

    def X(v):
        return pad + (math.log10(v) - x0) / (x1 - x0) * (W - 2 * pad)

    def Y(v):
        return H - pad - (math.log10(v) - y0) / (y1 - y0) * (H - 2 * pad)

    for d in range(x0, x1 + 1):
        x = X(10.0**d)
        out.append(f'<line x1="{x:.2f}" y1="{pad}" x2="{x:.2f}" y2="{H - pad}" stroke="#ddd"/>')
        out.append(f'<text x="{x:.2f}" y="{H - pad + 18}" font-size="12" '
                   f'text-anchor="middle">1e{d}</text>')
    for d in range(y0, y1 + 1):
        y = Y(10.0**d)
        out.append(f'<line x1="{pad}" y1="{y:.2f}" x2="{W - pad}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{pad - 6}" y="{y + 4:.2f}" font-size="12" '
                   f'text-anchor="end">1e{d}</text>')
    out.append(f'<rect x="{pad}" y="{pad}" width="{W - 2 * pad}" height="{H - 2 * pad}" '
               f'fill="none" stroke="black"/>')
    out.append(f'<text x="{W / 2}" y="{H - 20}" font-size="14" text-anchor="middle">epsilon</text>')
    out.append(f'<text x="18" y="{H / 2}" font-size="14" text-anchor="middle" '
               f'transform="rotate(-90 18 {H / 2})">max-norm error</text>')
    if title:
        out.append(f'<text x="{W / 2}" y="30" font-size="15" text-anchor="middle">{title}</text>')
    for i, (h, rows) in enumerate(groups.items()):
        rows = sorted(rows, key=lambda r: r.epsilon)
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{X(r.epsilon):.2f},{Y(r.linf_error):.2f}" for r in rows)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" '
                   f'data-h="{h!r}" points="{coords}"/>')
        out.append(f'<text x="{W - pad - 8}" y="{pad + 18 * (i + 1)}" font-size="12" '
                   f'text-anchor="end" fill="{color}">h = {h:g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(report: ErrorReport, path: str | Path, title: str = "") -> None:
    Path(path).write_text(svg_text(report, title))
