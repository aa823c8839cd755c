"""Single-phase error sweeps (weighted leapfrog and Crank-Nicolson) over (epsilon, h).

    python3 scripts/single_phase_sweeps.py [--out out] [--jobs N]

Writes single_phase_lf.csv/.svg and single_phase_cn.csv/.svg and prints the error table.
"""

import argparse
from pathlib import Path

from oscidiff.config import load_config
from oscidiff.harness import emit_csv, emit_svg, run

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("single_phase_lf", "single_phase_cn"):
        cfg = load_config(CONFIGS / f"{name}.cfg")
        rep = run(cfg, jobs=args.jobs)
        emit_csv(rep, out / f"{name}.csv")
        emit_svg(rep, out / f"{name}.svg", title=name)
        print(f"# {name}")
        for r in rep.rows:
            print(f"{r.epsilon:9.3e} {r.h:6.4f} {r.tau:9.3e} {r.reference:7s} {r.linf_error:10.3e}")


if __name__ == "__main__":
    main()
