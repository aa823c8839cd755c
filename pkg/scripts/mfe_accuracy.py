"""Distance between the split-step oracle and the modulated Fourier expansion, two phases.

    python3 scripts/mfe_accuracy.py [--eps 0.2 0.1 0.05 0.025] [--h 0.025]

The distance should shrink like eps^2.
"""

import argparse

import numpy as np

from oscidiff.core import PhaseSet, TorusGrid, gaussian, linf_error
from oscidiff.reference import reference_field


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.025])
    ap.add_argument("--h", type=float, default=0.025)
    args = ap.parse_args()
    g = TorusGrid.from_mesh_size(-6.0, 12.0, args.h)
    errs = []
    for eps in args.eps:
        phases = PhaseSet((1.0, -1.0), (gaussian(amplitude=0.5), gaussian(amplitude=0.5)))
        phases = phases.adjusted(eps, g)
        ref = {k: reference_field(phases, eps, 1.0, 0.5, [g], k)[g.M] for k in ("oracle", "mfe")}
        errs.append(linf_error(ref["oracle"], ref["mfe"]))
        print(f"eps {eps:8.4f}  |u_oracle - u_mfe|_inf {errs[-1]:.3e}")
    if len(errs) > 1:
        print(f"fitted order in eps: {np.polyfit(np.log(args.eps), np.log(errs), 1)[0]:.3f}")


if __name__ == "__main__":
    main()
