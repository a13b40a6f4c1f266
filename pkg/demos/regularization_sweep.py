"""Vanishing artificial viscosity and artificial pressure.

The solver carries two regularizations: a density diffusion ``eps lap rho``
and an extra pressure ``delta rho^beta``. Taking them to zero along a
ladder of values should make the final fields settle, with each rung
closer to its neighbour and to the unregularized run. This script prints
that ladder for both parameters.
"""

import argparse
import os
from pathlib import Path

from qflow import load_config, sweep

HERE = Path(__file__).resolve().parent


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=HERE.parent / "configs" / "density_bump.json")
    ap.add_argument("--t-end", type=float, default=0.05)
    ap.add_argument("--values", default="1e-2,1e-3,1e-4")
    args = ap.parse_args(argv)
    os.environ.setdefault("QFLOW_THREADS", "0")  # one process per rung

    values = [float(v) for v in args.values.split(",")]
    for param, extra in (("eps", {}), ("delta", {"beta": 4.0})):
        cfg = load_config(args.config).with_params(**extra)
        cfg.t_end = args.t_end
        print(f"\n{param} ladder (t = {cfg.t_end})")
        print(f"{'value':>10} {'|f - f_prev|':>14} {'|f - f_0|':>12}")
        for row in sweep(cfg, param, values):
            print(f"{row['value']:10.1e} {row['dist_prev']:14.3e} {row['dist_zero']:12.3e}")


if __name__ == "__main__":
    main()
