"""Probe traces for two opposite releases at several medium reaction rates.

Type A is released at 0 and type B at 6e-5 s, both at the origin, with the
receiver at 0.21 um. The difference rho_A - rho_B should not depend on zeta.
"""
import argparse
from pathlib import Path

import numpy as np

from tsmc.reaction_fdm import ZETA_PER_NM, Probe, ReactionParams, green_superposition, simulate

D = 2.2e-9
R = 2.1e-7
SCHEDULE = [(0.0, "A", 0.0, 3e6), (6e-5, "B", 0.0, 3e6)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--zetas", default="0,1,10,100", help="per (molecule/nm) per second")
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()
    Path(args.outdir).mkdir(parents=True, exist_ok=True)
    probe = Probe(R, 1e-8)
    times = np.linspace(0, 1.2e-4, 121)
    exact = green_superposition(SCHEDULE, D, times, R)
    for z in (float(v) for v in args.zetas.split(",")):
        tr = simulate(SCHEDULE, ReactionParams(D, D, z * ZETA_PER_NM), 1.2e-4, probe,
                      sample_times=times)
        tr.to_csv(Path(args.outdir) / f"trace_zeta{z:g}.csv")
        dev = np.max(np.abs(tr.diff - exact)) / np.max(np.abs(exact))
        print(f"zeta={z:g}: max deviation from Green superposition {dev:.3g}")


if __name__ == "__main__":
    main()
