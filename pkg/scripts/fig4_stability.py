"""Direct-simulation stability of the resonant stationary states.

Probes the two ultimate asymmetric states and a Fano-family state, then
writes the verdicts and (optionally) the trajectories.
"""
import argparse
import json
import math
from pathlib import Path

from ptfano.lattice import LatticeConfig, probe_stability, write_trajectory_csv
from ptfano.model import DimerParams
from ptfano.scattering import Branch, solve_scattering, ultimate_asymmetric


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=float, default=2000.0)
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-4, -1e-4])
    ap.add_argument("--fano-pin", type=float, default=4.0)
    ap.add_argument("--outdir", type=Path, default=Path("fig4"))
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    p = DimerParams(E=0.1, gamma0=0.01, gamma2=1e-4, chi=0.0, V=0.2, C=1.0)
    config = LatticeConfig(horizon=args.horizon)
    _, (gain, loss) = ultimate_asymmetric(p)
    fano = next(s for s in solve_scattering(p, p.E, math.sqrt(args.fano_pin))
                if s.branch is Branch.FANO_SYMMETRIC)
    report = []
    for name, sol in (("ultimate_loss", loss), ("ultimate_gain", gain), ("fano", fano)):
        for eps in args.eps:
            v = probe_stability(p, config, sol, eps)
            tag = f"{name}_eps{eps:+.0e}"
            write_trajectory_csv(args.outdir / f"{tag}.csv", v.trajectory, sol.I)
            summary = {"state": name, "eps": eps, "Pin": sol.Pin, **v.summary()}
            report.append(summary)
            print(f"{tag:28s} {v.cls.value:10s} t_end={v.t_end:8.1f} "
                  f"asym={v.asymmetry:.3g} t={v.mean_transmissivity:.3g} returned={v.returned}")
    (args.outdir / "verdicts.json").write_text(json.dumps(report, indent=2) + "\n")


if __name__ == "__main__":
    main()
