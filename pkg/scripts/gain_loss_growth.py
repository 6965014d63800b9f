"""Growth rate of the linear gain/loss dimer on the chain versus gamma0.

Compares the exponent fitted from an undriven lattice run with
sqrt(gamma0^2 + g^2) - g, where g is the chain-induced damping at omega = E.
"""
import argparse
import math

import numpy as np

from ptfano.lattice import LatticeConfig, integrate, zero_state
from ptfano.model import DimerParams
from ptfano.scattering import radiative_coupling


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma0", type=float, nargs="+", default=[0.001, 0.005, 0.01, 0.02])
    ap.add_argument("--duration", type=float, default=3000.0)
    args = ap.parse_args()

    config = LatticeConfig()
    for g0 in args.gamma0:
        p = DimerParams(E=0.1, gamma0=g0, gamma2=0.0, chi=0.0, V=0.2)
        s = zero_state(config)
        s.psiA = 1e-3
        tr = integrate(s, config, p, None, args.duration)
        late = tr.t > args.duration / 2
        amp = 0.5 * np.log(np.abs(tr.psiA[late]) ** 2 + np.abs(tr.psiB[late]) ** 2)
        rate = np.polyfit(tr.t[late], amp, 1)[0]
        g = radiative_coupling(p, p.E)
        pred = math.sqrt(g0 ** 2 + g ** 2) - g
        print(f"gamma0={g0:<7g} fitted={rate:.6e} predicted={pred:.6e} e-folding time={1 / pred:.0f}")


if __name__ == "__main__":
    main()
