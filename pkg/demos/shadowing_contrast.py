"""Shadowing on an expanding map versus drift on a rotation.

Doubling-map pseudo-orbits are tracked by a true orbit within about twice
their error.  Rotation pseudo-orbits that drift in one direction are not
tracked by any true orbit once the drift exceeds epsilon.
"""
import numpy as np

from chainrec.shadowing_lab import (estimate_shadowing_modulus, generate_pseudo_orbit, inverse_branch_shadow,
                                    orbit_deviation, shadowing_search)
from chainrec.systems import builtin


def main():
    rng = np.random.default_rng(0)
    dbl = builtin("doubling")
    devs = []
    for seed in range(20):
        po = generate_pseudo_orbit(dbl, rng.random(), 0.01, 40, seed=seed)
        devs.append(orbit_deviation(dbl, inverse_branch_shadow(dbl, po), po))
    print(f"doubling, delta 0.01, length 40: worst inverse-branch deviation {max(devs):.4f}")

    rot = builtin("rotation")
    found = 0
    for seed in range(20):
        po = generate_pseudo_orbit(rot, rng.random(), 0.01, 200, seed=seed, kind="random_walk")
        found += shadowing_search(rot, po, 0.05, 14).found
    print(f"rotation, drifting walk, delta 0.01, length 200: shadowed {found}/20 at eps 0.05")

    est = estimate_shadowing_modulus(dbl, 0.1, trials=6, seed=0, length=8, search_depth=16)
    print(f"doubling modulus at eps 0.1: delta {est.delta} ({est.verdict}, empirical)")


if __name__ == "__main__":
    main()
