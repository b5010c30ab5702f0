"""Validate reference atoms over a (K, L, level) sweep and show the moment
condition catching a bump with nonzero mean."""

import itertools

from varspace.atoms import make_atom, make_moment_violating_bump, validate_atom
from varspace.exponents import SampleBox
from varspace.geometry import build_lattice
from varspace.grid import Grid


def main():
    for n in (1, 2):
        bad = 0
        for K, L, level in itertools.product((0.5, 1.0, 1.7, 2.5), (0.0, 1.0, 2.3), range(6)):
            grid = Grid(n, 9 if n == 1 else 7, 2.0 ** (1 - level))
            cube = build_lattice(level, 0.0, 2.0, box=SampleBox.cube(-0.1, 0.1, n=n, samples=3)).cube((0,) * n)
            rep = validate_atom(make_atom(cube, K, L, grid=grid))
            bad += not rep.passed
        print(f"n={n}: {bad} invalid reference atoms")
    for level in range(2, 6):
        cube = build_lattice(level, 0.0, 2.0, box=SampleBox.cube(-0.1, 0.1, n=1, samples=3)).cube((0,))
        rep = validate_atom(make_moment_violating_bump(cube, 1.5, 1.0, grid=Grid(1, 9, 2.0 ** (1 - level))))
        print(f"bump level {level}: c_iii = {rep.c_iii:.3f}, failed = {rep.failed_condition}")


if __name__ == "__main__":
    main()
