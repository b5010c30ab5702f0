"""Interior-ratio minimum of the outward cusp versus the square under raster refinement.

The cusp's minimum keeps falling as pixels shrink while the square settles
near 1/4; at desk resolutions neither drops below the default floor.
"""

from varspace.geometry import DEFAULT_FLOOR, audit_sides, check_IR, outward_cusp, square


def main():
    print(f"floor {DEFAULT_FLOOR:g}")
    print(f"{'pixels':>7s} {'cusp c_IR':>10s} {'square c_IR':>12s}")
    for px in (256, 512, 1024):
        cusp, sq = outward_cusp(pixels=px), square(pixels=px)
        c1 = check_IR(cusp, audit_sides(cusp, 14))[1]
        c2 = check_IR(sq, audit_sides(sq, 14))[1]
        print(f"{px:7d} {c1:10.4f} {c2:12.4f}")


if __name__ == "__main__":
    main()
