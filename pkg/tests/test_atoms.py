import math

import numpy as np
import pytest

from varspace.atoms import (AtomCandidate, AtomKind, atom_profile, build_dictionary, derivative,
                            holder_decompose, holder_norm, holder_norm_values, make_atom,
                            make_moment_violating_bump, masked_derivative, multi_indices, validate_atom)
from varspace.errors import DataError, InvalidInputError, PreconditionError
from varspace.exponents import SampleBox
from varspace.geometry import CubeKind, build_lattice, square
from varspace.grid import Grid, GridFunction


@pytest.mark.parametrize("s,k,sig", [(0.5, 0, 0.5), (1.0, 0, 1.0), (1.7, 1, 0.7), (2.0, 1, 1.0), (3.25, 3, 0.25)])
def test_holder_decompose(s, k, sig):
    idx = holder_decompose(s)
    assert idx.floor_minus == k and idx.frac_plus == pytest.approx(sig)


def test_holder_decompose_rejects_nonpositive():
    with pytest.raises(InvalidInputError):
        holder_decompose(0.0)


def test_multi_indices():
    assert multi_indices(2, 1) == [(1, 0), (0, 1)] or sorted(multi_indices(2, 1)) == [(0, 1), (1, 0)]
    assert len(multi_indices(2, 2)) == 3
    assert len(multi_indices(3, 2)) == 6


G1 = Grid(1, 10, 1.0)


def test_holder_norm_of_identity():
    f = GridFunction(G1.axis.copy(), G1)
    # sup |x| + Lip constant
    assert holder_norm(f, 1.0) == pytest.approx(2.0, rel=1e-2)


def test_holder_norm_sqrt():
    f = GridFunction(np.sqrt(np.abs(G1.axis)), G1)
    assert holder_norm(f, 0.5) == pytest.approx(2.0, rel=2e-2)


def test_holder_norm_sup_only():
    f = GridFunction(np.cos(G1.axis), G1)
    assert holder_norm(f, 0.0) == pytest.approx(1.0, rel=1e-5)


def test_second_order_holder_of_quadratic():
    f = GridFunction(G1.axis ** 2 / 2, G1)
    # sup f + sup|f'| + Lip(f') = 0.5 + 1 + 1
    assert holder_norm(f, 2.0) == pytest.approx(2.5, rel=1e-2)


def test_resolution_precondition():
    coarse = Grid(1, 3, 1.0)
    with pytest.raises(PreconditionError):
        holder_norm(GridFunction(coarse.axis, coarse), 2.5)


def test_masked_derivative_one_sided_exact_for_quadratic():
    x = G1.axis
    mask = x > 0.2
    d = masked_derivative(x ** 2, mask, 0, G1.spacing)
    np.testing.assert_allclose(d[mask], 2 * x[mask], atol=1e-9)


def test_masked_derivative_thin_region():
    mask = np.zeros(G1.shape, bool)
    mask[100] = True
    with pytest.raises(DataError):
        masked_derivative(G1.axis, mask, 0, G1.spacing)


def test_holder_on_region_ignores_outside():
    g = Grid(2, 6, 1.0)
    x = g.points
    dom = square(side=0.5, origin=(0, 0), pixels=64, width=2.0)
    f = GridFunction(np.where(dom.closure_contains(x), 1.0, 50.0), g)
    assert holder_norm(f, 0.5, region=dom) == pytest.approx(1.0)


def test_derivative_mixed_order():
    g = Grid(2, 6, 1.0)
    x = g.points
    vals = x[..., 0] * x[..., 1]
    d = derivative(vals, np.ones(g.shape, bool), (1, 1), g.spacing)
    np.testing.assert_allclose(d, 1.0, atol=1e-9)


# atoms

def per_level_grid(n, level):
    return Grid(n, 9 if n == 1 else 7, 2.0 ** (1 - level))


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("K,L", [(0.5, 0.0), (1.0, 1.0), (1.7, 2.3)])
@pytest.mark.parametrize("level", [0, 3])
def test_reference_atoms_validate(n, K, L, level):
    lat = build_lattice(level, 0.0, 2.0, box=SampleBox.cube(-0.1, 0.1, n=n, samples=3))
    cube = lat.cube((0,) * n)
    grid = per_level_grid(n, level)
    atom = make_atom(cube, K, L, grid=grid)
    rep = validate_atom(atom)
    assert rep.passed, rep.to_dict()
    assert rep.c_ii <= 1 + 1e-9


def test_moment_violating_bump_rejected_at_fine_levels():
    ratios = []
    for level in (3, 4, 5):
        lat = build_lattice(level, 0.0, 2.0, box=SampleBox.cube(-0.1, 0.1, n=1, samples=3))
        bump = make_moment_violating_bump(lat.cube((0,)), 1.5, 1.0, grid=per_level_grid(1, level))
        rep = validate_atom(bump)
        assert rep.cond_i and rep.cond_ii
        ratios.append(rep.c_iii)
    assert ratios[1] == pytest.approx(2 * ratios[0], rel=0.05)
    assert ratios[2] > 1
    rep = validate_atom(make_moment_violating_bump(
        build_lattice(5, 0, 2, box=SampleBox.cube(-0.1, 0.1, 1, 3)).cube((0,)), 1.5, 1.0,
        grid=per_level_grid(1, 5)))
    assert rep.failed_condition == "iii"


def test_support_violation_detected():
    lat = build_lattice(2, 0.0, 2.0, box=SampleBox.cube(-0.1, 0.1, n=1, samples=3))
    cube = lat.cube((0,))
    grid = per_level_grid(1, 2)
    vals = np.exp(-grid.axis ** 2)
    rep = validate_atom(AtomCandidate(GridFunction(vals * 1e-6, grid), cube, "global", 0.5, 0.0))
    assert rep.failed_condition == "i"


def test_scaled_atom_fails_size():
    lat = build_lattice(1, 0.0, 2.0, box=SampleBox.cube(-0.1, 0.1, n=1, samples=3))
    atom = make_atom(lat.cube((0,)), 1.0, 0.0, grid=per_level_grid(1, 1))
    big = AtomCandidate(atom.values * 1.5, atom.cube, atom.kind, atom.K, atom.L)
    assert validate_atom(big).failed_condition == "ii"


def test_dictionary_content():
    d = build_dictionary(G1, 1.5)
    assert len(d) == len(d.names)
    assert any(name.startswith("poly") for name in d.names)


@pytest.fixture(scope="module")
def dom_lattice():
    dom = square(side=1.0, origin=(-0.5, -0.5), pixels=256, width=4.0)
    return dom, build_lattice(2, domain=dom)


def test_interior_and_boundary_atoms(dom_lattice):
    dom, lat = dom_lattice
    grid = Grid(2, 7, 1.0)
    for kind in (CubeKind.INTERIOR, CubeKind.BOUNDARY):
        m = lat.indices([kind])[0]
        atom = make_atom(lat.cube(m), 1.0, 0.0, kind=AtomKind(kind.value), grid=grid, domain=dom)
        rep = validate_atom(atom, domain=dom)
        assert rep.passed, rep.to_dict()
        if kind is CubeKind.BOUNDARY:
            assert rep.cond_iii is None
            assert np.all(dom.closure_contains(grid.points)[atom.values.values != 0])


def test_kind_mismatch_is_precondition(dom_lattice):
    dom, lat = dom_lattice
    grid = Grid(2, 7, 1.0)
    m = lat.indices([CubeKind.INTERIOR])[0]
    atom = make_atom(lat.cube(m), 1.0, 0.0, grid=grid)
    bad = AtomCandidate(atom.values, atom.cube, AtomKind.BOUNDARY, 1.0, 0.0)
    with pytest.raises(PreconditionError):
        validate_atom(bad, domain=dom)


def test_atom_negative_orders_rejected():
    lat = build_lattice(0, 0.0, 2.0, box=SampleBox.cube(-0.1, 0.1, n=1, samples=3))
    with pytest.raises(InvalidInputError):
        AtomCandidate(GridFunction.zeros(G1), lat.cube((0,)), "global", -1.0, 0.0)


def test_profile_moments_vanish():
    lat = build_lattice(2, 0.0, 2.0, box=SampleBox.cube(-0.1, 0.1, n=1, samples=3))
    grid = per_level_grid(1, 2)
    prof = atom_profile(grid, 2, lat.cube((0,)).center, 2.3)
    t = grid.axis
    for k in range(3):
        assert abs(np.sum(prof * t ** k)) < 1e-10 * np.sum(np.abs(prof))


def test_under_resolved_atoms_use_the_resolved_constant():
    from varspace.atoms import normalization_grid

    level = 3
    cube = build_lattice(level, 0.0, 2.0, box=SampleBox.cube(-0.1, 0.1, n=1, samples=3)).cube((0,))
    coarse, fine = Grid(1, 6, 1.0), Grid(1, 10, 1.0)
    assert normalization_grid(fine, level, 1.0) is None
    assert normalization_grid(coarse, level, 1.0) is not None
    consts = []
    for g in (coarse, fine):
        a = make_atom(cube, 1.0, 0.0, grid=g)
        raw = atom_profile(g, level, cube.center, 0.0)
        consts.append(raw.max() / a.values.values.max())
    assert consts[0] == pytest.approx(consts[1], rel=0.02)
