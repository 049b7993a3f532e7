import math

import numpy as np
import pytest

from molfield.geom import (
    MolecularConfiguration, RigidTransform, Trajectory, XYZParseError, apply_rigid, axis_angle_matrix, centroid,
    corrupt, element_radius, geometric_targets, oracle_density, oracle_sdf, oracle_sdf_grad, parse_xyz,
    random_rigid, random_rotation, sample_queries, synth_molecule, synth_trajectory, write_xyz,
)


def test_parse_single_atom():
    mol = parse_xyz("1\n\nH 0 0 0")
    assert mol.n_atoms == 1 and list(mol.numbers) == [1]


def test_parse_timestamp():
    mol = parse_xyz("2\nt=0.5\nC 0 0 0\nO 1.2 0 0")
    assert mol.time == 0.5 and list(mol.numbers) == [6, 8]


def test_parse_two_blocks_is_trajectory():
    traj = parse_xyz("1\nt=0\nC 0 0 0\n1\nt=1\nC 0 0 1\n")
    assert isinstance(traj, Trajectory) and len(traj) == 2
    assert list(traj.times) == [0.0, 1.0]


@pytest.mark.parametrize("text,line", [
    ("x\n\nH 0 0 0", 1),
    ("2\n\nH 0 0 0", 4),
    ("1\n\nQq 0 0 0", 3),
    ("1\n\nH 0 zero 0", 3),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(XYZParseError) as err:
        parse_xyz(text)
    assert err.value.line == line


def test_trajectory_rejects_type_change_and_unsorted_times():
    a = MolecularConfiguration([[0, 0, 0]], [6])
    with pytest.raises(ValueError):
        Trajectory((a, MolecularConfiguration([[0, 0, 0]], [7])))
    with pytest.raises(ValueError):
        Trajectory((a, a), np.array([0.5, 0.2]))


def test_write_parse_roundtrip():
    traj = synth_trajectory(3, 4, 5)
    back = parse_xyz(write_xyz(traj))
    assert np.array_equal(back.times, traj.times)
    for f, g in zip(traj, back):
        assert np.array_equal(f.coords, g.coords) and np.array_equal(f.numbers, g.numbers)


def test_centroid_examples():
    assert np.array_equal(centroid([[0, 0, 0]]), [0, 0, 0])
    assert np.array_equal(centroid([[1, 0, 0], [-1, 0, 0]]), [0, 0, 0])
    assert np.allclose(centroid([[0, 0, 0], [3, 0, 0], [0, 3, 0]]), [1, 1, 0], atol=1e-15)


def test_apply_rigid_examples():
    X = np.array([[0.3, -1.0, 2.0]])
    assert np.array_equal(apply_rigid(X, RigidTransform(np.eye(3))), X)
    assert np.array_equal(apply_rigid([[0, 0, 0]], RigidTransform(np.eye(3), [1, 0, 0])), [[1, 0, 0]])
    Rz = axis_angle_matrix([0, 0, 1], math.pi / 2)
    assert np.allclose(apply_rigid([[1, 0, 0]], RigidTransform(Rz)), [[0, 1, 0]], atol=1e-15)


def test_rigid_rejects_reflection():
    with pytest.raises(ValueError):
        RigidTransform(np.diag([-1.0, 1.0, 1.0]))


def test_random_rotation_properties():
    for s in range(20):
        R = random_rotation(s).R
        assert np.abs(R.T @ R - np.eye(3)).max() <= 1e-10
        assert abs(np.linalg.det(R) - 1) <= 1e-10
    assert np.array_equal(random_rotation(42).R, random_rotation(42).R)


def test_random_rotation_haar_trace():
    traces = [np.trace(random_rotation([9, k]).R) for k in range(10_000)]
    assert abs(np.mean(traces)) <= 0.05


def test_oracle_sdf_examples():
    r = element_radius(6)
    one = MolecularConfiguration([[0, 0, 0]], [6])
    assert oracle_sdf(one, [r + 1.0, 0, 0]) == pytest.approx(1.0, abs=1e-15)
    assert oracle_sdf(one, [0, 0, 0]) == -r
    two = MolecularConfiguration([[0, 0, 0], [1.5, 0, 0]], [6, 6])
    brute = min(np.linalg.norm(np.array([0.75, 0, 0]) - c) - r for c in two.coords)
    assert oracle_sdf(two, [0.75, 0, 0]) == pytest.approx(brute, abs=1e-15)
    assert brute == pytest.approx(0.75 - r)


def test_oracle_sdf_grad_unit():
    mol = synth_molecule(2, 5)
    pts = sample_queries(mol, 50, near=0.0, seed=1)
    g = oracle_sdf_grad(mol, pts)
    assert np.allclose(np.linalg.norm(g, axis=1), 1.0, atol=1e-12)


def test_oracle_density_examples():
    far = MolecularConfiguration([[0, 0, 0], [40, 0, 0]], [6, 8])
    at_c = oracle_density(far, [0, 0, 0])
    assert abs(at_c[0] - 1.0) <= 1e-12 and abs(at_c[1]) <= 1e-12
    sigma_max = 0.5 * max(element_radius(6), element_radius(8))
    assert (oracle_density(far, [20.0, 7 * sigma_max, 0]) < 1e-7).all()
    sep = 1.2
    pair = MolecularConfiguration([[0, 0, 0], [sep, 0, 0]], [7, 7])
    sigma = 0.5 * element_radius(7)
    # closed form with the full separation: each atom sits sep/2 from the midpoint
    want = 2.0 * math.exp(-sep ** 2 / (8 * sigma ** 2))
    assert oracle_density(pair, [sep / 2, 0, 0])[0] == pytest.approx(want, abs=1e-15)


def test_synth_trajectory_determinism_and_smoothness():
    a = synth_trajectory(11, 5, 8)
    b = synth_trajectory(11, 5, 8)
    for f, g in zip(a, b):
        assert f.coords.tobytes() == g.coords.tobytes()
    # analytic speed bound: rotation of radius <= 3*sqrt(3)+0.5 through <= pi, wobble speed <= pi
    guard = (math.pi * (3 * math.sqrt(3) + 1.5)) / (math.pi * 3 * math.sqrt(3) + 0.5)
    bound = (math.pi * 3 * math.sqrt(3) + 0.5) / (len(a) - 1) * guard
    for f, g in zip(a.frames[:-1], a.frames[1:]):
        assert np.linalg.norm(g.coords - f.coords, axis=1).max() <= bound


def test_synth_trajectory_endpoints():
    two = synth_trajectory(5, 4, 2)
    many = synth_trajectory(5, 4, 9)
    assert np.array_equal(two[0].coords, many[0].coords)
    assert np.allclose(two[1].coords, many[-1].coords, atol=1e-12)
    mid = synth_trajectory(5, 4, 0, times=[0.5])
    assert np.allclose(mid[0].coords, many[4].coords, atol=1e-12)


def test_synth_separation():
    mol = synth_molecule(4, 10)
    d = np.linalg.norm(mol.coords[:, None] - mol.coords[None], axis=-1)
    assert d[np.triu_indices(10, 1)].min() >= 1.0


def test_corrupt_examples():
    mol4 = synth_molecule(1, 4)
    assert corrupt(mol4, 0.0, 3) is mol4
    assert corrupt(mol4, 0.5, 3).n_atoms == 2
    mol8 = synth_molecule(1, 8)
    a = corrupt(mol8, 0.75, 3)
    assert a.n_atoms == 2
    assert np.array_equal(a.coords, corrupt(mol8, 0.75, 3).coords)
    with pytest.raises(ValueError):
        corrupt(mol4, 1.0, 0)


def test_sample_queries_examples():
    mol = synth_molecule(6, 5)
    on = sample_queries(mol, 64, near=1.0, sigma_near=0.0, seed=1)
    assert np.abs(oracle_sdf(mol, on)).max() <= 1e-10
    box = sample_queries(mol, 64, near=0.0, margin=2.0, seed=1)
    lo, hi = mol.coords.min(0) - 2.0, mol.coords.max(0) + 2.0
    assert ((box >= lo) & (box <= hi)).all()
    mixed = sample_queries(mol, 100, near=0.5, sigma_near=0.0, seed=2)
    n_on = int((np.abs(oracle_sdf(mol, mixed)) <= 1e-10).sum())
    assert n_on == 50


def test_sample_queries_move_rigidly_in_frame():
    mol = synth_molecule(7, 4)
    g = random_rigid(3)
    c = mol.coords.mean(0)
    a = sample_queries(mol, 40, seed=5, frame=(np.eye(3), c))
    moved = mol.with_coords(apply_rigid(mol.coords, g))
    b = sample_queries(moved, 40, seed=5, frame=(g.R, apply_rigid(c[None], g)[0]))
    assert np.allclose(apply_rigid(a, g), b, atol=1e-10)


def test_geometric_targets():
    mol = MolecularConfiguration([[0, 0, 0], [2, 0, 0]], [6, 6])
    assert np.allclose(geometric_targets(mol), [1.0, 2.0])
