import math

import numpy as np
import pytest

from molfield import tensor as T
from molfield.cinr import FieldArchitecture, FieldParameters
from molfield.eval import (
    CSV_HEADER, CallableField, EmptySurfaceError, LearnedField, MetricReport, OracleSDF, SurfaceSampleSet,
    UndefinedCorrelationError, chamfer, correlation_report, corruption_eval, eval_box, extract_atoms,
    extract_atoms_from, frame_report, grid_points, horizon_eval, iou_grid, mae, mlp_numpy, normal_consistency,
    property_errors, spread, surface_metrics, surface_samples,
)
from molfield.geom import MolecularConfiguration, oracle_density, synth_molecule, synth_trajectory
from molfield.train import build_model


def sphere(c=(0.0, 0.0, 0.0), r=1.0):
    c = np.asarray(c, dtype=float)
    return CallableField(lambda x: np.linalg.norm(x - c, axis=1) - r,
                         lambda x: (x - c) / np.linalg.norm(x - c, axis=1, keepdims=True))


def union(*fields):
    return CallableField(lambda x: np.min([f.values(x) for f in fields], axis=0))


BOX = (np.full(3, -2.0), np.full(3, 2.0))


def test_iou_examples():
    s = sphere()
    assert iou_grid(s, s, BOX, 32) == 1.0
    far = sphere((10.0, 0, 0))
    assert iou_grid(s, far, (np.array([-2.0, -2, -2]), np.array([12.0, 2, 2])), 64) == 0.0


def test_iou_lens_volume():
    r, d = 1.0, 1.0
    lens = math.pi * (4 * r + d) * (2 * r - d) ** 2 / 12
    ball = 4 / 3 * math.pi * r ** 3
    want = lens / (2 * ball - lens)
    box = (np.array([-1.5, -1.5, -1.5]), np.array([2.5, 1.5, 1.5]))
    got = iou_grid(sphere(), sphere((d, 0, 0)), box, 64)
    assert abs(got - want) <= 0.02


def test_chamfer_examples():
    P = np.random.default_rng(0).normal(size=(20, 3))
    assert chamfer(P, P) == 0.0
    assert chamfer([[0.0, 0, 0]], [[2.0, 0, 0]]) == 4.0
    rng = np.random.default_rng(1)
    A, B = rng.normal(size=(13, 3)), rng.normal(size=(9, 3))
    ab = np.mean([min(np.sum((a - b) ** 2) for b in B) for a in A])
    ba = np.mean([min(np.sum((b - a) ** 2) for a in A) for b in B])
    assert chamfer(A, B) == pytest.approx(0.5 * ab + 0.5 * ba, abs=1e-12)


def test_normal_consistency_examples():
    pts = np.eye(3)
    A = SurfaceSampleSet(pts, np.tile([0.0, 0.0, 1.0], (3, 1)))
    assert normal_consistency(A, A) == 1.0
    B = SurfaceSampleSet(pts, np.tile([1.0, 0.0, 0.0], (3, 1)))
    assert normal_consistency(A, B) == 0.0
    C = SurfaceSampleSet(pts, np.tile([0.0, 0.0, -1.0], (3, 1)))
    assert normal_consistency(A, C) == 1.0


def test_mae_examples():
    y = np.random.default_rng(2).normal(size=(5, 2))
    assert not mae(y, y).any()
    assert np.array_equal(mae([[1.0, 2.0]], [[0.0, 0.0]]), [1.0, 2.0])
    p = y + np.random.default_rng(3).normal(size=(5, 2))
    brute = [sum(abs(p[i, j] - y[i, j]) for i in range(5)) / 5 for j in range(2)]
    assert np.allclose(mae(p, y), brute, atol=1e-15)


def test_surface_samples_sphere():
    s = surface_samples(sphere(), BOX, 200, seed=0)
    assert len(s) == 200
    assert np.abs(np.linalg.norm(s.points, axis=1) - 1).max() <= 1e-3
    assert np.abs(s.normals - s.points).max() <= 1e-3
    c = np.array([0.5, -0.3, 0.2])
    t = surface_samples(sphere(c), (BOX[0] + c, BOX[1] + c), 100, seed=0)
    assert np.abs(np.linalg.norm(t.points - c, axis=1) - 1).max() <= 1e-3


def test_surface_samples_two_sphere_union():
    a, b = np.zeros(3), np.array([1.5, 0.0, 0.0])
    u = union(sphere(a), sphere(b))
    s = surface_samples(u, (np.array([-2.0, -2, -2]), np.array([3.5, 2, 2])), 200, seed=1)
    da = np.abs(np.linalg.norm(s.points - a, axis=1) - 1)
    db = np.abs(np.linalg.norm(s.points - b, axis=1) - 1)
    assert np.minimum(da, db).max() <= 1e-3


def test_surface_samples_empty():
    with pytest.raises(EmptySurfaceError):
        surface_samples(sphere((20.0, 0, 0)), BOX, 10, seed=0)


def test_correlation_examples():
    x = np.linspace(0, 1, 10)
    assert correlation_report(x, 2 * x + 1) == pytest.approx((1.0, 1.0), abs=1e-14)
    assert correlation_report(x, -x) == pytest.approx((-1.0, -1.0), abs=1e-14)
    with pytest.raises(UndefinedCorrelationError):
        correlation_report(x, np.ones(10))


def _ranks(v):
    # average ranks (1-based) by double loop
    return np.array([sum(w < a for w in v) + (sum(w == a for w in v) + 1) / 2 for a in v])


def _pearson_brute(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    num = sum((x[i] - mx) * (y[i] - my) for i in range(n))
    return num / math.sqrt(sum((a - mx) ** 2 for a in x) * sum((b - my) ** 2 for b in y))


def test_correlation_matches_direct_formula():
    rng = np.random.default_rng(4)
    x = rng.normal(size=50)
    y = 0.6 * x + rng.normal(size=50)
    y[3] = y[7]  # a tie in the ranks
    r, rho = correlation_report(x, y)
    assert abs(r - _pearson_brute(x, y)) <= 1e-12
    assert abs(rho - _pearson_brute(_ranks(x), _ranks(y))) <= 1e-12


def test_extract_atoms_single_atom():
    pos = np.array([0.113, -0.271, 0.05])
    mol = MolecularConfiguration([pos], [6])
    box = (np.full(3, -2.0), np.full(3, 2.0))
    dens = lambda x: oracle_density(mol, x, (6, 7, 8))  # noqa: E731
    got = extract_atoms_from(dens, box, 64, 0.5)
    spacing = 4.0 / 63
    assert got.n_atoms == 1 and list(got.numbers) == [6]
    assert np.abs(got.coords[0] - pos).max() <= spacing / 2
    assert extract_atoms_from(dens, box, 64, 1.1).n_atoms == 0


def test_extract_atoms_two_far_atoms():
    mol = MolecularConfiguration([[0.0, 0.0, 0.0], [6.0, 0.3, -0.2]], [7, 8])
    box = (np.array([-2.0, -2.0, -2.0]), np.array([8.0, 2.0, 2.0]))
    got = extract_atoms_from(lambda x: oracle_density(mol, x, (6, 7, 8)), box, 64, 0.5)
    assert got.n_atoms == 2
    order = np.argsort(got.coords[:, 0])
    assert list(got.numbers[order]) == [7, 8]


def test_extract_atoms_from_parameters():
    arch = FieldArchitecture(depth=1, width=3, skip=None, activation="identity", out_dim=3)
    arrays = {"field/0/W": np.eye(3), "field/0/b": np.zeros(3), "field/1/W": np.zeros((3, 3)),
              "field/1/b": np.zeros(3)}
    theta = FieldParameters.from_arrays(arch, arrays)
    assert extract_atoms(theta, arch, None, BOX, 16, 0.5).n_atoms == 0
    with pytest.raises(ValueError):
        extract_atoms(theta, arch, None, BOX, 16, 0.5, vocabulary=(6, 7))


def test_mlp_numpy_matches_autodiff():
    arch = FieldArchitecture(depth=4, width=12, skip=2)
    from molfield.cinr import field_eval, field_grad, init_field_params

    theta = init_field_params(arch, 0)
    arrays = [(W.data, b.data) for W, b in zip(theta.weights, theta.biases)]
    x = np.random.default_rng(5).normal(size=(7, 3))
    out, g = mlp_numpy(arrays, arch, x, True)
    assert np.abs(out - field_eval(theta, arch, x).data).max() <= 1e-12
    assert np.abs(g - field_grad(theta, arch, x).data).max() <= 1e-12


def test_learned_field_world_gradient():
    arch = FieldArchitecture(depth=2, width=8, skip=None)
    from molfield.cinr import init_field_params
    from molfield.encoder import CanonicalFrame
    from molfield.geom import random_rotation

    frame = CanonicalFrame(T.constant(random_rotation(3).R), np.array([0.5, 0.0, -1.0]))
    f = LearnedField(init_field_params(arch, 1), arch, frame)
    num = CallableField(f.values)
    x = np.random.default_rng(6).normal(size=(5, 3))
    assert np.abs(f.gradients(x) - num.gradients(x)).max() <= 1e-7


def test_surface_metrics_identity():
    mol = synth_molecule(0, 3)
    o = OracleSDF(mol)
    m = surface_metrics(o, o, eval_box(mol), 32, 200, seed=0)
    # independent sample sets of one surface: CD reflects sample spacing only
    assert m["iou"] == 1.0 and m["cd"] < 0.3 and m["nc"] > 0.95


def test_metric_report_csv():
    rep = MetricReport()
    rep.add("iou", np.float64(0.5), frame=2, horizon=0.25, seed=1)
    rep.add("mae", 1.25, corruption=0.5, seed=0)
    lines = rep.to_csv().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[1] == "iou,2,0.25,,1,0.5"
    assert lines[2] == "mae,,,0.5,0,1.25"
    assert rep.values("mae", corruption=0.5) == [1.25]
    mean, sem = spread([1.0, 2.0, 3.0])
    assert mean == 2.0 and sem == pytest.approx(1 / math.sqrt(3))


@pytest.fixture(scope="module")
def tiny_dynamics():
    return build_model("dynamics", "desk", (6, 7, 8), seed=0), synth_trajectory(0, 3, 4)


def test_horizon_eval_rows_and_in_sample_match(tiny_dynamics):
    model, traj = tiny_dynamics
    rep = horizon_eval(model, traj, traj.times[1], [1, 3], resolution=16, n_surface=50)
    assert len(rep.values("iou")) == 2
    assert isinstance(rep.meta["iou_nonincreasing"], bool)
    ref = frame_report(model, traj, [1], resolution=16, n_surface=50)
    assert rep.values("iou", frame=1) == ref.values("iou", frame=1)
    assert rep.values("cd", frame=1) == ref.values("cd", frame=1)


def test_corruption_eval_rows_and_clean_row():
    model = build_model("property", "tiny", (6, 7, 8), n_props=2, seed=0)
    data = [(synth_molecule([1, k], 4), np.array([0.5, 1.0])) for k in range(3)]
    rep = corruption_eval(model, data, fractions=(0.0, 0.5), seeds=(0, 1, 2))
    assert len(rep.rows) == 6
    clean = property_errors(model, data).mean() / 2  # per-target mean absolute error
    for v in rep.values("mae", corruption=0.0):
        assert v == pytest.approx(clean, abs=1e-15)
