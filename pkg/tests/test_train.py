import numpy as np
import pytest

from molfield import tensor as T
from molfield.cinr import FieldArchitecture, FieldParameters, canonical_field_eval, init_field_params
from molfield.encoder import CanonicalFrame
from molfield.geom import (
    MolecularConfiguration, Trajectory, apply_rigid, element_radius, oracle_density, oracle_sdf, random_rigid,
    sample_queries, synth_molecule, synth_trajectory,
)
from molfield.train import (
    LOG_HEADER, AdamState, TrainConfig, adam_step, build_model, format_log, learning_rates, load_model,
    loss_density, loss_eikonal, loss_md, loss_property, loss_sdf, property_head, save_model, target_stats, train_task,
)

IDENT = CanonicalFrame(T.constant(np.eye(3)), np.zeros(3))
ATOM = MolecularConfiguration([[0.0, 0.0, 0.0]], [6])
R_C = element_radius(6)


def linear_field(a, b=0.0, out_dim=1):
    """f(x) = a . x + b through an identity hidden layer."""
    arch = FieldArchitecture(depth=1, width=3, skip=None, activation="identity", out_dim=out_dim)
    W1 = np.zeros((3, out_dim))
    W1[:, 0] = a
    b1 = np.zeros(out_dim)
    b1[0] = b
    arrays = {"field/0/W": np.eye(3), "field/0/b": np.zeros(3), "field/1/W": W1, "field/1/b": b1}
    return FieldParameters.from_arrays(arch, arrays), arch


def ray(n=16, direction=(0.0, 0.6, 0.8)):
    d = np.asarray(direction)
    return np.linspace(0.3, 4.0, n)[:, None] * d, d


def test_loss_sdf_examples():
    pts, d = ray()
    theta, arch = linear_field(d, -R_C)
    assert loss_sdf(theta, arch, IDENT, ATOM, pts, surface=R_C * d[None]).item() <= 1e-15
    on = sample_queries(ATOM, 20, near=1.0, sigma_near=0.0, seed=0)
    const, arch = linear_field(np.zeros(3), 0.37)
    assert loss_sdf(const, arch, IDENT, ATOM, on).item() == pytest.approx(0.37, abs=1e-12)


def test_loss_sdf_brute_force():
    arch = FieldArchitecture(depth=2, width=8, skip=None)
    theta = init_field_params(arch, 1)
    mol = synth_molecule(2, 3)
    q = sample_queries(mol, 30, seed=3)
    s = sample_queries(mol, 7, near=1.0, sigma_near=0.0, seed=4)
    f = canonical_field_eval(theta, arch, IDENT, q).data[:, 0]
    fs = canonical_field_eval(theta, arch, IDENT, s).data[:, 0]
    want = np.mean(np.abs(f - oracle_sdf(mol, q))) + np.mean(np.abs(fs))
    assert loss_sdf(theta, arch, IDENT, mol, q, s).item() == pytest.approx(want, abs=1e-14)


def test_loss_eikonal_examples():
    pts = np.random.default_rng(0).normal(size=(12, 3))
    unit, arch = linear_field([0.0, 0.6, 0.8])
    assert loss_eikonal(unit, arch, IDENT, pts).item() <= 1e-15
    two, arch = linear_field([2.0, 0.0, 0.0])
    assert loss_eikonal(two, arch, IDENT, pts).item() == pytest.approx(1.0, abs=1e-14)
    const, arch = linear_field(np.zeros(3), 1.5)
    assert loss_eikonal(const, arch, IDENT, pts).item() == pytest.approx(1.0, abs=1e-14)


def test_loss_md_examples():
    arch = FieldArchitecture(depth=2, width=8, skip=None)
    theta = init_field_params(arch, 2)
    mol = synth_molecule(3, 3)
    q = sample_queries(mol, 20, seed=0)
    total, l_sdf, _ = loss_md(theta, arch, IDENT, mol, q, lam=0.0)
    assert total.item() == loss_sdf(theta, arch, IDENT, mol, q).item() == l_sdf.item()
    pts, d = ray()
    perfect, arch = linear_field(d, -R_C)
    assert loss_md(perfect, arch, IDENT, ATOM, pts, 0.1)[0].item() <= 1e-14
    on = sample_queries(ATOM, 20, near=1.0, sigma_near=0.0, seed=0)
    const, arch = linear_field(np.zeros(3), 0.2)
    total, l_sdf, l_eik = loss_md(const, arch, IDENT, ATOM, on, 0.1)
    assert (l_sdf.item(), l_eik.item()) == pytest.approx((0.2, 1.0), abs=1e-12)
    assert total.item() == pytest.approx(0.3, abs=1e-12)


def _head(d_model, y):
    rng = np.random.default_rng(0)
    return {"prop/0/W": T.constant(rng.normal(size=(d_model, d_model))), "prop/0/b": T.zeros(d_model),
            "prop/1/W": T.zeros((d_model, len(y))), "prop/1/b": T.constant(np.asarray(y, dtype=float))}


def test_loss_property_examples():
    pooled = T.constant(np.random.default_rng(1).normal(size=6))
    y = np.array([0.5, -1.0])
    head = _head(6, y)
    assert loss_property(pooled, head, y).item() == 0.0
    assert loss_property(pooled, head, y - np.array([1.0, -2.0])).item() == 3.0
    rng = np.random.default_rng(2)
    head = {"prop/0/W": T.constant(rng.normal(size=(6, 6))), "prop/0/b": T.constant(rng.normal(size=6)),
            "prop/1/W": T.constant(rng.normal(size=(6, 2))), "prop/1/b": T.constant(rng.normal(size=2))}
    x = pooled.data @ head["prop/0/W"].data + head["prop/0/b"].data
    pred = np.logaddexp(0, x) @ head["prop/1/W"].data + head["prop/1/b"].data
    assert loss_property(pooled, head, y).item() == pytest.approx(np.abs(pred - y).sum(), abs=1e-13)
    assert np.allclose(property_head(head, pooled).data, pred, atol=1e-13)


def test_loss_density_examples():
    mol = MolecularConfiguration([[0.0, 0.0, 0.0], [1.4, 0.0, 0.0]], [6, 8])
    zero, arch = linear_field(np.zeros(3), 0.0, out_dim=2)
    assert loss_density(zero, arch, IDENT, mol, [[30.0, 0.0, 0.0]], (6, 8)).item() <= 1e-12
    arch = FieldArchitecture(depth=2, width=8, skip=None, out_dim=2)
    theta = init_field_params(arch, 5)
    q = sample_queries(mol, 25, seed=1)
    f = canonical_field_eval(theta, arch, IDENT, q).data
    want = np.sum((f - oracle_density(mol, q, (6, 8))) ** 2) / len(q)
    assert loss_density(theta, arch, IDENT, mol, q, (6, 8)).item() == pytest.approx(want, abs=1e-13)
    # vocabulary and field channels must agree
    with pytest.raises(T.ShapeError):
        loss_density(theta, arch, IDENT, mol, q, (6, 7, 8))


def test_adam_examples():
    p = {"w": T.Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)}
    out, st = adam_step(p, {"w": np.zeros(3)}, AdamState(), 0.1)
    assert np.array_equal(out["w"].data, p["w"].data)
    g = np.array([0.5, -4.0, 1e-3])
    out, st = adam_step(p, {"w": g}, AdamState(), 0.1)
    want = p["w"].data - 0.1 * g / (np.abs(g) + 1e-8)
    assert np.allclose(out["w"].data, want, rtol=0, atol=1e-15)


def test_adam_deterministic():
    def run():
        p = {"w": T.Tensor(np.ones(4), requires_grad=True)}
        st = AdamState()
        for k in range(5):
            p, st = adam_step(p, {"w": np.sin(np.arange(4.0) + k) * p["w"].data}, st, 0.01)
        return p["w"].data

    assert run().tobytes() == run().tobytes()


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(batch_size=2)
    with pytest.raises(ValueError):
        TrainConfig(task="nope")
    with pytest.raises(KeyError):
        TrainConfig.from_mapping({"learning_rate": "1"})
    assert TrainConfig.from_mapping({"epochs": "3", "shuffle": "false"}).epochs == 3


def test_learning_rate_groups_and_decay():
    model = build_model("dynamics", "tiny", seed=0)
    cfg = TrainConfig(preset="tiny", lr_net=1e-4, lr_latent=1e-3, decay=0.5, decay_every=2)
    r0 = learning_rates(model, cfg, 0)
    r2 = learning_rates(model, cfg, 2)
    assert r0["fshn/base"] == 1e-3 and r0["fshn/cond/W"] == 1e-4 and r0["encoder/embed"] == 1e-3
    assert r2["fshn/cond/W"] == 5e-5
    frozen = learning_rates(model, TrainConfig(preset="tiny", freeze_encoder=True), 0)
    assert not any(k.startswith("encoder/") for k in frozen)


TRAJ = synth_trajectory(1, 3, 3)


def _tiny(**kw):
    base = dict(task="dynamics", preset="tiny", epochs=2, n_queries=16, n_surface=4, seed=3)
    base.update(kw)
    return TrainConfig(**base)


def test_zero_lr_leaves_parameters():
    cfg = _tiny(epochs=1, lr_net=0.0, lr_latent=0.0)
    init = build_model("dynamics", "tiny", (6, 7, 8), seed=3)
    before = init.arrays()
    res = train_task(cfg, TRAJ.subset([0]), model=init)
    after = res.model.arrays()
    assert all(before[k].tobytes() == after[k].tobytes() for k in before)
    assert len(res.log) == 1 and res.log[0][2] > 0


def test_training_deterministic_and_logged(tmp_path):
    a = train_task(_tiny(), TRAJ, log_path=tmp_path / "a.csv")
    b = train_task(_tiny(), TRAJ, log_path=tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    text = (tmp_path / "a.csv").read_text().splitlines()
    assert text[0] == ",".join(LOG_HEADER) and len(text) == 3
    assert text[1].startswith("0,dynamics,")
    assert a.model.arrays()["fshn/cond/W"].tobytes() == b.model.arrays()["fshn/cond/W"].tobytes()


def test_loss_log_invariant_to_rigid_motion():
    g = random_rigid(5)
    moved = Trajectory(tuple(f.with_coords(apply_rigid(f.coords, g)) for f in TRAJ), TRAJ.times)
    a = train_task(_tiny(), TRAJ).log
    b = train_task(_tiny(), moved).log
    for ra, rb in zip(a, b):
        assert abs(ra[2] - rb[2]) <= 1e-8


def test_checkpoint_roundtrip(tmp_path):
    model = build_model("property", "tiny", (6, 8), n_props=2, seed=1)
    save_model(tmp_path / "m.bin", model)
    back = load_model(tmp_path / "m.bin")
    assert back.describe() == model.describe()
    a, b = model.arrays(), back.arrays()
    assert list(a) == list(b) and all(a[k].tobytes() == b[k].tobytes() for k in a)


def test_property_and_generation_steps_reduce_loss():
    mols = [synth_molecule([7, k], 4) for k in range(2)]
    data = [(m, np.array([1.0, -0.5])) for m in mols]
    res = train_task(TrainConfig(task="property", preset="tiny", epochs=8, lr_net=3e-3, seed=0), data)
    assert res.log[-1][2] < res.log[0][2]
    gen = train_task(TrainConfig(task="generation", preset="tiny", epochs=8, lr_net=3e-3, n_queries=32,
                                 seed=0), mols[:1])
    assert gen.log[-1][2] < gen.log[0][2]


def test_target_stats_fixed_and_applied():
    mean, scale = target_stats([[1.0, 2.0], [3.0, 2.0]])
    assert np.array_equal(mean, [2.0, 2.0]) and np.array_equal(scale, [1.0, 1.0])  # zero spread maps to 1
    mols = [synth_molecule([8, k], 4) for k in range(3)]
    ys = [np.array([1.0 + k, -2.0 * k]) for k in range(3)]
    res = train_task(TrainConfig(task="property", preset="tiny", epochs=2, lr_net=1e-2, seed=0), list(zip(mols, ys)))
    head = res.model.head()
    assert np.allclose(head["prop/shift"].data, [2.0, -2.0], atol=1e-15)
    assert np.allclose(head["prop/scale"].data, np.std([[1, 0], [2, -2], [3, -4]], axis=0), atol=1e-15)
    pooled = T.constant(np.random.default_rng(0).normal(size=16))
    raw = property_head({k: v for k, v in head.items() if k not in ("prop/shift", "prop/scale")}, pooled).data
    want = raw * head["prop/scale"].data + head["prop/shift"].data
    assert np.abs(property_head(head, pooled).data - want).max() <= 1e-15


def test_format_log_blank_components():
    assert format_log([(0, "property", 1.5, None, None)]).splitlines()[1] == "0,property,1.5,,"


@pytest.fixture(scope="module")
def desk_fit():
    traj = synth_trajectory(2, 3, 4)
    cfg = TrainConfig(task="dynamics", preset="desk", epochs=300, seed=0)
    return train_task(cfg, traj)


def test_desk_dynamics_fit_reduces_loss_tenfold(desk_fit):
    # the epoch-0 row is the mean over the first pass, i.e. the loss at initialisation
    first, last = desk_fit.log[0][2], desk_fit.log[-1][2]
    assert last < 0.1 * first
