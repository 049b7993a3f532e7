import numpy as np

from molfield import tensor as T
from molfield.encoder import (
    CanonicalFrame, EncoderConfig, aggregate_axes, canonical_coords, encode_molecule, encoder_forward,
    frames_batch, gram_schmidt_frame, init_encoder_params,
)
from molfield.geom import MolecularConfiguration, apply_rigid, random_rigid, random_rotation, synth_molecule

PARAMS = init_encoder_params(EncoderConfig(), 0)


def _perm(mol, p):
    return MolecularConfiguration(mol.coords[p], mol.numbers[p])


def test_single_atom_vectors_zero():
    h, v = encoder_forward(PARAMS, MolecularConfiguration([[1.0, 2.0, 3.0]], [6]))
    assert h.shape == (1, 32) and v.shape == (1, 32, 3)
    assert not v.data.any()
    u1, u2, _ = aggregate_axes(PARAMS, h, v)
    assert not u1.data.any() and not u2.data.any()


def test_rotation_equivariance_of_features():
    mol = synth_molecule(3, 3)
    R = random_rotation(8).R
    h, v = encoder_forward(PARAMS, mol)
    hr, vr = encoder_forward(PARAMS, mol.with_coords(mol.coords @ R.T))
    assert np.abs(h.data - hr.data).max() <= 1e-8
    assert np.abs(v.data @ R.T - vr.data).max() <= 1e-8


def test_permutation_equivariance():
    mol = synth_molecule(4, 6)
    p = np.array([3, 0, 5, 1, 4, 2])
    h, v = encoder_forward(PARAMS, mol)
    hp, vp = encoder_forward(PARAMS, _perm(mol, p))
    assert np.abs(h.data[p] - hp.data).max() <= 1e-12
    assert np.abs(v.data[p] - vp.data).max() <= 1e-12


def test_axes_rotate_and_weights_normalised():
    mol = synth_molecule(5, 5)
    R = random_rotation(1).R
    u1, u2, alpha = aggregate_axes(PARAMS, *encoder_forward(PARAMS, mol))
    r1, r2, _ = aggregate_axes(PARAMS, *encoder_forward(PARAMS, mol.with_coords(mol.coords @ R.T)))
    assert np.abs(R @ u1.data - r1.data).max() <= 1e-8
    assert np.abs(R @ u2.data - r2.data).max() <= 1e-8
    assert np.abs(alpha.data.sum(axis=0) - 1.0).max() <= 1e-12


def test_gram_schmidt_examples():
    assert np.array_equal(gram_schmidt_frame([1.0, 0, 0], [0, 1.0, 0]).data, np.eye(3))
    assert np.allclose(gram_schmidt_frame([2.0, 0, 0], [1.0, 1.0, 0]).data, np.eye(3), atol=1e-15)
    Q = gram_schmidt_frame([0, 0, 3.0], [0, 2.0, 0]).data
    assert np.allclose(Q, np.array([[0, 0, 1], [0, 1, 0], [-1, 0, 0]]).T, atol=1e-15)
    assert abs(np.linalg.det(Q) - 1) <= 1e-15


def test_gram_schmidt_degenerate_fallbacks():
    assert np.array_equal(gram_schmidt_frame([0, 0, 0], [1.0, 0, 0]).data, np.eye(3))
    Q = gram_schmidt_frame([1.0, 0, 0], [3.0, 0, 0]).data
    assert np.allclose(Q.T @ Q, np.eye(3), atol=1e-12) and abs(np.linalg.det(Q) - 1) < 1e-12


def test_frame_is_rotation():
    for s in range(10):
        _, fr = encode_molecule(PARAMS, synth_molecule(s, 3 + s))
        Q = fr.matrix
        assert np.abs(Q.T @ Q - np.eye(3)).max() <= 1e-8
        assert abs(np.linalg.det(Q) - 1) <= 1e-8
        assert np.array_equal(Q[:, 2], np.cross(Q[:, 0], Q[:, 1]))


def test_canonical_coords_examples():
    mol = synth_molecule(2, 4)
    _, fr = encode_molecule(PARAMS, mol)
    assert np.array_equal(canonical_coords(fr, fr.centroid).data, np.zeros(3))
    ident = CanonicalFrame(T.constant(np.eye(3)), np.zeros(3))
    assert np.array_equal(canonical_coords(ident, [1.0, 2.0, 3.0]).data, [1.0, 2.0, 3.0])
    x = np.array([0.4, -1.0, 2.2])
    for k in range(10):
        g = random_rigid([2, k])
        _, fg = encode_molecule(PARAMS, mol.with_coords(apply_rigid(mol.coords, g)))
        a = canonical_coords(fg, apply_rigid(x[None], g)[0]).data
        assert np.abs(a - canonical_coords(fr, x).data).max() <= 1e-6


def test_embedding_invariance_and_permutation():
    mol = synth_molecule(6, 7)
    e, _ = encode_molecule(PARAMS, mol)
    g = random_rigid(4)
    eg, _ = encode_molecule(PARAMS, mol.with_coords(apply_rigid(mol.coords, g)))
    assert np.abs(e.data - eg.data).max() <= 1e-6
    ep, _ = encode_molecule(PARAMS, _perm(mol, np.arange(7)[::-1].copy()))
    assert np.abs(e.data - ep.data).max() <= 1e-10
    other = MolecularConfiguration(mol.coords, np.where(mol.numbers == 6, 9, 6))
    eo, _ = encode_molecule(PARAMS, other)
    assert np.linalg.norm(eo.data - e.data) > 0


def test_frame_modes():
    mol = synth_molecule(1, 4)
    _, fi = encode_molecule(PARAMS, mol, frame_mode="identity")
    assert np.array_equal(fi.matrix, np.eye(3)) and not fi.centroid.any()
    _, fr = encode_molecule(PARAMS, mol, frame_mode="random", frame_seed=3)
    assert np.array_equal(fr.matrix, random_rotation(3).R)


def test_frames_batch_matches_graph_route():
    mol = synth_molecule(9, 8)
    Rs = [random_rotation([9, k]).R for k in range(5)]
    coords = np.stack([mol.coords] + [mol.coords @ R.T for R in Rs])
    Qb = frames_batch(PARAMS, mol.numbers, coords)
    for X, Q in zip(coords, Qb):
        _, fr = encode_molecule(PARAMS, mol.with_coords(X))
        assert np.abs(fr.matrix - Q).max() <= 1e-12


def test_frame_gradient_flows_to_encoder():
    mol = synth_molecule(2, 4)
    name = "encoder/mix"

    def fn(w):
        p = type(PARAMS)(PARAMS.config, {**PARAMS.tensors, name: w})
        _, fr = encode_molecule(p, mol)
        return T.tsum(canonical_coords(fr, mol.coords) ** 2.0 * T.constant(np.arange(12.0).reshape(4, 3)))

    assert T.grad_check(fn, PARAMS.tensors[name].data, 1e-6) <= 1e-5
