"""Property checks shared by the command line and the test-suite.

Frame equivariance, field invariance under rigid motions, chirality
preservation, and finite-difference gradient checks of the task losses
through the whole generate-then-query pipeline.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import tensor as T
from .cinr import FIELD_PRESETS, init_field_params
from .encoder import EncoderConfig, encode_molecule, frames_batch, init_encoder_params
from .eval import LearnedField
from .geom import MolecularConfiguration, apply_rigid, random_rigid, random_rotations, sample_queries, synth_molecule

# four distinct elements at the corners of an irregular tetrahedron
CHIRAL_CONFIG = MolecularConfiguration(
    np.array([[0.0, 0.0, 0.0], [1.5, 0.1, -0.2], [-0.4, 1.3, 0.2], [0.3, 0.2, 1.1]]),
    np.array([6, 7, 8, 9]),
)


def mirror(config: MolecularConfiguration) -> MolecularConfiguration:
    """Reflection through the x = 0 plane."""
    return config.with_coords(config.coords * np.array([-1.0, 1.0, 1.0]))


def frame_equivariance(params=None, n_configs: int = 100, n_rotations: int = 100, seed=0,
                       min_atoms: int = 3, max_atoms: int = 12) -> dict[str, float]:
    """Max ||Q(RX) - R Q(X)||_F and max |det Q - 1| over random configurations and rotations."""
    params = params or init_encoder_params(EncoderConfig(), seed)
    rng = np.random.default_rng([seed, 11])
    worst = worst_det = 0.0
    for c in range(n_configs):
        n = int(rng.integers(min_atoms, max_atoms + 1))
        mol = synth_molecule([seed, c], n)
        R = random_rotations([seed, c], n_rotations)
        Xs = np.concatenate([mol.coords[None], np.einsum("bij,nj->bni", R, mol.coords)])
        Q = frames_batch(params, mol.numbers, Xs)
        err = np.linalg.norm(Q[1:] - R @ Q[0], axis=(1, 2)).max()
        worst = max(worst, float(err))
        worst_det = max(worst_det, float(np.abs(np.linalg.det(Q) - 1.0).max()))
    return {"max_frame_equivariance_err": worst, "max_det_err": worst_det}


def field_invariance(n_transforms: int = 100, seed=0, n_points: int = 64, arch=None) -> float:
    """Max |f(g x; g X) - f(x; X)| for an untrained random field and encoder."""
    arch = arch or FIELD_PRESETS["desk"]
    params = init_encoder_params(EncoderConfig(), [seed, 1])
    theta = init_field_params(arch, [seed, 2], requires_grad=False)
    mol = synth_molecule([seed, 3], 6)
    x = sample_queries(mol, n_points, seed=[seed, 4])
    with T.no_grad():
        _, frame = encode_molecule(params, mol)
        ref = LearnedField(theta, arch, frame).values(x)
        worst = 0.0
        for k in range(n_transforms):
            g = random_rigid([seed, 5, k])
            moved = mol.with_coords(apply_rigid(mol.coords, g))
            _, fr = encode_molecule(params, moved)
            val = LearnedField(theta, arch, fr).values(apply_rigid(x, g))
            worst = max(worst, float(np.abs(val - ref).max()))
    return worst


def chirality(params=None, seed=0) -> dict[str, float]:
    """det(Q) of the chiral configuration and its mirror image, and how far apart
    their canonical atom coordinates land (a reflection must not be absorbed)."""
    params = params or init_encoder_params(EncoderConfig(), seed)
    with T.no_grad():
        _, fa = encode_molecule(params, CHIRAL_CONFIG)
        mirrored = mirror(CHIRAL_CONFIG)
        _, fb = encode_molecule(params, mirrored)
    ca = (CHIRAL_CONFIG.coords - fa.centroid) @ fa.matrix
    cb = (mirrored.coords - fb.centroid) @ fb.matrix
    return {"det": float(np.linalg.det(fa.matrix)), "det_mirror": float(np.linalg.det(fb.matrix)),
            "mirror_coord_diff": float(np.abs(ca - cb).max())}


def invariance_suite(trials: int = 100, seed=0) -> dict[str, float]:
    out = frame_equivariance(n_configs=trials, n_rotations=trials, seed=seed)
    out["max_field_invariance_err"] = field_invariance(trials, seed)
    ch = chirality(seed=seed)
    out["max_det_err"] = max(out["max_det_err"], abs(ch["det"] - 1.0), abs(ch["det_mirror"] - 1.0))
    out["mirror_coord_diff"] = ch["mirror_coord_diff"]
    return out


def decoder_causality(trials: int = 20, seed=0, preset: str = "desk") -> float:
    """Max change of hidden states at positions <= t' when every payload fed back
    from position t' on is replaced by noise, over random t' and conditions."""
    from .fshn import HYPERNET_PRESETS, decoder_forward, generate, init_hypernet
    from .swt import token_count

    cfg = HYPERNET_PRESETS[preset]
    arch = FIELD_PRESETS[preset]
    d_z = 24
    params = init_hypernet(cfg, arch, d_z, [seed, 7])
    n = token_count(arch, cfg.d_chunk)
    rng = np.random.default_rng([seed, 8])
    worst = 0.0
    with T.no_grad():
        for _ in range(trials):
            z = rng.standard_normal(d_z)
            pay = generate(params, cfg, arch, z).payloads.data
            ref = decoder_forward(params, cfg, arch, z, pay).data
            tp = int(rng.integers(0, n))
            bent = pay.copy()
            bent[tp:] = rng.normal(0.0, 10.0, size=bent[tp:].shape)
            out = decoder_forward(params, cfg, arch, z, bent).data
            worst = max(worst, float(np.abs(out[:tp + 1] - ref[:tp + 1]).max()))
    return worst


# ---------------------------------------------------------------------------
# gradient checks


GRADCHECK_TENSORS = (
    "fshn/cond/W", "fshn/block0/Wq", "fshn/block0/ff/1/b", "fshn/base", "swt/w_payload", "swt/e_layer",
    "encoder/layer0/Wv", "encoder/mix",
)


def _task_setup(task: str, seed):
    from .geom import synth_trajectory
    from .train import TrainConfig, build_model

    cfg = TrainConfig(task=task, preset="tiny", n_queries=12, n_surface=4, seed=seed)
    if task == "dynamics":
        traj = synth_trajectory([seed, 1], 3, 2)
        model = build_model("dynamics", "tiny", (6, 7, 8), seed=seed)
        sample = (traj, 1)
    elif task == "property":
        mol = synth_molecule([seed, 2], 4)
        model = build_model("property", "tiny", (6, 7, 8), n_props=2, seed=seed)
        sample = (mol, np.array([0.3, -0.2]))
    else:
        mol = synth_molecule([seed, 3], 3)
        model = build_model("generation", "tiny", (6, 7, 8), n_latents=2, seed=seed)
        sample = (1, mol)
    return cfg, model, sample


def loss_gradcheck(task: str, seed=0, names=GRADCHECK_TENSORS, step: float = 1e-6) -> float:
    """Max relative error of analytic vs central-difference gradients of one task loss,
    with respect to every entry of several parameter tensors (encoder, hyper-network,
    structural embeddings and, where present, the property head or latent table)."""
    from .train import sample_loss, sample_queries_for

    cfg, model, sample = _task_setup(task, seed)
    queries = sample_queries_for(model, cfg, sample, [seed, 0, 0])
    extra = {"property": ("prop/0/W",), "generation": ("gen/latent",)}.get(task, ())
    worst = 0.0
    for name in (*names, *extra):
        if name not in model.params:
            continue

        def fn(x, name=name):
            m = replace(model, params={**model.params, name: x})
            return sample_loss(m, cfg, sample, [seed, 0, 0], queries)[0]

        with T.enable_grad():
            worst = max(worst, T.grad_check(fn, model.params[name].data, step))
    return worst


def gradcheck_suite(seed=0) -> dict[str, float]:
    return {task: loss_gradcheck(task, seed) for task in ("dynamics", "property", "generation")}
