"""
Canonical frames and rigid-motion invariance
=============================================

A molecule is read in its own learned frame, so a field queried there does
not care how the molecule sits in space.  A mirror image, however, must not
be folded back onto the original.
"""

import numpy as np

from molfield import tensor as T
from molfield.checks import CHIRAL_CONFIG, mirror
from molfield.cinr import FIELD_PRESETS, init_field_params
from molfield.encoder import EncoderConfig, encode_molecule, init_encoder_params
from molfield.eval import LearnedField
from molfield.geom import apply_rigid, random_rigid, synth_molecule

# an untrained encoder already gives an equivariant frame
params = init_encoder_params(EncoderConfig(), 0)
mol = synth_molecule(1, 6)
with T.no_grad():
    _, frame = encode_molecule(params, mol)
print("frame of the molecule:\n", frame.matrix.round(4))
print("det Q =", np.linalg.det(frame.matrix))

# move the molecule rigidly: the frame rotates with it
g = random_rigid(2)
with T.no_grad():
    _, moved = encode_molecule(params, mol.with_coords(apply_rigid(mol.coords, g)))
print("||Q(gX) - R Q(X)|| =", np.linalg.norm(moved.matrix - g.R @ frame.matrix))

# a random field read through the frame gives the same values at moved points
arch = FIELD_PRESETS["desk"]
theta = init_field_params(arch, 3, requires_grad=False)
x = np.random.default_rng(4).normal(size=(5, 3))
with T.no_grad():
    a = LearnedField(theta, arch, frame).values(x)
    b = LearnedField(theta, arch, moved).values(apply_rigid(x, g))
print("field values      :", a.round(6))
print("after rigid motion:", b.round(6))

# the mirror image keeps det = +1 and lands somewhere else
with T.no_grad():
    _, fa = encode_molecule(params, CHIRAL_CONFIG)
    _, fb = encode_molecule(params, mirror(CHIRAL_CONFIG))
ca = (CHIRAL_CONFIG.coords - fa.centroid) @ fa.matrix
cb = (mirror(CHIRAL_CONFIG).coords - fb.centroid) @ fb.matrix
print("det of mirror frame:", np.linalg.det(fb.matrix))
print("largest canonical coordinate change under mirroring:", np.abs(ca - cb).max())
