"""
Field weights as a token sequence
=================================

Each layer's weight matrix and bias vector is cut into fixed-width chunks.
The chunks are ordered layer by layer and padded with zeros, so the sequence
can be turned back into exactly the same weights.
"""

import numpy as np

from molfield.cinr import FieldArchitecture, init_field_params
from molfield.swt import detokenize, token_count, tokenize

arch = FieldArchitecture(depth=3, width=7, skip=2)
theta = init_field_params(arch, 0)
print("layer shapes:", arch.layer_shapes())

# a chunk width that divides none of the tensors leaves padding on each group
seq = tokenize(theta, arch, 16)
print("tokens:", len(seq), "=", token_count(arch, 16))
for tok in seq.tokens[:6]:
    print(f"  layer {tok.layer} {tok.role:6s} chunk {tok.chunk}  first entries {tok.payload[:3].round(3)}")

# the roundtrip is bit-exact
back = detokenize(seq).arrays()
same = all(back[k].tobytes() == v.tobytes() for k, v in theta.arrays().items())
print("bit-exact roundtrip:", same)

# wider chunks give fewer tokens
for d in (4, 16, 64, 256):
    print(f"d_chunk {d:4d}: {token_count(arch, d):4d} tokens")
