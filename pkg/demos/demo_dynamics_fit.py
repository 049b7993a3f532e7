"""
Fitting a moving molecular surface
==================================

A hyper-network turns a molecule embedding plus a time stamp into the weights
of a signed-distance field.  We fit it on a short synthetic trajectory and
then look at frames it saw and at times halfway between them.

Pass a number of epochs on the command line; 600 gives the full-quality fit
(several minutes), the default of 100 shows the trend.
"""

import sys

import numpy as np

from molfield.eval import dynamics_surface, eikonal_residual, frame_report
from molfield.geom import sample_queries, synth_trajectory
from molfield.train import TrainConfig, train_task

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 100

# eight frames of a four-atom molecule tumbling and wobbling
traj = synth_trajectory(0, 4, 8)
mids = synth_trajectory(0, 4, 0, times=(traj.times[:-1] + traj.times[1:]) / 2)

cfg = TrainConfig(task="dynamics", preset="desk", epochs=epochs, lr_net=1e-4, decay_every=300, seed=0)
res = train_task(cfg, traj, progress=lambda e, row: print(f"epoch {e:4d}  loss {row[2]:.4f}") if e % 25 == 0 else None)

# surface quality on training frames and in between
print(frame_report(res.model, traj, range(len(traj)), resolution=48, n_surface=1000).summary())
print(frame_report(res.model, traj, range(len(traj) - 1), resolution=48, n_surface=1000, reference=mids).summary())

# the learned field should stay close to a distance function near the surface
res_eik = [eikonal_residual(dynamics_surface(res.model, traj, float(t), f),
                            sample_queries(f, 1000, near=1.0, sigma_near=0.1, seed=k))
           for k, (f, t) in enumerate(zip(traj.frames, traj.times))]
print("near-surface eikonal residual:", np.mean(res_eik))
