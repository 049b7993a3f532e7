"""Surface metrics, evaluation harnesses and atom extraction from density fields.

Field evaluators are objects with ``values(x)`` (M x 3 -> M) and
``gradients(x)`` (M x 3 -> M x 3).  Learned fields are evaluated here with a
plain numpy forward/backward pass, which is much faster on 64^3 grids than
the autodiff graph and is checked against it in the tests.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage, stats

from .cinr import FieldArchitecture, FieldParameters
from .encoder import CanonicalFrame
from .geom import MolecularConfiguration, Trajectory, bounding_box, corrupt, oracle_sdf, oracle_sdf_grad

SURFACE_TOL = 1e-4
NMS_RADIUS = 0.8


class EmptySurfaceError(ValueError):
    pass


class UndefinedCorrelationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# field evaluators


def _act(name: str, u: np.ndarray, beta: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Activation value and derivative."""
    if name == "softplus":
        return np.logaddexp(0.0, beta * u) / beta, 0.5 * (1.0 + np.tanh(0.5 * beta * u))
    if name == "relu":
        return np.maximum(u, 0.0), (u > 0).astype(np.float64)
    if name == "tanh":
        y = np.tanh(u)
        return y, 1.0 - y * y
    if name == "identity":
        return u, np.ones_like(u)
    raise ValueError(f"unknown activation {name!r}")


def mlp_numpy(arrays: Sequence[tuple[np.ndarray, np.ndarray]], arch: FieldArchitecture, c: np.ndarray,
              with_grad: bool = False):
    """Field MLP on raw arrays; optionally the input gradient of channel 0."""
    c = np.asarray(c, dtype=np.float64)
    y = c
    derivs = []
    for l, (W, b) in enumerate(arrays):
        if l == arch.skip:
            y = np.concatenate([y, c], axis=1)
        y = y @ W + b
        if l < arch.depth:
            y, dy = _act(arch.activation, y, arch.softplus_beta)
            derivs.append(dy)
    if not with_grad:
        return y
    g = np.repeat(arrays[-1][0][:, 0][None, :], len(c), axis=0)
    g_in = np.zeros_like(c)
    for l in range(arch.depth - 1, -1, -1):
        g = (g * derivs[l]) @ arrays[l][0].T
        if l == arch.skip:
            g_in += g[:, -arch.in_dim:]
            g = g[:, :-arch.in_dim]
    return y, g + g_in


class OracleSDF:
    def __init__(self, config: MolecularConfiguration):
        self.config = config

    def values(self, x):
        return oracle_sdf(self.config, np.asarray(x, dtype=np.float64).reshape(-1, 3))

    def gradients(self, x):
        return oracle_sdf_grad(self.config, np.asarray(x, dtype=np.float64).reshape(-1, 3))


class LearnedField:
    """A field network placed in world space by a canonical frame (channel 0 for values)."""

    def __init__(self, theta: FieldParameters, arch: FieldArchitecture, frame: CanonicalFrame | None = None,
                 chunk: int = 32768):
        self.arch = arch
        self.arrays = [(np.asarray(W.data), np.asarray(b.data)) for W, b in zip(theta.weights, theta.biases)]
        if frame is None:
            self.Q, self.centre = np.eye(3), np.zeros(3)
        else:
            self.Q, self.centre = np.asarray(frame.matrix), np.asarray(frame.centroid)
        self.chunk = chunk

    def canonical(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64).reshape(-1, 3) - self.centre) @ self.Q

    def outputs(self, x) -> np.ndarray:
        """All output channels, M x C."""
        c = self.canonical(x)
        return np.concatenate([mlp_numpy(self.arrays, self.arch, c[i:i + self.chunk])
                               for i in range(0, len(c), self.chunk)] or [np.zeros((0, self.arch.out_dim))])

    def values(self, x) -> np.ndarray:
        return self.outputs(x)[:, 0]

    def gradients(self, x) -> np.ndarray:
        c = self.canonical(x)
        parts = [mlp_numpy(self.arrays, self.arch, c[i:i + self.chunk], with_grad=True)[1]
                 for i in range(0, len(c), self.chunk)]
        g = np.concatenate(parts) if parts else np.zeros((0, 3))
        # c = (x - centre) Q, so the world gradient is Q times the canonical one
        return g @ self.Q.T


class CallableField:
    """Wrap plain functions; the gradient defaults to central differences."""

    def __init__(self, fn, grad=None, h: float = 1e-6):
        self.fn, self.grad, self.h = fn, grad, h

    def values(self, x):
        return np.asarray(self.fn(np.asarray(x, dtype=np.float64).reshape(-1, 3)), dtype=np.float64)

    def gradients(self, x):
        x = np.asarray(x, dtype=np.float64).reshape(-1, 3)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=np.float64)
        g = np.zeros_like(x)
        for k in range(3):
            e = np.zeros(3)
            e[k] = self.h
            g[:, k] = (self.values(x + e) - self.values(x - e)) / (2 * self.h)
        return g


def grid_points(box, resolution: int) -> np.ndarray:
    lo, hi = (np.asarray(b, dtype=np.float64) for b in box)
    axes = [np.linspace(lo[k], hi[k], resolution) for k in range(3)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)


def eval_box(config: MolecularConfiguration, margin: float = 2.0):
    return bounding_box(config, margin)


# ---------------------------------------------------------------------------
# metrics


@dataclass
class SurfaceSampleSet:
    points: np.ndarray
    normals: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        if len(self.points) != len(self.normals):
            raise ValueError("points and normals must have the same length")

    def __len__(self) -> int:
        return len(self.points)


def _newton(field, x: np.ndarray, tol: float, max_iter: int, damping: float = 1.0):
    x = x.copy()
    done = np.zeros(len(x), dtype=bool)
    for _ in range(max_iter):
        active = ~done
        if not active.any():
            break
        xa = x[active]
        f = field.values(xa)
        ok = np.abs(f) < tol
        idx = np.flatnonzero(active)
        done[idx[ok]] = True
        xa, f, idx = xa[~ok], f[~ok], idx[~ok]
        if not len(xa):
            break
        g = field.gradients(xa)
        n2 = np.sum(g * g, axis=1)
        step = np.where(n2 > 1e-16, f / np.maximum(n2, 1e-16), 0.0)
        x[idx] = xa - damping * step[:, None] * g
    f = field.values(x)
    return x, np.abs(f) < tol


def surface_samples(field, box, m: int, seed, tol: float = SURFACE_TOL, max_iter: int = 50,
                    probe: int = 16, max_rounds: int = 20) -> SurfaceSampleSet:
    """``m`` points on the zero level set with unit normals, by Newton projection from seeds near sign changes."""
    if m < 1:
        raise ValueError("need at least one surface sample")
    lo, hi = (np.asarray(b, dtype=np.float64) for b in box)
    grid = grid_points((lo, hi), probe)
    vals = field.values(grid).reshape(probe, probe, probe)
    neg = vals < 0
    # cells (pairs of neighbouring probe nodes) whose endpoints disagree in sign
    cells = []
    for axis in range(3):
        a = [slice(None)] * 3
        b = [slice(None)] * 3
        a[axis], b[axis] = slice(0, -1), slice(1, None)
        flip = neg[tuple(a)] != neg[tuple(b)]
        for idx in np.argwhere(flip):
            j = idx.copy()
            j[axis] += 1
            cells.append((idx, j))
    if not cells:
        raise EmptySurfaceError("empty surface: no sign change on the probe grid")
    spacing = (hi - lo) / (probe - 1)
    rng = np.random.default_rng(seed)
    pts, normals = [], []
    have = 0
    for _ in range(max_rounds):
        need = m - have
        pick = rng.integers(len(cells), size=2 * need)
        a = np.array([cells[i][0] for i in pick], dtype=np.float64)
        b = np.array([cells[i][1] for i in pick], dtype=np.float64)
        w = rng.random((len(pick), 1))
        seeds = lo + ((1 - w) * a + w * b) * spacing + rng.normal(0.0, 0.1, size=(len(pick), 3)) * spacing
        x, ok = _newton(field, seeds, tol, max_iter)
        x = x[ok & np.all((x >= lo - 1e-9) & (x <= hi + 1e-9), axis=1)][:need]
        if len(x):
            g = field.gradients(x)
            nrm = np.linalg.norm(g, axis=1)
            good = nrm > 1e-12
            x, g, nrm = x[good], g[good], nrm[good]
            pts.append(x)
            normals.append(g / nrm[:, None])
            have += len(x)
        if have >= m:
            break
    if have < m:
        raise EmptySurfaceError(f"only {have} of {m} surface samples converged")
    return SurfaceSampleSet(np.concatenate(pts)[:m], np.concatenate(normals)[:m])


def occupancy(field, box, resolution: int) -> np.ndarray:
    return field.values(grid_points(box, resolution)) < 0


def iou_grid(a, b, box, resolution: int = 64) -> float:
    """Volumetric IoU of the negative regions of two fields on a regular grid."""
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    oa, ob = occupancy(a, box, resolution), occupancy(b, box, resolution)
    union = np.count_nonzero(oa | ob)
    if union == 0:
        return 1.0
    return np.count_nonzero(oa & ob) / union


def _nearest(P: np.ndarray, Q: np.ndarray, chunk: int = 2048) -> tuple[np.ndarray, np.ndarray]:
    """Index of and squared distance to the nearest point of Q for every point of P (brute force)."""
    idx = np.empty(len(P), dtype=np.int64)
    d2 = np.empty(len(P))
    qq = np.sum(Q * Q, axis=1)
    for i in range(0, len(P), chunk):
        p = P[i:i + chunk]
        # exact differences, not the expanded form, so that P = Q gives zeros
        D = np.sum((p[:, None, :] - Q[None, :, :]) ** 2, axis=-1) if len(Q) * len(p) <= 4_000_000 else \
            np.maximum(np.sum(p * p, axis=1)[:, None] + qq[None, :] - 2 * p @ Q.T, 0.0)
        k = np.argmin(D, axis=1)
        idx[i:i + chunk] = k
        d2[i:i + chunk] = D[np.arange(len(p)), k]
    return idx, d2


def _points(x) -> np.ndarray:
    return np.asarray(getattr(x, "points", x), dtype=np.float64).reshape(-1, 3)


def chamfer(P, Q) -> float:
    """Symmetric Chamfer distance with squared distances and 1/2 weights."""
    P, Q = _points(P), _points(Q)
    if not len(P) or not len(Q):
        raise ValueError("chamfer distance of an empty point set")
    return 0.5 * _nearest(P, Q)[1].mean() + 0.5 * _nearest(Q, P)[1].mean()


def normal_consistency(A: SurfaceSampleSet, B: SurfaceSampleSet) -> float:
    """Symmetric mean of |n . n'| with n' the normal of the nearest point in the other set."""
    if not len(A) or not len(B):
        raise ValueError("normal consistency of an empty sample set")
    ia, _ = _nearest(A.points, B.points)
    ib, _ = _nearest(B.points, A.points)
    ab = np.abs(np.sum(A.normals * B.normals[ia], axis=1)).mean()
    ba = np.abs(np.sum(B.normals * A.normals[ib], axis=1)).mean()
    return float(min(1.0, 0.5 * (ab + ba)))


def mae(predictions, targets) -> np.ndarray:
    p = np.atleast_2d(np.asarray(predictions, dtype=np.float64))
    t = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if p.shape != t.shape:
        raise ValueError(f"predictions {p.shape} and targets {t.shape} differ in shape")
    if not len(p):
        raise ValueError("mae of an empty batch")
    return np.abs(p - t).mean(axis=0)


def pearson(x, y) -> float:
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = np.sqrt(np.sum(dx * dx)), np.sqrt(np.sum(dy * dy))
    if sx == 0 or sy == 0:
        raise UndefinedCorrelationError("correlation undefined for zero-variance input")
    return float(np.sum(dx * dy) / (sx * sy))


def correlation_report(losses, errors) -> tuple[float, float]:
    """Pearson and Spearman (average ranks for ties) correlation coefficients."""
    x, y = np.asarray(losses, dtype=np.float64), np.asarray(errors, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("losses and errors must be 1-d of equal length")
    if len(x) < 3:
        raise ValueError("correlation needs at least 3 pairs")
    return pearson(x, y), pearson(stats.rankdata(x), stats.rankdata(y))


# ---------------------------------------------------------------------------
# atom extraction


def extract_atoms_from(density, box, resolution: int = 64, threshold: float = 0.5,
                       vocabulary: Sequence[int] = (6, 7, 8)) -> MolecularConfiguration:
    """Grid local maxima above ``threshold`` per channel, then cross-channel suppression within 0.8 A.

    ``density`` maps M x 3 points to M x C values, one channel per element of ``vocabulary``.
    """
    grid = grid_points(box, resolution)
    vals = np.asarray(density(grid), dtype=np.float64).reshape(resolution, resolution, resolution, -1)
    if vals.shape[-1] != len(vocabulary):
        raise ValueError(f"density has {vals.shape[-1]} channels, vocabulary has {len(vocabulary)}")
    cand = []
    for c, z in enumerate(vocabulary):
        v = vals[..., c]
        peaks = (v == ndimage.maximum_filter(v, size=3, mode="nearest")) & (v > threshold)
        for idx in np.argwhere(peaks):
            cand.append((v[tuple(idx)], int(z), grid[np.ravel_multi_index(tuple(idx), v.shape)]))
    # strongest first; ties broken by element then position for determinism
    cand.sort(key=lambda c: (-c[0], c[1], tuple(c[2])))
    kept: list = []
    for val, z, x in cand:
        if all(np.linalg.norm(x - k[2]) > NMS_RADIUS for k in kept):
            kept.append((val, z, x))
    if not kept:
        return MolecularConfiguration.empty()
    return MolecularConfiguration(np.array([k[2] for k in kept]), np.array([k[1] for k in kept]))


def extract_atoms(theta: FieldParameters, arch: FieldArchitecture, frame: CanonicalFrame | None, box,
                  resolution: int = 64, threshold: float = 0.5,
                  vocabulary: Sequence[int] = (6, 7, 8)) -> MolecularConfiguration:
    if arch.out_dim != len(vocabulary):
        raise ValueError(f"field has {arch.out_dim} channels, vocabulary has {len(vocabulary)}")
    field = LearnedField(theta, arch, frame)
    return extract_atoms_from(field.outputs, box, resolution, threshold, vocabulary)


# ---------------------------------------------------------------------------
# reports


CSV_HEADER = ("metric", "frame", "horizon", "corruption", "seed", "value")


@dataclass
class MetricRow:
    metric: str
    value: float
    frame: int | str = ""
    horizon: float | str = ""
    corruption: float | str = ""
    seed: int | str = ""


@dataclass
class MetricReport:
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, metric: str, value: float, **tags) -> None:
        self.rows.append(MetricRow(metric, float(value), **tags))

    def extend(self, other: "MetricReport") -> None:
        self.rows.extend(other.rows)

    def values(self, metric: str, **tags) -> list[float]:
        return [r.value for r in self.rows
                if r.metric == metric and all(getattr(r, k) == v for k, v in tags.items())]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([r.metric, r.frame, r.horizon, r.corruption, r.seed, repr(r.value)])
        return buf.getvalue()

    def write(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    def summary(self) -> str:
        """Mean, min and max of every metric as a fixed-width table."""
        lines = [f"{'metric':<12}{'n':>5}{'mean':>14}{'min':>14}{'max':>14}"]
        for m in dict.fromkeys(r.metric for r in self.rows):
            v = np.array(self.values(m))
            lines.append(f"{m:<12}{len(v):>5}{v.mean():>14.6f}{v.min():>14.6f}{v.max():>14.6f}")
        return "\n".join(lines)


def surface_metrics(pred, truth, box, resolution: int = 64, n_surface: int = 2000, seed=0) -> dict[str, float]:
    """IoU on a grid plus Chamfer distance and normal consistency on projected surface samples."""
    out = {"iou": iou_grid(pred, truth, box, resolution)}
    ss = np.random.SeedSequence(seed).spawn(2)
    sp = surface_samples(pred, box, n_surface, ss[0])
    st = surface_samples(truth, box, n_surface, ss[1])
    out["cd"] = chamfer(sp, st)
    out["nc"] = normal_consistency(sp, st)
    return out


def eikonal_residual(field, points) -> float:
    """Mean (|grad f| - 1)^2 over the given points."""
    g = field.gradients(points)
    return float(np.mean((np.linalg.norm(g, axis=1) - 1.0) ** 2))


def dynamics_surface(model, trajectory: Trajectory, t: float, config: MolecularConfiguration) -> LearnedField:
    from .train import dynamics_field
    theta, frame = dynamics_field(model, trajectory, t, config)
    return LearnedField(theta, model.field_arch, frame)


def frame_report(model, trajectory: Trajectory, frames: Sequence[int], resolution: int = 64, n_surface: int = 2000,
                 seed=0, margin: float = 2.0, reference: Trajectory | None = None) -> MetricReport:
    """IoU, CD and NC of generated fields against the oracle at the given frame indices.

    Fields are conditioned on ``trajectory`` (its first frame supplies the
    embedding); ground truth and timestamps come from ``reference`` when
    given, e.g. a finer sampling of the same motion for interpolation tests.
    """
    truth = trajectory if reference is None else reference
    rep = MetricReport(meta={"task": "dynamics"})
    for k in frames:
        config = truth.frames[k]
        t = float(truth.times[k])
        pred = dynamics_surface(model, trajectory, t, config)
        m = surface_metrics(pred, OracleSDF(config), eval_box(config, margin), resolution, n_surface, [seed, k])
        for name in ("iou", "cd", "nc"):
            rep.add(name, m[name], frame=k, horizon=t, seed=seed)
    return rep


def horizon_eval(model, trajectory: Trajectory, t0: float, horizons: Sequence[int], resolution: int = 64,
                 n_surface: int = 2000, seed=0) -> MetricReport:
    """Metrics at the given frame indices of a trajectory trained on times up to ``t0``.

    Returns one IoU/CD/NC triple per horizon; ``meta['iou_nonincreasing']``
    flags whether IoU falls monotonically with the horizon (reported, not asserted).
    """
    n = len(trajectory.frames)
    for k in horizons:
        if not 0 <= k < n:
            raise ValueError(f"horizon frame {k} outside trajectory of {n} frames")
    rep = frame_report(model, trajectory, horizons, resolution, n_surface, seed)
    rep.meta.update(t0=t0)
    ious = [rep.values("iou", frame=k)[0] for k in horizons]
    order = np.argsort([trajectory.times[k] for k in horizons], kind="stable")
    rep.meta["iou_nonincreasing"] = bool(np.all(np.diff(np.array(ious)[order]) <= 1e-12))
    return rep


def corruption_eval(model, dataset, fractions=(0.0, 0.25, 0.5, 0.75), seeds=(0, 1, 2, 3, 4)) -> MetricReport:
    """Property MAE (mean over targets and molecules) with a fraction of input atoms removed."""
    from . import tensor as T
    from .train import predict_property
    for config, _ in dataset:
        for f in fractions:
            corrupt(config, f, 0)  # validates the fraction against every N
    rep = MetricReport(meta={"task": "property"})
    for f in fractions:
        for s in seeds:
            preds, ys = [], []
            for i, (config, y) in enumerate(dataset):
                c = corrupt(config, f, np.random.SeedSequence([s, i]))
                with T.no_grad():
                    pred, _ = predict_property(model, c)
                preds.append(np.asarray(pred.data))
                ys.append(np.asarray(y, dtype=np.float64))
            rep.add("mae", float(mae(preds, ys).mean()), corruption=f, seed=s)
    return rep


def spread(values) -> tuple[float, float]:
    """Mean and standard error of the mean."""
    v = np.asarray(values, dtype=np.float64)
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0


# ---------------------------------------------------------------------------
# training-based harnesses


def property_errors(model, dataset) -> np.ndarray:
    """Per-molecule sum of absolute errors over the targets."""
    from . import tensor as T
    from .train import predict_property
    out = []
    with T.no_grad():
        for config, y in dataset:
            pred, _ = predict_property(model, config)
            out.append(float(np.abs(np.asarray(pred.data) - np.asarray(y, dtype=np.float64)).sum()))
    return np.array(out)


def data_ratio_sweep(cfg, train_set, test_set, ratios=(0.1, 0.25, 0.5, 1.0), seeds=(0,)) -> MetricReport:
    """Retrain the property task on growing random subsets and report test MAE.

    The ratio is carried in the metric name (``mae_ratio_<r>``) because the
    report columns are fixed.
    """
    from dataclasses import replace as dc_replace

    from . import tensor as T
    from .train import predict_property, train_task
    rep = MetricReport(meta={"task": "property"})
    for r in ratios:
        if not 0 < r <= 1:
            raise ValueError(f"data ratio {r} outside (0, 1]")
        for s in seeds:
            n = max(1, int(round(r * len(train_set))))
            idx = np.sort(np.random.default_rng([s, 17]).permutation(len(train_set))[:n])
            res = train_task(dc_replace(cfg, task="property", seed=s), [train_set[i] for i in idx])
            with T.no_grad():
                preds = [np.asarray(predict_property(res.model, c)[0].data) for c, _ in test_set]
            rep.add(f"mae_ratio_{r}", float(mae(preds, [y for _, y in test_set]).mean()), seed=s)
    return rep


def reconstruction_losses(model, molecules, n_queries: int = 512, seed=0) -> np.ndarray:
    """Density-field reconstruction loss of each auto-decoded molecule on fixed query sets."""
    from . import tensor as T
    from .train import field_for, loss_density, molecule_frame
    from .geom import sample_queries
    out = []
    with T.no_grad():
        for i, config in enumerate(molecules):
            _, frame = molecule_frame(model, config)
            gen = field_for(model, model.params["gen/latent"][i])
            q = sample_queries(config, n_queries, seed=[seed, i], frame=(frame.matrix, frame.centroid))
            out.append(loss_density(gen.theta, model.field_arch, frame, config, q, model.vocabulary).item())
    return np.array(out)


def correlation_pipeline(gen_cfg, prop_cfg, dataset, seed=0) -> tuple[MetricReport, np.ndarray, np.ndarray]:
    """Fit density fields to every molecule, fine-tune the property task from that
    model, and correlate per-molecule reconstruction loss with prediction error."""
    from dataclasses import replace as dc_replace

    from .train import build_model, load_matching, target_stats, train_task
    from .geom import density_vocabulary
    molecules = [c for c, _ in dataset]
    gen = train_task(dc_replace(gen_cfg, task="generation", seed=seed), molecules)
    losses = reconstruction_losses(gen.model, molecules, seed=seed)
    vocab = density_vocabulary(molecules)
    model = build_model("property", prop_cfg.preset, vocab, n_props=len(dataset[0][1]), seed=seed,
                        stats=target_stats([y for _, y in dataset]))
    load_matching(model, gen.model.arrays())
    prop = train_task(dc_replace(prop_cfg, task="property", seed=seed), dataset, model=model)
    errors = property_errors(prop.model, dataset)
    r, rho = correlation_report(losses, errors)
    rep = MetricReport(meta={"task": "correlation"})
    for i, (l, e) in enumerate(zip(losses, errors)):
        rep.add("recon_loss", l, frame=i, seed=seed)
        rep.add("abs_error", e, frame=i, seed=seed)
    rep.add("pearson", r, seed=seed)
    rep.add("spearman", rho, seed=seed)
    return rep, losses, errors
