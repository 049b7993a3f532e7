"""Losses, Adam, model assembly and the generate-then-query training loops.

Each training step conditions the hyper-network, decodes a field, queries
it in the sample's own canonical frame and back-propagates the task loss
into the hyper-network, the encoder and any task heads.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import checkpoint
from . import nn
from . import tensor as T
from .cinr import (
    FIELD_PRESETS,
    FieldArchitecture,
    FieldParameters,
    canonical_field_eval,
    geometric_init_field_params,
    canonical_field_value_and_grad,
)
from .encoder import CanonicalFrame, EncoderConfig, encode_molecule, init_encoder_params
from .fshn import (
    HYPERNET_PRESETS,
    HyperNetConfig,
    aggregate_tokens,
    build_condition,
    condition_dim,
    generate,
    init_hypernet,
)
from .geom import (
    MolecularConfiguration,
    Trajectory,
    density_vocabulary,
    oracle_density,
    oracle_sdf,
    sample_queries,
)
from .tensor import NonFiniteError, ShapeError, Tensor

TASKS = ("dynamics", "property", "generation")
LOG_HEADER = ("epoch", "task", "loss", "component_sdf", "component_eikonal")


class TrainingError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# losses


def _as_points(queries) -> np.ndarray:
    pts = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("empty query set")
    return pts


def loss_sdf(theta: FieldParameters, arch: FieldArchitecture, frame: CanonicalFrame,
             config: MolecularConfiguration, queries, surface=None) -> Tensor:
    """Mean L1 error to the oracle SDF, plus mean |f| on on-surface points when given."""
    pts = _as_points(queries)
    f = canonical_field_eval(theta, arch, frame, pts)[:, 0]
    loss = T.mean(T.absolute(f - T.constant(oracle_sdf(config, pts))))
    if surface is not None and len(surface):
        fs = canonical_field_eval(theta, arch, frame, np.asarray(surface, dtype=np.float64))[:, 0]
        loss = loss + 1.0 * T.mean(T.absolute(fs))
    return loss


def loss_eikonal(theta: FieldParameters, arch: FieldArchitecture, frame: CanonicalFrame, queries) -> Tensor:
    """Mean of (|grad f| - 1)^2 with the gradient taken in canonical coordinates."""
    pts = _as_points(queries)
    _, g = canonical_field_value_and_grad(theta, arch, frame, pts, create_graph=True)
    norm = T.sqrt(T.tsum(g * g, axis=1))
    return T.mean((norm - 1.0) ** 2)


def loss_md(theta, arch, frame, config, queries, lam: float = 0.1, surface=None) -> tuple[Tensor, Tensor, Tensor]:
    """Returns ``(total, sdf_term, eikonal_term)``; the eikonal term is skipped when ``lam == 0``."""
    l_sdf = loss_sdf(theta, arch, frame, config, queries, surface)
    if lam == 0:
        return l_sdf, l_sdf, T.constant(0.0)
    l_eik = loss_eikonal(theta, arch, frame, queries)
    return l_sdf + lam * l_eik, l_sdf, l_eik


TARGET_STATS = ("prop/shift", "prop/scale")


def property_head(head: dict, pooled: Tensor) -> Tensor:
    """MLP readout mapped back to target units by the fixed training-set shift and scale."""
    x = T.reshape(pooled, (1, -1))
    out = T.reshape(nn.mlp(head, "prop", x, 2), (-1,))
    if "prop/scale" in head:
        out = out * T.constant(head["prop/scale"].data) + T.constant(head["prop/shift"].data)
    return out


def target_stats(targets) -> tuple[np.ndarray, np.ndarray]:
    """Per-target mean and spread; a spread of zero (or one sample) maps to 1."""
    y = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    scale = y.std(axis=0)
    return y.mean(axis=0), np.where(scale > 1e-12, scale, 1.0)


def loss_property(pooled: Tensor, head: dict, y) -> Tensor:
    """Sum of absolute errors of the head's predictions."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    pred = property_head(head, pooled)
    if pred.shape[0] != y.shape[0]:
        raise ShapeError(f"head predicts {pred.shape[0]} properties, target has {y.shape[0]}")
    return T.tsum(T.absolute(pred - T.constant(y)))


def loss_density(theta: FieldParameters, arch: FieldArchitecture, frame: CanonicalFrame,
                 config: MolecularConfiguration, queries, vocabulary=None) -> Tensor:
    """Mean over queries of the squared channel-wise L2 error to the oracle density."""
    pts = _as_points(queries)
    target = oracle_density(config, pts, vocabulary)
    if target.shape[1] != arch.out_dim:
        raise ShapeError(f"field has {arch.out_dim} channels, oracle has {target.shape[1]}")
    f = canonical_field_eval(theta, arch, frame, pts)
    diff = f - T.constant(target)
    return T.tsum(diff * diff) * (1.0 / len(pts))


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(params: dict, grads: dict, state: AdamState, lr) -> tuple[dict, AdamState]:
    """One bias-corrected Adam update.  ``lr`` is a float or a name -> rate mapping.

    Parameters without a gradient entry are carried over untouched.
    """
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    out = dict(params)
    for name, g in grads.items():
        p = params[name]
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.shape:
            raise ShapeError(f"gradient for {name} has shape {g.shape}, parameter {p.shape}")
        m = state.m.get(name)
        v = state.v.get(name)
        m = (1 - state.beta1) * g if m is None else state.beta1 * m + (1 - state.beta1) * g
        v = (1 - state.beta2) * g * g if v is None else state.beta2 * v + (1 - state.beta2) * g * g
        state.m[name] = m
        state.v[name] = v
        rate = lr[name] if isinstance(lr, dict) else lr
        if rate == 0.0:
            continue
        new = p.data - rate * (m / c1) / (np.sqrt(v / c2) + state.eps)
        out[name] = T.Tensor(new, requires_grad=True, name=name)
    return out, state


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class Preset:
    field: FieldArchitecture
    encoder: EncoderConfig
    hypernet: HyperNetConfig


PRESETS = {
    "tiny": Preset(FIELD_PRESETS["tiny"], EncoderConfig(channels=8, layers=1, rbf=8, embedding_dim=8),
                   HYPERNET_PRESETS["tiny"]),
    "desk": Preset(FIELD_PRESETS["desk"], EncoderConfig(channels=32, layers=3, rbf=16, embedding_dim=32),
                   HYPERNET_PRESETS["desk"]),
    "paper": Preset(FIELD_PRESETS["paper"], EncoderConfig(channels=512, layers=6, rbf=32, embedding_dim=512),
                    HYPERNET_PRESETS["paper"]),
}


@dataclass
class TrainConfig:
    task: str = "dynamics"
    preset: str = "desk"
    epochs: int = 300
    batch_size: int = 1
    lr_net: float = 1e-4
    lr_latent: float = 1e-3
    decay: float = 0.5
    decay_every: int = 200
    eikonal_weight: float = 0.1
    n_queries: int = 256
    n_surface: int = 64
    near_fraction: float = 0.5
    sigma_near: float = 0.1
    box_margin: float = 2.0
    seed: int = 0
    freeze_encoder: bool = False
    frame_mode: str = "learned"
    structural: bool = True
    autoregressive: bool = True
    init_from: str = ""
    shuffle: bool = True

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}")
        if self.lr_net < 0 or self.lr_latent < 0:
            raise ValueError("learning rates must be non-negative")
        if self.eikonal_weight < 0:
            raise ValueError("eikonal weight must be non-negative")
        if self.batch_size != 1:
            raise ValueError("only batch size 1 is supported")
        if self.epochs < 0 or self.decay_every < 1 or self.n_queries < 1:
            raise ValueError("epochs, decay_every and n_queries must be positive")

    @classmethod
    def from_mapping(cls, values: dict) -> "TrainConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise KeyError(f"unknown training option {key!r}")
            kwargs[key] = _coerce(known[key].type, raw)
        return cls(**kwargs)


def _coerce(type_name, raw):
    if not isinstance(raw, str):
        return raw
    t = type_name if isinstance(type_name, str) else type_name.__name__
    if t == "bool":
        low = raw.strip().lower()
        if low not in ("1", "0", "true", "false", "yes", "no"):
            raise ValueError(f"not a boolean: {raw!r}")
        return low in ("1", "true", "yes")
    if t == "int":
        return int(raw)
    if t == "float":
        return float(raw)
    return raw.strip()


@dataclass
class TaskQuery:
    """What a task reads from a generated field: points to query, or a hidden-state readout."""

    kind: str
    points: np.ndarray | None = None
    surface: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "field" and (self.points is None or len(self.points) == 0):
            raise ValueError("field queries need a nonempty point set")


# ---------------------------------------------------------------------------
# model


@dataclass
class Model:
    task: str
    preset: str
    field_arch: FieldArchitecture
    encoder: EncoderConfig
    hypernet: HyperNetConfig
    params: dict
    vocabulary: tuple = ()
    n_props: int = 0
    n_latents: int = 0
    frame_mode: str = "learned"

    @property
    def z_dim(self) -> int:
        return condition_dim(self.task, self.encoder.embedding_dim, self.hypernet.fourier,
                             self.encoder.embedding_dim if self.task == "generation" else None)

    def encoder_params(self):
        from .encoder import EncoderParams

        return EncoderParams(self.encoder, self.params)

    def head(self) -> dict:
        return {k: v for k, v in self.params.items() if k.startswith("prop/")}

    def arrays(self) -> dict[str, np.ndarray]:
        return nn.to_arrays(self.params)

    def describe(self) -> dict:
        a, e, h = self.field_arch, self.encoder, self.hypernet
        return {
            "task": self.task, "preset": self.preset,
            "field_depth": a.depth, "field_width": a.width, "field_out": a.out_dim,
            "field_skip": "none" if a.skip is None else a.skip, "field_beta": repr(a.softplus_beta),
            "enc_channels": e.channels, "enc_layers": e.layers, "enc_rbf": e.rbf,
            "enc_embedding_dim": e.embedding_dim,
            "hyp_d_model": h.d_model, "hyp_heads": h.heads, "hyp_layers": h.layers, "hyp_ff": h.ff,
            "hyp_d_chunk": h.d_chunk, "hyp_fourier": h.fourier, "hyp_gaussian_head": h.gaussian_head,
            "hyp_structural": h.structural, "hyp_autoregressive": h.autoregressive,
            "vocabulary": ",".join(str(z) for z in self.vocabulary), "n_props": self.n_props,
            "n_latents": self.n_latents, "frame_mode": self.frame_mode,
        }


def build_model(task: str, preset: str = "desk", vocabulary: Sequence[int] = (6, 7, 8), n_props: int = 0,
                n_latents: int = 0, seed=0, frame_mode: str = "learned", structural: bool = True,
                autoregressive: bool = True, stats=None) -> Model:
    pre = PRESETS[preset]
    vocab = tuple(int(z) for z in vocabulary)
    out_dim = 1 if task == "dynamics" else len(vocab)
    arch = replace(pre.field, out_dim=out_dim)
    hyp = replace(pre.hypernet, structural=structural, autoregressive=autoregressive)
    model = Model(task, preset, arch, pre.encoder, hyp, {}, vocab, n_props, n_latents, frame_mode)
    ss = np.random.SeedSequence(seed)
    s_enc, s_hyp, s_head, s_lat = (int(s.generate_state(1)[0]) for s in ss.spawn(4))
    params = dict(init_encoder_params(pre.encoder, s_enc).tensors)
    # SDF fields start from a sphere-like field; density fields from Glorot weights
    base = geometric_init_field_params(arch, s_head, requires_grad=False) if task == "dynamics" else None
    params.update(init_hypernet(hyp, arch, model.z_dim, s_hyp, base=base))
    if task == "property":
        if n_props < 1:
            raise ValueError("property task needs n_props >= 1")
        params.update(nn.init_mlp(np.random.default_rng(s_head), "prop", [hyp.d_model, hyp.d_model, n_props]))
        # the head predicts standardized targets; without this the readout spends
        # its early steps climbing to the target mean and settles on the median
        shift, scale = stats if stats is not None else (np.zeros(n_props), np.ones(n_props))
        for name, v in zip(TARGET_STATS, (shift, scale)):
            v = np.asarray(v, dtype=np.float64).reshape(-1)
            if v.shape != (n_props,):
                raise ShapeError(f"{name} has {v.size} entries, head predicts {n_props}")
            params[name] = nn.param(v, name)
    if task == "generation":
        if n_latents < 1:
            raise ValueError("generation task needs at least one latent code")
        codes = np.stack([build_condition("generation", seed=s_lat + i, dim=model.z_dim).z.data
                          for i in range(n_latents)])
        params["gen/latent"] = nn.param(codes, "gen/latent")
    model.params = params
    return model


def save_model(path, model: Model) -> None:
    """Checkpoint container plus a ``<path>.cfg`` sidecar describing the architecture."""
    checkpoint.save(path, model.arrays())
    lines = [f"{k} = {v}" for k, v in model.describe().items()]
    Path(str(path) + ".cfg").write_text("\n".join(lines) + "\n")


def read_kv(text: str) -> dict[str, str]:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected 'key = value', got {line!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_model(path) -> Model:
    meta = read_kv(Path(str(path) + ".cfg").read_text())
    arrays = checkpoint.load(path)
    b = lambda s: s.strip().lower() in ("1", "true", "yes")
    arch = FieldArchitecture(depth=int(meta["field_depth"]), width=int(meta["field_width"]),
                             out_dim=int(meta["field_out"]),
                             skip=None if meta["field_skip"] == "none" else int(meta["field_skip"]),
                             softplus_beta=float(meta.get("field_beta", 10.0)))
    enc = EncoderConfig(channels=int(meta["enc_channels"]), layers=int(meta["enc_layers"]), rbf=int(meta["enc_rbf"]),
                        embedding_dim=int(meta["enc_embedding_dim"]))
    hyp = HyperNetConfig(d_model=int(meta["hyp_d_model"]), heads=int(meta["hyp_heads"]),
                         layers=int(meta["hyp_layers"]), ff=int(meta["hyp_ff"]), d_chunk=int(meta["hyp_d_chunk"]),
                         fourier=int(meta["hyp_fourier"]), gaussian_head=b(meta["hyp_gaussian_head"]),
                         structural=b(meta["hyp_structural"]), autoregressive=b(meta["hyp_autoregressive"]))
    vocab = tuple(int(z) for z in meta["vocabulary"].split(",") if z)
    return Model(meta["task"], meta["preset"], arch, enc, hyp, nn.from_arrays(arrays), vocab,
                 int(meta["n_props"]), int(meta["n_latents"]), meta["frame_mode"])


def load_matching(model: Model, source) -> int:
    """Copy every same-named, same-shaped tensor from a checkpoint path or a
    name -> array mapping; returns the count."""
    arrays = dict(source) if isinstance(source, Mapping) else checkpoint.load(source)
    n = 0
    for k, v in arrays.items():
        if k in model.params and model.params[k].shape == v.shape:
            model.params[k] = nn.param(v, k)
            n += 1
    return n


# ---------------------------------------------------------------------------
# per-sample forward passes


def molecule_frame(model: Model, config: MolecularConfiguration, frame_seed: int = 0):
    return encode_molecule(model.encoder_params(), config, model.frame_mode, frame_seed)


def dynamics_condition(model: Model, reference: MolecularConfiguration, t: float):
    emb, _ = molecule_frame(model, reference)
    return build_condition("dynamics", emb, t, fourier=model.hypernet.fourier)


def field_for(model: Model, z, sample: bool = False, seed=None):
    return generate(model.params, model.hypernet, model.field_arch, z, sample=sample, seed=seed)


def dynamics_field(model: Model, trajectory: Trajectory, t: float, config: MolecularConfiguration | None = None):
    """Field parameters and world-placement frame for time ``t``.

    The molecule embedding comes from the first frame; the frame placing the
    field in space comes from ``config`` (the configuration at ``t``).
    """
    cond = dynamics_condition(model, trajectory.frames[0], t)
    gen = field_for(model, cond.z)
    _, frame = molecule_frame(model, config if config is not None else trajectory.frames[0])
    return gen.theta, frame


def predict_property(model: Model, config: MolecularConfiguration) -> tuple[Tensor, object]:
    emb, _ = molecule_frame(model, config)
    gen = field_for(model, build_condition("property", emb).z)
    pooled = aggregate_tokens(gen.hiddens)
    return property_head(model.head(), pooled), gen


def _queries(cfg: TrainConfig, config: MolecularConfiguration, frame: CanonicalFrame, seed) -> TaskQuery:
    fr = (frame.matrix, frame.centroid)
    pts = sample_queries(config, cfg.n_queries, cfg.near_fraction, cfg.sigma_near, cfg.box_margin, seed=seed,
                         frame=fr)
    surf = None
    if cfg.n_surface:
        surf = sample_queries(config, cfg.n_surface, 1.0, 0.0, cfg.box_margin, seed=[*np.atleast_1d(seed), 7],
                              frame=fr)
    return TaskQuery("field", pts, surf)


def sample_queries_for(model: Model, cfg: TrainConfig, sample, qseed) -> TaskQuery | None:
    """The query set :func:`sample_loss` would draw (``None`` for the property task)."""
    if model.task == "property":
        return None
    config = sample[0].frames[sample[1]] if model.task == "dynamics" else sample[1]
    with T.no_grad():
        _, frame = molecule_frame(model, config)
    return _queries(cfg, config, frame, qseed)


def sample_loss(model: Model, cfg: TrainConfig, sample, qseed,
                queries: TaskQuery | None = None) -> tuple[Tensor, float | None, float | None]:
    """Task loss for one sample; returns ``(loss, sdf_component, eikonal_component)``.

    Query points are drawn in the sample's canonical frame, which makes the
    draw itself invariant to rigid motions of the input.  The draw is data
    selection, not part of the differentiated function; pass ``queries`` to
    hold it fixed (as gradient checks must).
    """
    if model.task == "dynamics":
        traj, k = sample
        config = traj.frames[k]
        emb, frame0 = molecule_frame(model, traj.frames[0])
        frame = frame0 if k == 0 else molecule_frame(model, config)[1]
        z = build_condition("dynamics", emb, float(traj.times[k]), fourier=model.hypernet.fourier).z
        gen = field_for(model, z)
        q = queries or _queries(cfg, config, frame, qseed)
        total, l_sdf, l_eik = loss_md(gen.theta, model.field_arch, frame, config, q.points, cfg.eikonal_weight,
                                      q.surface)
        return total, l_sdf.item(), l_eik.item()
    if model.task == "property":
        config, y = sample
        pred, _ = predict_property(model, config)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if pred.shape[0] != y.shape[0]:
            raise ShapeError(f"head predicts {pred.shape[0]} properties, target has {y.shape[0]}")
        return T.tsum(T.absolute(pred - T.constant(y))), None, None
    # generation: auto-decoded latent code per molecule
    idx, config = sample
    _, frame = molecule_frame(model, config)
    z = model.params["gen/latent"][idx]
    gen = field_for(model, z)
    q = queries or _queries(cfg, config, frame, qseed)
    return loss_density(gen.theta, model.field_arch, frame, config, q.points, model.vocabulary), None, None


def _samples(task: str, data) -> list:
    if task == "dynamics":
        trajs = [data] if isinstance(data, Trajectory) else list(data)
        return [(tr, k) for tr in trajs for k in range(len(tr.frames))]
    if task == "property":
        return [(c, np.asarray(y, dtype=np.float64)) for c, y in data]
    configs = [data] if isinstance(data, MolecularConfiguration) else list(data)
    return list(enumerate(configs))


def learning_rates(model: Model, cfg: TrainConfig, epoch: int) -> dict[str, float]:
    factor = cfg.decay ** (epoch // cfg.decay_every)
    rates = {}
    for name in model.params:
        if (cfg.freeze_encoder and name.startswith("encoder/")) or name in TARGET_STATS:
            continue
        latent = name in ("encoder/embed", "fshn/base") or name.startswith("gen/")
        rates[name] = (cfg.lr_latent if latent else cfg.lr_net) * factor
    return rates


@dataclass
class TrainResult:
    model: Model
    log: list
    state: AdamState

    def log_csv(self) -> str:
        return format_log(self.log)


def format_log(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_HEADER)
    for r in rows:
        w.writerow([r[0], r[1], repr(r[2]), "" if r[3] is None else repr(r[3]), "" if r[4] is None else repr(r[4])])
    return buf.getvalue()


def train_task(cfg: TrainConfig, data, model: Model | None = None, log_path=None, checkpoint_path=None,
               progress=None, state: AdamState | None = None) -> TrainResult:
    """Run ``cfg.epochs`` epochs of per-sample Adam updates and log the mean losses."""
    samples = _samples(cfg.task, data)
    if not samples:
        raise ValueError("no training samples")
    if model is None:
        model = _model_for(cfg, data, samples)
        if cfg.init_from:
            load_matching(model, cfg.init_from)
    if model.task != cfg.task:
        raise ValueError(f"model was built for {model.task!r}, config asks for {cfg.task!r}")
    state = state or AdamState()
    order_rng = np.random.default_rng([cfg.seed, 1])
    log = []
    for epoch in range(cfg.epochs):
        rates = learning_rates(model, cfg, epoch)
        names = list(rates)
        order = order_rng.permutation(len(samples)) if cfg.shuffle else np.arange(len(samples))
        tot = sdf = eik = 0.0
        for idx in order:
            try:
                with T.enable_grad():
                    loss, c_sdf, c_eik = sample_loss(model, cfg, samples[idx], [cfg.seed, epoch, int(idx)])
                    value = loss.item()
                    if not math.isfinite(value):
                        raise NonFiniteError("loss is not finite")
                    gs = T.grad(loss, [model.params[n] for n in names])
            except NonFiniteError as exc:
                raise TrainingError(f"non-finite value at epoch {epoch}, sample {int(idx)}: {exc}") from exc
            grads = {n: g.data for n, g in zip(names, gs)}
            model.params, state = adam_step(model.params, grads, state, rates)
            tot += value
            sdf += c_sdf or 0.0
            eik += c_eik or 0.0
        n = len(samples)
        dyn = cfg.task == "dynamics"
        log.append((epoch, cfg.task, tot / n, sdf / n if dyn else None, eik / n if dyn else None))
        if progress is not None:
            progress(epoch, log[-1])
    if log_path is not None:
        Path(log_path).write_text(format_log(log))
    if checkpoint_path is not None:
        save_model(checkpoint_path, model)
    return TrainResult(model, log, state)


def _model_for(cfg: TrainConfig, data, samples) -> Model:
    if cfg.task == "dynamics":
        vocab = density_vocabulary([s[0] for s in samples])
        return build_model("dynamics", cfg.preset, vocab, seed=cfg.seed, frame_mode=cfg.frame_mode,
                           structural=cfg.structural, autoregressive=cfg.autoregressive)
    if cfg.task == "property":
        vocab = density_vocabulary([c for c, _ in samples])
        return build_model("property", cfg.preset, vocab, n_props=len(samples[0][1]), seed=cfg.seed,
                           frame_mode=cfg.frame_mode, structural=cfg.structural, autoregressive=cfg.autoregressive,
                           stats=target_stats([y for _, y in samples]))
    vocab = density_vocabulary([c for _, c in samples])
    return build_model("generation", cfg.preset, vocab, n_latents=len(samples), seed=cfg.seed,
                       frame_mode=cfg.frame_mode, structural=cfg.structural, autoregressive=cfg.autoregressive)
