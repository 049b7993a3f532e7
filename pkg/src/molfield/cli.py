"""Command-line entry points: ``python -m molfield <command> [options]``.

Options come from three layers, later ones winning: built-in defaults, a
plain ``key = value`` file given with ``--config``, and command-line flags.
Every command prints one deterministic summary line and writes a CSV file.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import tensor as T
from .geom import (
    MolecularConfiguration,
    Trajectory,
    XYZParseError,
    geometric_targets,
    parse_xyz,
    parse_xyz_blocks,
    synth_molecule,
    synth_trajectory,
    write_xyz,
)

COMMANDS = ("synth", "train", "eval", "horizon", "corrupt-eval", "data-ratio", "correlate", "gradcheck",
            "invariance", "generate")


class CLIError(Exception):
    pass


def _floats(text) -> tuple[float, ...]:
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _ints(text) -> tuple[int, ...]:
    return tuple(int(v) for v in str(text).split(",") if v.strip())


def _bool(text) -> bool:
    low = str(text).strip().lower()
    if low not in ("1", "0", "true", "false", "yes", "no"):
        raise ValueError(f"not a boolean: {text!r}")
    return low in ("1", "true", "yes")


# option name -> (type, default, help); shared options first
COMMON = {
    "seed": (int, 0, "seed for every random draw"),
    "threads": (int, 1, "worker thread cap (numerical libraries)"),
    "report": (str, "", "CSV output path (default derived from the command)"),
}
TRAINING = {
    "task": (str, "dynamics", "dynamics | property | generation"),
    "preset": (str, "desk", "tiny | desk | paper"),
    "epochs": (int, 300, "training epochs"),
    "lr": (float, None, "sets both learning rates"),
    "lr_net": (float, 1e-4, "network learning rate"),
    "lr_latent": (float, 1e-3, "embedding / latent table learning rate"),
    "decay": (float, 0.5, "learning-rate decay factor"),
    "decay_every": (int, 200, "epochs between decays"),
    "eikonal_weight": (float, 0.1, "weight of the eikonal term"),
    "n_queries": (int, 256, "query points per sample and step"),
    "n_surface": (int, 64, "exact surface points per sample and step"),
    "near_fraction": (float, 0.5, "fraction of queries near the surface"),
    "sigma_near": (float, 0.1, "jitter of near-surface queries (A)"),
    "box_margin": (float, 2.0, "bounding-box margin for uniform queries (A)"),
    "freeze_encoder": (_bool, False, "keep encoder weights fixed"),
    "frame_mode": (str, "learned", "learned | identity | random"),
    "structural": (_bool, True, "add layer/role embeddings to tokens"),
    "autoregressive": (_bool, True, "feed emitted payloads back into the decoder"),
    "init_from": (str, "", "checkpoint whose matching tensors initialize the model"),
    "shuffle": (_bool, True, "shuffle samples every epoch"),
}
EVALUATION = {
    "resolution": (int, 64, "grid resolution for IoU and atom extraction"),
    "n_surface_eval": (int, 2000, "surface samples for CD and NC"),
    "margin": (float, 2.0, "evaluation box margin around the molecule (A)"),
}

SPECS = {
    "synth": {
        "out": (str, None, "output XYZ path"),
        "atoms": (int, 5, "atoms per molecule"),
        "frames": (int, 8, "trajectory frames (ignored with --molecules)"),
        "molecules": (int, 0, "write this many independent molecules instead of a trajectory"),
    },
    "train": {
        "data": (str, None, "XYZ input (trajectory for dynamics, molecules otherwise)"),
        "targets": (str, "", "CSV of property targets (default: geometric targets)"),
        "window": (float, 1.0, "dynamics: train on frames with t <= window"),
        "out": (str, None, "output checkpoint path"),
        "save_init": (str, "", "also write the untrained checkpoint here"),
        **TRAINING,
    },
    "eval": {
        "checkpoint": (str, None, "trained checkpoint"),
        "data": (str, None, "XYZ input"),
        "targets": (str, "", "CSV of property targets (default: geometric targets)"),
        "metrics": (str, "iou,cd,nc,mae", "metrics to report"),
        **EVALUATION,
    },
    "horizon": {
        "checkpoint": (str, None, "trained dynamics checkpoint"),
        "data": (str, None, "full trajectory XYZ"),
        "t0": (float, 0.5, "end of the training window"),
        "horizons": (str, "", "frame indices to evaluate (default: all frames after t0)"),
        **EVALUATION,
    },
    "corrupt-eval": {
        "checkpoint": (str, None, "trained property checkpoint"),
        "data": (str, None, "molecule XYZ"),
        "targets": (str, "", "CSV of property targets (default: geometric targets)"),
        "fractions": (str, "0,0.25,0.5,0.75", "fractions of atoms removed"),
        "seeds": (str, "0,1,2,3,4", "corruption seeds"),
    },
    "data-ratio": {
        "data": (str, None, "training molecule XYZ"),
        "test": (str, None, "test molecule XYZ"),
        "targets": (str, "", "CSV of training targets (default: geometric targets)"),
        "ratios": (str, "0.1,0.25,0.5,1.0", "training-set fractions"),
        "seeds": (str, "0", "subset / training seeds"),
        **TRAINING,
    },
    "correlate": {
        "data": (str, "", "molecule XYZ (pipeline mode)"),
        "targets": (str, "", "CSV of property targets (default: geometric targets)"),
        "input": (str, "", "CSV with columns loss,error (report-only mode)"),
        "gen_epochs": (int, 20, "epochs of density fitting"),
        **TRAINING,
    },
    "gradcheck": {
        "tolerance": (float, 1e-4, "maximum relative error"),
    },
    "invariance": {
        "trials": (int, 100, "configurations, rotations and rigid motions per check"),
    },
    "generate": {
        "checkpoint": (str, None, "trained generation checkpoint"),
        "samples": (int, 1, "number of molecules to sample"),
        "threshold": (float, 0.5, "density peak threshold"),
        "extent": (float, 6.0, "half-width of the canonical extraction box (A)"),
        "resolution": (int, 64, "extraction grid resolution"),
        "out": (str, None, "output XYZ path"),
    },
}


def _parser(command: str) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog=f"molfield {command}", allow_abbrev=False)
    ap.add_argument("--config", default="", help="plain-text key = value file")
    for name, (typ, _, help_) in {**COMMON, **SPECS[command]}.items():
        ap.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None, help=help_)
    return ap


def resolve_options(command: str, argv) -> dict:
    """Defaults < config file < flags.  Unknown keys anywhere are errors."""
    spec = {**COMMON, **SPECS[command]}
    ap = _parser(command)
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        raise CLIError(f"bad arguments for {command}") from exc
    opts = {k: v[1] for k, v in spec.items()}
    if ns.config:
        from .train import read_kv
        try:
            text = Path(ns.config).read_text()
        except OSError as exc:
            raise CLIError(f"cannot read config {ns.config}: {exc}") from exc
        try:
            kv = read_kv(text)
        except ValueError as exc:
            raise CLIError(f"config {ns.config}: {exc}") from exc
        for k, raw in kv.items():
            key = k.replace("-", "_")
            if key not in spec:
                raise CLIError(f"config {ns.config}: unknown key {k!r} for {command}")
            try:
                opts[key] = spec[key][0](raw)
            except ValueError as exc:
                raise CLIError(f"config {ns.config}: bad value for {k}: {exc}") from exc
    for k in spec:
        v = getattr(ns, k)
        if v is not None:
            opts[k] = v
    missing = [k for k, v in opts.items() if v is None and spec[k][1] is None and k != "lr"]
    if missing:
        raise CLIError(f"{command}: missing required option(s) " + ", ".join("--" + m.replace("_", "-") for m in missing))
    return opts


def train_config(opts: dict, **overrides):
    from .train import TrainConfig
    names = {f.name for f in fields(TrainConfig)}
    values = {k: v for k, v in opts.items() if k in names}
    if opts.get("lr") is not None:
        values["lr_net"] = values["lr_latent"] = opts["lr"]
    values.update(overrides)
    try:
        return TrainConfig(**values)
    except ValueError as exc:
        raise CLIError(str(exc)) from exc


# ---------------------------------------------------------------------------
# data helpers


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc}") from exc


def read_trajectory(path: str) -> Trajectory:
    try:
        obj = parse_xyz(_read_text(path))
    except (XYZParseError, ValueError) as exc:
        raise CLIError(f"{path}: {exc}") from exc
    if not isinstance(obj, Trajectory):
        raise CLIError(f"{path}: expected a trajectory with at least two frames")
    return obj


def read_molecules(path: str) -> list[MolecularConfiguration]:
    try:
        return parse_xyz_blocks(_read_text(path))
    except (XYZParseError, ValueError) as exc:
        raise CLIError(f"{path}: {exc}") from exc


def read_targets(path: str, molecules) -> list[np.ndarray]:
    if not path:
        return [geometric_targets(m) for m in molecules]
    rows = list(csv.reader(io.StringIO(_read_text(path))))
    body = [r for r in rows[1:] if r]
    if len(body) != len(molecules):
        raise CLIError(f"{path}: {len(body)} target rows for {len(molecules)} molecules")
    try:
        return [np.array([float(v) for v in r[1:]]) for r in body]
    except ValueError as exc:
        raise CLIError(f"{path}: {exc}") from exc


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_csv(path: str, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(buf.getvalue())
    except OSError as exc:
        raise CLIError(f"cannot write {path}: {exc}") from exc


def _write_report(rep, path: str) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        rep.write(path)
    except OSError as exc:
        raise CLIError(f"cannot write {path}: {exc}") from exc


def _report_path(opts: dict, default: str) -> str:
    return opts["report"] or default


def _load(path: str, task: str | None = None):
    from .train import load_model
    if not Path(path).exists() or not Path(str(path) + ".cfg").exists():
        raise CLIError(f"checkpoint {path} (and its .cfg sidecar) not found")
    model = load_model(path)
    if task is not None and model.task != task:
        raise CLIError(f"checkpoint {path} was trained for {model.task!r}, not {task!r}")
    return model


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def summary(command: str, **items) -> str:
    return " ".join([command] + [f"{k}={_fmt(v)}" for k, v in items.items()])


# ---------------------------------------------------------------------------
# commands


def cmd_synth(o) -> str:
    if o["molecules"] > 0:
        mols = [synth_molecule([o["seed"], i], o["atoms"]) for i in range(o["molecules"])]
        text = write_xyz(mols)
        rows = [(i, "", m.n_atoms, *geometric_targets(m)) for i, m in enumerate(mols)]
        blocks = len(mols)
    else:
        traj = synth_trajectory(o["seed"], o["atoms"], o["frames"])
        text = write_xyz(traj)
        rows = [(k, float(t), f.n_atoms, *geometric_targets(f)) for k, (f, t) in enumerate(zip(traj.frames, traj.times))]
        blocks = len(traj)
    try:
        Path(o["out"]).parent.mkdir(parents=True, exist_ok=True)
        Path(o["out"]).write_text(text)
    except OSError as exc:
        raise CLIError(f"cannot write {o['out']}: {exc}") from exc
    report = _report_path(o, o["out"] + ".csv")
    write_csv(report, ("index", "time", "atoms", "radius_of_gyration", "mean_pair_distance"), rows)
    return summary("synth", blocks=blocks, atoms=o["atoms"], out=o["out"], report=report)


def _training_data(o, cfg):
    if cfg.task == "dynamics":
        traj = read_trajectory(o["data"])
        keep = [k for k, t in enumerate(traj.times) if t <= o.get("window", 1.0) + 1e-12]
        if not keep:
            raise CLIError(f"no frames with t <= {o['window']}")
        return traj.subset(keep)
    mols = read_molecules(o["data"])
    if cfg.task == "property":
        return list(zip(mols, read_targets(o["targets"], mols)))
    return mols


def cmd_train(o) -> str:
    from .train import _model_for, _samples, save_model, train_task
    cfg = train_config(o)
    data = _training_data(o, cfg)
    model = None
    if o["save_init"]:
        model = _model_for(cfg, data, _samples(cfg.task, data))
        if cfg.init_from:
            from .train import load_matching
            load_matching(model, cfg.init_from)
        save_model(o["save_init"], model)
    log_path = _report_path(o, o["out"] + ".log.csv")
    Path(log_path).parent.mkdir(parents=True, exist_ok=True)
    Path(o["out"]).parent.mkdir(parents=True, exist_ok=True)
    res = train_task(cfg, data, model=model, log_path=log_path, checkpoint_path=o["out"])
    final = res.log[-1][2] if res.log else float("nan")
    return summary("train", task=cfg.task, preset=cfg.preset, epochs=cfg.epochs, samples=len(_samples(cfg.task, data)),
                   final_loss=final, checkpoint=o["out"], log=log_path)


def cmd_eval(o) -> str:
    from . import eval as ev
    model = _load(o["checkpoint"])
    wanted = {m.strip() for m in o["metrics"].split(",") if m.strip()}
    unknown = wanted - {"iou", "cd", "nc", "mae", "recon"}
    if unknown:
        raise CLIError(f"unknown metric(s): {', '.join(sorted(unknown))}")
    rep = ev.MetricReport(meta={"task": model.task})
    if model.task == "dynamics":
        traj = read_trajectory(o["data"])
        full = ev.frame_report(model, traj, range(len(traj)), o["resolution"], o["n_surface_eval"], o["seed"],
                               o["margin"])
        rep.rows = [r for r in full.rows if r.metric in wanted]
    elif model.task == "property":
        mols = read_molecules(o["data"])
        ys = read_targets(o["targets"], mols)
        with T.no_grad():
            from .train import predict_property
            preds = [np.asarray(predict_property(model, m)[0].data) for m in mols]
        if "mae" in wanted:
            for p, v in enumerate(ev.mae(preds, ys)):
                rep.add("mae", v, frame=p, seed=o["seed"])
    else:
        mols = read_molecules(o["data"])
        if len(mols) != model.n_latents:
            raise CLIError(f"generation checkpoint holds {model.n_latents} latent codes, data has {len(mols)} molecules")
        for i, v in enumerate(ev.reconstruction_losses(model, mols, seed=o["seed"])):
            rep.add("recon", v, frame=i, seed=o["seed"])
    report = _report_path(o, o["checkpoint"] + ".eval.csv")
    _write_report(rep, report)
    means = {m: float(np.mean(rep.values(m))) for m in dict.fromkeys(r.metric for r in rep.rows)}
    return summary("eval", task=model.task, rows=len(rep.rows), **{f"mean_{k}": v for k, v in means.items()},
                   report=report)


def cmd_horizon(o) -> str:
    from . import eval as ev
    model = _load(o["checkpoint"], "dynamics")
    traj = read_trajectory(o["data"])
    horizons = _ints(o["horizons"]) if o["horizons"] else tuple(k for k, t in enumerate(traj.times) if t > o["t0"])
    if not horizons:
        raise CLIError(f"no frames after t0={o['t0']}")
    try:
        rep = ev.horizon_eval(model, traj, o["t0"], horizons, o["resolution"], o["n_surface_eval"], o["seed"])
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    report = _report_path(o, o["checkpoint"] + ".horizon.csv")
    _write_report(rep, report)
    return summary("horizon", horizons=len(horizons), mean_iou=float(np.mean(rep.values("iou"))),
                   iou_nonincreasing=rep.meta["iou_nonincreasing"], report=report)


def cmd_corrupt_eval(o) -> str:
    from . import eval as ev
    model = _load(o["checkpoint"], "property")
    mols = read_molecules(o["data"])
    data = list(zip(mols, read_targets(o["targets"], mols)))
    fractions, seeds = _floats(o["fractions"]), _ints(o["seeds"])
    try:
        rep = ev.corruption_eval(model, data, fractions, seeds)
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    report = _report_path(o, o["checkpoint"] + ".corrupt.csv")
    _write_report(rep, report)
    means = {f"mae_{f}": ev.spread(rep.values("mae", corruption=f))[0] for f in fractions}
    return summary("corrupt-eval", rows=len(rep.rows), **means, report=report)


def cmd_data_ratio(o) -> str:
    from . import eval as ev
    cfg = train_config(o, task="property")
    train_mols = read_molecules(o["data"])
    test_mols = read_molecules(o["test"])
    train_set = list(zip(train_mols, read_targets(o["targets"], train_mols)))
    test_set = list(zip(test_mols, [geometric_targets(m) for m in test_mols]))
    ratios = _floats(o["ratios"])
    try:
        rep = ev.data_ratio_sweep(cfg, train_set, test_set, ratios, _ints(o["seeds"]))
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    report = _report_path(o, "data_ratio.csv")
    _write_report(rep, report)
    means = {f"mae_{r}": float(np.mean(rep.values(f"mae_ratio_{r}"))) for r in ratios}
    return summary("data-ratio", **means, report=report)


def cmd_correlate(o) -> str:
    from . import eval as ev
    report = _report_path(o, "correlate.csv")
    if o["input"]:
        rows = list(csv.DictReader(io.StringIO(_read_text(o["input"]))))
        try:
            losses = [float(r["loss"]) for r in rows]
            errors = [float(r["error"]) for r in rows]
        except (KeyError, ValueError) as exc:
            raise CLIError(f"{o['input']}: need numeric columns loss,error ({exc})") from exc
        try:
            r, rho = ev.correlation_report(losses, errors)
        except ValueError as exc:
            raise CLIError(str(exc)) from exc
        rep = ev.MetricReport()
        rep.add("pearson", r, seed=o["seed"])
        rep.add("spearman", rho, seed=o["seed"])
    else:
        if not o["data"]:
            raise CLIError("correlate needs --data (pipeline) or --input (report only)")
        mols = read_molecules(o["data"])
        data = list(zip(mols, read_targets(o["targets"], mols)))
        prop_cfg = train_config(o, task="property")
        gen_cfg = replace(prop_cfg, task="generation", epochs=o["gen_epochs"])
        try:
            rep, losses, _ = ev.correlation_pipeline(gen_cfg, prop_cfg, data, o["seed"])
        except ValueError as exc:
            raise CLIError(str(exc)) from exc
        r, rho = rep.values("pearson")[0], rep.values("spearman")[0]
    _write_report(rep, report)
    return summary("correlate", n=len(losses), pearson=r, spearman=rho, report=report)


def cmd_gradcheck(o) -> str:
    from .checks import gradcheck_suite
    res = gradcheck_suite(o["seed"])
    report = _report_path(o, "gradcheck.csv")
    write_csv(report, ("loss", "max_rel_err", "tolerance", "pass"),
              [(k, v, o["tolerance"], v <= o["tolerance"]) for k, v in res.items()])
    worst = max(res.values())
    line = summary("gradcheck", **{f"{k}_max_rel_err": v for k, v in res.items()}, report=report)
    if worst > o["tolerance"]:
        raise CLIError(line + f" (max relative error {worst!r} above {o['tolerance']!r})")
    return line


def _limit(x: float) -> str:
    """Compact scientific form without exponent padding: 1e-6, 1e-8."""
    mant, _, exp = f"{x:g}".partition("e")
    return f"{mant}e{int(exp)}" if exp else mant


def cmd_invariance(o) -> str:
    from .checks import invariance_suite
    res = invariance_suite(o["trials"], o["seed"])
    limits = {"max_frame_equivariance_err": 1e-6, "max_field_invariance_err": 1e-6, "max_det_err": 1e-8}
    report = _report_path(o, "invariance.csv")
    rows = [(k, res[k], lim, res[k] <= lim) for k, lim in limits.items()]
    rows.append(("mirror_coord_diff", res["mirror_coord_diff"], 1e-3, res["mirror_coord_diff"] > 1e-3))
    write_csv(report, ("check", "value", "limit", "pass"), rows)
    lines = [f"{k} < {_limit(lim)}" if res[k] <= lim else f"{k} = {res[k]!r} exceeds {_limit(lim)}"
             for k, lim in limits.items()]
    lines.append(f"mirror_coord_diff > 1e-3" if res["mirror_coord_diff"] > 1e-3 else
                 f"mirror_coord_diff = {res['mirror_coord_diff']!r} not above 1e-3")
    lines.append(summary("invariance", trials=o["trials"], report=report))
    out = "\n".join(lines)
    if not all(r[3] for r in rows):
        raise CLIError(out)
    return out


def cmd_generate(o) -> str:
    from .eval import extract_atoms
    from .fshn import build_condition
    from .train import field_for
    model = _load(o["checkpoint"], "generation")
    box = (np.full(3, -o["extent"]), np.full(3, o["extent"]))
    mols, rows = [], []
    with T.no_grad():
        for k in range(o["samples"]):
            z = build_condition("generation", seed=[o["seed"], k], dim=model.z_dim).z
            gen = field_for(model, z)
            mol = extract_atoms(gen.theta, model.field_arch, None, box, o["resolution"], o["threshold"],
                                model.vocabulary)
            mols.append(mol)
            rows.extend((k, i, mol.symbols[i], *map(float, mol.coords[i])) for i in range(mol.n_atoms))
    nonempty = [m for m in mols if m.n_atoms]
    try:
        Path(o["out"]).parent.mkdir(parents=True, exist_ok=True)
        Path(o["out"]).write_text(write_xyz(nonempty) if nonempty else "")
    except OSError as exc:
        raise CLIError(f"cannot write {o['out']}: {exc}") from exc
    report = _report_path(o, o["out"] + ".csv")
    write_csv(report, ("sample", "atom", "element", "x", "y", "z"), rows)
    return summary("generate", samples=o["samples"], atoms=sum(m.n_atoms for m in mols), out=o["out"],
                   report=report)


HANDLERS = {
    "synth": cmd_synth, "train": cmd_train, "eval": cmd_eval, "horizon": cmd_horizon,
    "corrupt-eval": cmd_corrupt_eval, "data-ratio": cmd_data_ratio, "correlate": cmd_correlate,
    "gradcheck": cmd_gradcheck, "invariance": cmd_invariance, "generate": cmd_generate,
}


def usage() -> str:
    return "usage: molfield <command> [options]\ncommands: " + ", ".join(COMMANDS)


def run(argv=None, out=None, err=None) -> int:
    """Run one command; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    err = err or sys.stderr
    if not argv or argv[0] in ("-h", "--help"):
        print(usage(), file=out if argv else err)
        return 0 if argv else 2
    command, rest = argv[0], argv[1:]
    if command not in HANDLERS:
        print(f"error: unknown command {command!r}\n{usage()}", file=err)
        return 2
    if "-h" in rest or "--help" in rest:
        _parser(command).print_help(file=out)
        return 0
    try:
        opts = resolve_options(command, rest)
        print(HANDLERS[command](opts), file=out)
    except CLIError as exc:
        print(f"error: {exc}", file=err)
        return 1
    except (ValueError, KeyError, T.ShapeError, T.NonFiniteError) as exc:
        print(f"error: {command}: {exc}", file=err)
        return 1
    return 0
