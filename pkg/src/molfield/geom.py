"""Molecular configurations, rigid motions, analytic fields and synthetic data."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SYMBOLS = (
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne",
    "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr",
    "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn",
    "Sb", "Te", "I", "Xe",
)
ATOMIC_NUMBER = {s: i + 1 for i, s in enumerate(SYMBOLS)}

# van der Waals radii in angstrom
VDW_RADII = {1: 1.10, 6: 1.70, 7: 1.55, 8: 1.52, 9: 1.47, 16: 1.80, 15: 1.80, 17: 1.75}
DEFAULT_RADIUS = 1.5


def element_radius(z: int) -> float:
    return VDW_RADII.get(int(z), DEFAULT_RADIUS)


def symbol_of(z: int) -> str:
    return SYMBOLS[int(z) - 1] if 1 <= int(z) <= len(SYMBOLS) else f"X{int(z)}"


class XYZParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _frozen(arr, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class MolecularConfiguration:
    """Atom positions (angstrom) and atomic numbers, optionally time-stamped."""

    coords: np.ndarray
    numbers: np.ndarray
    time: float | None = None

    def __post_init__(self):
        coords = _frozen(self.coords, np.float64).reshape(-1, 3)
        numbers = _frozen(self.numbers, np.int64).reshape(-1)
        if coords.shape[0] < 1:
            raise ValueError("a configuration needs at least one atom")
        if numbers.shape[0] != coords.shape[0]:
            raise ValueError(f"{coords.shape[0]} positions but {numbers.shape[0]} atomic numbers")
        if not np.isfinite(coords).all():
            raise ValueError("coordinates must be finite")
        if (numbers < 1).any():
            raise ValueError("atomic numbers must be positive")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "numbers", numbers)

    @classmethod
    def empty(cls) -> "MolecularConfiguration":
        """Zero-atom result (e.g. nothing extracted); not a valid model input."""
        out = object.__new__(cls)
        object.__setattr__(out, "coords", _frozen(np.zeros((0, 3)), np.float64))
        object.__setattr__(out, "numbers", _frozen(np.zeros(0), np.int64))
        object.__setattr__(out, "time", None)
        return out

    @property
    def n_atoms(self) -> int:
        return self.coords.shape[0]

    @property
    def radii(self) -> np.ndarray:
        return np.array([element_radius(z) for z in self.numbers])

    @property
    def symbols(self) -> list[str]:
        return [symbol_of(z) for z in self.numbers]

    def with_coords(self, coords, time=None) -> "MolecularConfiguration":
        return MolecularConfiguration(coords, self.numbers, self.time if time is None else time)

    def __repr__(self) -> str:
        return f"MolecularConfiguration(N={self.n_atoms}, elements={''.join(self.symbols)}, time={self.time})"


@dataclass(frozen=True, eq=False)
class Trajectory:
    frames: tuple[MolecularConfiguration, ...]
    times: np.ndarray = field(default=None)

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("a trajectory needs at least one frame")
        ref = frames[0].numbers
        for k, f in enumerate(frames):
            if f.n_atoms != len(ref) or not np.array_equal(f.numbers, ref):
                raise ValueError(f"frame {k} changes the atom count or types")
        times = self.times
        if times is None:
            if all(f.time is not None for f in frames):
                times = [f.time for f in frames]
            else:
                times = np.linspace(0.0, 1.0, len(frames)) if len(frames) > 1 else [0.0]
        times = _frozen(times, np.float64)
        if times.shape != (len(frames),):
            raise ValueError("one timestamp per frame required")
        if len(times) > 1 and not (np.diff(times) > 0).all():
            raise ValueError("timestamps must be strictly increasing")
        if (times < 0).any() or (times > 1).any():
            raise ValueError("timestamps must lie in [0, 1]")
        frames = tuple(f if f.time == t else f.with_coords(f.coords, time=float(t)) for f, t in zip(frames, times))
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, k) -> MolecularConfiguration:
        return self.frames[k]

    def __iter__(self):
        return iter(self.frames)

    def subset(self, indices: Sequence[int]) -> "Trajectory":
        idx = list(indices)
        return Trajectory(tuple(self.frames[i] for i in idx), self.times[idx])


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """x -> R x + t with R a proper rotation."""

    R: np.ndarray
    t: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = _frozen(self.R, np.float64).reshape(3, 3)
        t = _frozen(self.t, np.float64).reshape(3)
        if np.abs(R.T @ R - np.eye(3)).max() > 1e-10 or abs(np.linalg.det(R) - 1.0) > 1e-10:
            raise ValueError("R must be a rotation matrix (orthonormal, det +1)")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    def apply(self, x) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.R.T + self.t


# ---------------------------------------------------------------------------
# extended XYZ

_TIME_RE = re.compile(r"(?:^|\s)t=(\S+)")


def parse_xyz(text: str):
    """Parse one or more concatenated XYZ blocks.

    Returns a :class:`MolecularConfiguration` for a single block and a
    :class:`Trajectory` otherwise.  A ``t=<float>`` token in the comment line
    sets the frame timestamp.
    """
    frames = parse_xyz_blocks(text)
    if len(frames) == 1:
        return frames[0]
    timed = [f.time is not None for f in frames]
    if any(timed) and not all(timed):
        raise XYZParseError("either every frame or none must carry t=", 2)
    return Trajectory(tuple(frames))


def parse_xyz_blocks(text: str) -> list[MolecularConfiguration]:
    """Every XYZ block as its own configuration (atom counts may differ)."""
    lines = text.splitlines()
    frames = []
    i = 0
    n_lines = len(lines)
    while i < n_lines:
        if not lines[i].strip():
            i += 1
            continue
        count_line = i + 1
        try:
            count = int(lines[i].strip())
        except ValueError:
            raise XYZParseError(f"expected atom count, got {lines[i].strip()!r}", count_line) from None
        if count < 1:
            raise XYZParseError("atom count must be positive", count_line)
        if i + 1 >= n_lines:
            raise XYZParseError("missing comment line", count_line + 1)
        comment = lines[i + 1]
        time = None
        m = _TIME_RE.search(comment)
        if m:
            try:
                time = float(m.group(1))
            except ValueError:
                raise XYZParseError(f"bad timestamp {m.group(1)!r}", i + 2) from None
        coords = []
        numbers = []
        for k in range(count):
            ln = i + 2 + k
            if ln >= n_lines or not lines[ln].strip():
                raise XYZParseError(f"expected {count} atoms, found {k}", ln + 1)
            parts = lines[ln].split()
            if len(parts) < 4:
                raise XYZParseError(f"malformed atom line {lines[ln]!r}", ln + 1)
            sym = parts[0]
            if sym not in ATOMIC_NUMBER:
                raise XYZParseError(f"unknown element symbol {sym!r}", ln + 1)
            try:
                xyz = [float(v) for v in parts[1:4]]
            except ValueError:
                raise XYZParseError(f"malformed coordinates {lines[ln]!r}", ln + 1) from None
            numbers.append(ATOMIC_NUMBER[sym])
            coords.append(xyz)
        extra = i + 2 + count
        if extra < n_lines and lines[extra].strip() and len(lines[extra].split()) >= 4:
            raise XYZParseError(f"more atom lines than the declared count {count}", extra + 1)
        frames.append(MolecularConfiguration(coords, numbers, time))
        i = extra
    if not frames:
        raise XYZParseError("no XYZ block found", 1)
    return frames


def _fmt(v: float) -> str:
    return repr(float(v))


def write_xyz(obj) -> str:
    """XYZ text for a configuration, a trajectory or a list of configurations."""
    if isinstance(obj, Trajectory):
        frames = obj.frames
    elif isinstance(obj, MolecularConfiguration):
        frames = (obj,)
    else:
        frames = tuple(obj)
    out = []
    for f in frames:
        out.append(str(f.n_atoms))
        out.append("" if f.time is None else f"t={_fmt(f.time)}")
        for sym, (x, y, z) in zip(f.symbols, f.coords):
            out.append(f"{sym} {_fmt(x)} {_fmt(y)} {_fmt(z)}")
    return "\n".join(out) + "\n"


def write_ply(points, normals) -> str:
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    normals = np.asarray(normals, dtype=np.float64).reshape(-1, 3)
    header = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(points)}",
        "property double x",
        "property double y",
        "property double z",
        "property double nx",
        "property double ny",
        "property double nz",
        "end_header",
    ]
    rows = [" ".join(_fmt(v) for v in (*p, *n)) for p, n in zip(points, normals)]
    return "\n".join(header + rows) + "\n"


# ---------------------------------------------------------------------------
# rigid motions


def centroid(X) -> np.ndarray:
    X = np.asarray(getattr(X, "coords", X), dtype=np.float64).reshape(-1, 3)
    if len(X) < 1:
        raise ValueError("centroid of an empty point set")
    return X.mean(axis=0)


def apply_rigid(X, g: RigidTransform):
    """Map every row x to R x + t; configurations keep their atom types."""
    if isinstance(X, MolecularConfiguration):
        return X.with_coords(g.apply(X.coords))
    if isinstance(X, Trajectory):
        return Trajectory(tuple(apply_rigid(f, g) for f in X.frames), X.times)
    return g.apply(X)


def quaternion_to_matrix(q) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=np.float64) / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def random_rotation(seed) -> RigidTransform:
    """Haar-uniform rotation from a normalized Gaussian quaternion."""
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(4)
    while np.linalg.norm(q) < 1e-12:
        q = rng.standard_normal(4)
    return RigidTransform(quaternion_to_matrix(q), np.zeros(3))


def random_rotations(seed, n: int) -> np.ndarray:
    """``n`` Haar-uniform rotation matrices (n x 3 x 3) from one seed."""
    q = np.random.default_rng(seed).standard_normal((n, 4))
    w, x, y, z = (q / np.linalg.norm(q, axis=1, keepdims=True)).T
    return np.stack([
        np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], axis=1),
        np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], axis=1),
        np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], axis=1),
    ], axis=1)


def random_rigid(seed, translation_scale: float = 5.0) -> RigidTransform:
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(4)
    t = rng.uniform(-translation_scale, translation_scale, size=3)
    return RigidTransform(quaternion_to_matrix(q), t)


def axis_angle_matrix(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * (K @ K)


# ---------------------------------------------------------------------------
# analytic fields


def oracle_sdf(config: MolecularConfiguration, x) -> np.ndarray | float:
    """Signed distance to the union of van der Waals spheres (min over atoms)."""
    x = np.asarray(x, dtype=np.float64)
    pts = x.reshape(-1, 3)
    d = np.linalg.norm(pts[:, None, :] - config.coords[None, :, :], axis=-1) - config.radii[None, :]
    out = d.min(axis=1)
    return float(out[0]) if x.ndim == 1 else out.reshape(x.shape[:-1])


def oracle_sdf_grad(config: MolecularConfiguration, x) -> np.ndarray:
    """Gradient of :func:`oracle_sdf`: unit vector from the nearest sphere's centre."""
    x = np.asarray(x, dtype=np.float64)
    pts = x.reshape(-1, 3)
    diff = pts[:, None, :] - config.coords[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    k = np.argmin(dist - config.radii[None, :], axis=1)
    rows = np.arange(len(pts))
    vec = diff[rows, k]
    norm = np.maximum(dist[rows, k], 1e-12)[:, None]
    return (vec / norm).reshape(x.shape)


def density_vocabulary(configs) -> tuple[int, ...]:
    if isinstance(configs, (MolecularConfiguration, Trajectory)):
        configs = [configs]
    zs = set()
    for c in configs:
        frames = c.frames if isinstance(c, Trajectory) else (c,)
        for f in frames:
            zs.update(int(z) for z in f.numbers)
    return tuple(sorted(zs))


def oracle_density(config: MolecularConfiguration, x, vocabulary: Sequence[int] | None = None) -> np.ndarray:
    """Per-element Gaussian densities, sigma = 0.5 * vdW radius, peak value 1."""
    vocab = tuple(vocabulary) if vocabulary is not None else density_vocabulary(config)
    x = np.asarray(x, dtype=np.float64)
    pts = x.reshape(-1, 3)
    sigma = 0.5 * config.radii
    d2 = np.sum((pts[:, None, :] - config.coords[None, :, :]) ** 2, axis=-1)
    g = np.exp(-d2 / (2.0 * sigma[None, :] ** 2))
    out = np.zeros((len(pts), len(vocab)))
    for c, z in enumerate(vocab):
        mask = config.numbers == z
        if mask.any():
            out[:, c] = g[:, mask].sum(axis=1)
    return out.reshape(x.shape[:-1] + (len(vocab),))


# ---------------------------------------------------------------------------
# synthetic data


def synth_trajectory(seed, n_atoms: int, n_frames: int, elements: Sequence[int] = (6, 7, 8),
                     times: Sequence[float] | None = None) -> Trajectory:
    """Rigid rotation about the box centre plus per-atom sinusoidal wobble.

    Atoms start uniformly in a 6 angstrom cube centred on the origin with
    pairwise separation >= 1 angstrom.  Motion parameters depend only on the
    seed, so different ``n_frames`` sample the same continuous motion.
    """
    if n_atoms < 2 or (times is None and n_frames < 2):
        raise ValueError("need at least 2 atoms and 2 frames")
    rng = np.random.default_rng(seed)
    pos = []
    attempts = 0
    while len(pos) < n_atoms:
        attempts += 1
        if attempts > 10_000:
            raise RuntimeError("could not place atoms with 1 angstrom separation in 10000 attempts")
        cand = rng.uniform(-3.0, 3.0, size=3)
        if all(np.linalg.norm(cand - p) >= 1.0 for p in pos):
            pos.append(cand)
    x0 = np.array(pos)
    numbers = rng.choice(np.asarray(elements), size=n_atoms)
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    total_angle = rng.uniform(0.25 * math.pi, math.pi)
    amp = rng.uniform(0.1, 0.5, size=n_atoms)
    dirs = rng.standard_normal((n_atoms, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    phase = rng.uniform(0.0, 2 * math.pi, size=n_atoms)

    s_values = np.linspace(0.0, 1.0, n_frames) if times is None else np.asarray(times, dtype=np.float64)
    frames = []
    for s in s_values:
        wobble = (amp * np.sin(2 * math.pi * s + phase))[:, None] * dirs
        R = axis_angle_matrix(axis, total_angle * s)
        frames.append(MolecularConfiguration((x0 + wobble) @ R.T, numbers, float(s)))
    return Trajectory(tuple(frames), s_values)


def synth_molecule(seed, n_atoms: int, elements: Sequence[int] = (6, 7, 8), min_sep: float = 1.0,
                   box: float = 6.0) -> MolecularConfiguration:
    """Static random molecule with the same placement rule as the trajectories."""
    rng = np.random.default_rng(seed)
    pos = []
    attempts = 0
    while len(pos) < n_atoms:
        attempts += 1
        if attempts > 10_000:
            raise RuntimeError(f"could not place atoms with {min_sep} angstrom separation in 10000 attempts")
        cand = rng.uniform(-box / 2, box / 2, size=3)
        if all(np.linalg.norm(cand - p) >= min_sep for p in pos):
            pos.append(cand)
    return MolecularConfiguration(np.array(pos), rng.choice(np.asarray(elements), size=n_atoms))


def geometric_targets(config: MolecularConfiguration) -> np.ndarray:
    """Synthetic regression targets: radius of gyration and mean pairwise distance (angstrom)."""
    X = config.coords
    rg = float(np.sqrt(np.mean(np.sum((X - X.mean(axis=0)) ** 2, axis=1))))
    n = len(X)
    if n < 2:
        return np.array([rg, 0.0])
    iu = np.triu_indices(n, 1)
    d = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=-1)[iu]
    return np.array([rg, float(d.mean())])


def corrupt(config: MolecularConfiguration, fraction: float, seed) -> MolecularConfiguration:
    """Drop floor(fraction * N) atoms chosen uniformly at random."""
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"corruption fraction must lie in [0, 1), got {fraction}")
    n = config.n_atoms
    k = int(math.floor(fraction * n))
    if k >= n:
        raise ValueError(f"removing {k} of {n} atoms leaves nothing")
    if k == 0:
        return config
    rng = np.random.default_rng(seed)
    drop = rng.choice(n, size=k, replace=False)
    keep = np.setdiff1d(np.arange(n), drop)
    return MolecularConfiguration(config.coords[keep], config.numbers[keep], config.time)


def bounding_box(config: MolecularConfiguration, margin: float) -> tuple[np.ndarray, np.ndarray]:
    return config.coords.min(axis=0) - margin, config.coords.max(axis=0) + margin


def _unit_vectors(rng, n) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sample_queries(config: MolecularConfiguration, n: int, near: float = 0.5, sigma_near: float = 0.1,
                   margin: float = 2.0, seed=0, frame=None) -> np.ndarray:
    """Query points: ceil(near*n) jittered surface points, the rest uniform in a box.

    Surface points lie on the boundary of the sphere union (points buried in
    a neighbouring sphere are rejected).  When ``frame`` ``(Q, centre)`` is
    given, random directions and the box are drawn in that frame, which makes
    the sample set move rigidly with the molecule for a fixed seed.
    """
    if n < 1:
        raise ValueError("need at least one query")
    rng = np.random.default_rng(seed)
    if frame is None:
        Q, centre = np.eye(3), np.zeros(3)
    else:
        Q, centre = (np.asarray(a, dtype=np.float64) for a in frame)
    n_near = min(n, int(math.ceil(near * n - 1e-12)))
    radii = config.radii
    near_pts = np.zeros((0, 3))
    rounds = 0
    while len(near_pts) < n_near:
        rounds += 1
        if rounds > 1000:
            raise RuntimeError("surface rejection sampling did not converge")
        m = 2 * (n_near - len(near_pts)) + 8
        idx = rng.integers(0, config.n_atoms, size=m)
        dirs = _unit_vectors(rng, m)
        cand = config.coords[idx] + (radii[idx, None] * dirs) @ Q.T
        ok = oracle_sdf(config, cand) >= -1e-9
        near_pts = np.concatenate([near_pts, cand[ok]])[:n_near]
    if sigma_near > 0 and n_near:
        near_pts = near_pts + (sigma_near * rng.standard_normal((n_near, 3))) @ Q.T
    n_box = n - n_near
    local = (config.coords - centre) @ Q
    lo = local.min(axis=0) - margin
    hi = local.max(axis=0) + margin
    box_pts = centre + rng.uniform(lo, hi, size=(n_box, 3)) @ Q.T
    return np.concatenate([near_pts, box_pts])
