"""Synthetic articulated objects, labeled point clouds and per-point fields.

Objects are cabinet-like: a static box body plus movable box parts, each
attached to one revolute or prismatic joint. ``ground_truth_fields``
computes the per-point targets a segmentation/offset/axis network would
regress, and ``corrupt_fields`` degrades them to emulate its predictions.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import JointLimitError, ValidationError
from .kinematics import (
    JointParams,
    Semantic,
    as_vec3,
    displace,
    project_point_to_axis,
    rotation_matrix,
)

SCENE_FORMAT_VERSION = 1
STATIC_AXIS_SENTINEL = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class Box:
    center: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        c = as_vec3(self.center, "center")
        h = as_vec3(self.half_extents, "half_extents")
        if np.any(h <= 0):
            raise ValidationError("box half-extents must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_extents", h)

    def faces(self):
        """Yield ``(center, normal, half_u, half_v)`` for the six faces."""
        for axis in range(3):
            a, b = [k for k in range(3) if k != axis]
            hu = np.zeros(3)
            hv = np.zeros(3)
            hu[a] = self.half_extents[a]
            hv[b] = self.half_extents[b]
            for sign in (1.0, -1.0):
                n = np.zeros(3)
                n[axis] = sign
                yield self.center + self.half_extents[axis] * n, n, hu, hv

    def face_areas(self) -> np.ndarray:
        h = self.half_extents
        per_axis = [4 * h[1] * h[2], 4 * h[0] * h[2], 4 * h[0] * h[1]]
        return np.repeat(per_axis, 2)

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "half_extents": self.half_extents.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Box":
        return cls(d["center"], d["half_extents"])


@dataclass(frozen=True, eq=False)
class PartSpec:
    part_id: int
    joint: JointParams
    shape: Box
    state_range: tuple[float, float]

    def __post_init__(self):
        lo, hi = (float(x) for x in self.state_range)
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
            raise ValidationError(f"part {self.part_id}: invalid state range [{lo}, {hi}]")
        if int(self.part_id) < 1:
            raise ValidationError("part ids must be >= 1 (0 is reserved for the static body)")
        object.__setattr__(self, "part_id", int(self.part_id))
        object.__setattr__(self, "state_range", (lo, hi))

    @property
    def semantic(self) -> Semantic:
        return self.joint.joint_type

    def to_dict(self) -> dict:
        return {
            "part_id": self.part_id,
            "joint": self.joint.to_dict(),
            "shape": self.shape.to_dict(),
            "state_range": list(self.state_range),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PartSpec":
        return cls(
            int(d["part_id"]),
            JointParams.from_dict(d["joint"]),
            Box.from_dict(d["shape"]),
            tuple(d["state_range"]),
        )


@dataclass(frozen=True, eq=False)
class ObjectSpec:
    static_shape: Box
    parts: tuple[PartSpec, ...]
    rng_seed: int = 0
    initial_state: dict | None = None

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValidationError("an object needs at least one movable part")
        ids = [p.part_id for p in parts]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate part ids: {ids}")
        object.__setattr__(self, "parts", parts)

    def to_dict(self) -> dict:
        d = {
            "format_version": SCENE_FORMAT_VERSION,
            "static_shape": self.static_shape.to_dict(),
            "parts": [p.to_dict() for p in self.parts],
            "rng_seed": int(self.rng_seed),
        }
        if self.initial_state:
            d["initial_state"] = {str(k): float(v) for k, v in sorted(self.initial_state.items())}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectSpec":
        version = d.get("format_version")
        if version != SCENE_FORMAT_VERSION:
            raise ValidationError(f"unsupported scene format_version {version!r}")
        try:
            init = d.get("initial_state")
            return cls(
                Box.from_dict(d["static_shape"]),
                tuple(PartSpec.from_dict(p) for p in d["parts"]),
                int(d.get("rng_seed", 0)),
                {int(k): float(v) for k, v in init.items()} if init else None,
            )
        except KeyError as exc:
            raise ValidationError(f"scene is missing field {exc.args[0]!r}") from None


class ArticulatedObject:
    """Mutable joint state over an immutable :class:`ObjectSpec`.

    Part geometry is defined at displacement 0; each part starts at the
    low end of its range unless its PartSpec gives an ``initial_state``.
    """

    def __init__(self, spec: ObjectSpec):
        self.spec = spec
        self.parts = {p.part_id: p for p in spec.parts}
        self.state = {pid: p.state_range[0] for pid, p in self.parts.items()}
        for pid, value in (spec.initial_state or {}).items():
            self.set_joint_state(pid, value)

    @property
    def n_parts(self) -> int:
        return len(self.parts)

    def part(self, part_id: int) -> PartSpec:
        try:
            return self.parts[part_id]
        except KeyError:
            raise ValidationError(f"no part with id {part_id}") from None

    def joint(self, part_id: int) -> JointParams:
        return self.part(part_id).joint

    def set_joint_state(self, part_id: int, displacement: float) -> "ArticulatedObject":
        lo, hi = self.part(part_id).state_range
        if not (lo <= displacement <= hi):
            raise JointLimitError(
                f"part {part_id}: displacement {displacement:.6g} outside [{lo:.6g}, {hi:.6g}]"
            )
        self.state[part_id] = float(displacement)
        return self

    def clamp(self, part_id: int, displacement: float) -> float:
        lo, hi = self.part(part_id).state_range
        return min(max(displacement, lo), hi)

    def transform(self, part_id: int) -> np.ndarray:
        """4x4 homogeneous transform from rest pose to the current pose."""
        joint = self.joint(part_id)
        value = self.state[part_id]
        T = np.eye(4)
        if joint.is_revolute:
            R = rotation_matrix(joint.axis_dir, value)
            T[:3, :3] = R
            T[:3, 3] = joint.origin - R @ joint.origin
        else:
            T[:3, 3] = value * joint.axis_dir
        return T

    def pose_points(self, part_id: int, rest_points) -> np.ndarray:
        """Map rest-pose points of a part to their current positions."""
        if part_id == 0:
            return np.asarray(rest_points, dtype=float)
        return displace(rest_points, self.joint(part_id), self.state[part_id])

    def copy(self) -> "ArticulatedObject":
        other = ArticulatedObject.__new__(ArticulatedObject)
        other.spec = self.spec
        other.parts = self.parts
        other.state = dict(self.state)
        return other


def build_object(spec: ObjectSpec) -> ArticulatedObject:
    return ArticulatedObject(spec)


def set_joint_state(obj: ArticulatedObject, part_id: int, displacement: float) -> ArticulatedObject:
    return obj.set_joint_state(part_id, displacement)


@dataclass(eq=False)
class LabeledCloud:
    points: np.ndarray
    part_id: np.ndarray
    semantic: np.ndarray
    normals: np.ndarray | None = None
    rest_points: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        n = len(self.points)
        self.part_id = np.asarray(self.part_id, dtype=np.int64)
        self.semantic = np.asarray(self.semantic, dtype=np.int64)
        if self.part_id.shape != (n,) or self.semantic.shape != (n,):
            raise ValidationError("cloud label arrays must match the point count")
        if self.normals is not None:
            self.normals = np.asarray(self.normals, dtype=float).reshape(-1, 3)
            if len(self.normals) != n:
                raise ValidationError("normals must match the point count")

    def __len__(self) -> int:
        return len(self.points)

    def subset(self, index) -> "LabeledCloud":
        index = np.asarray(index)
        return LabeledCloud(
            self.points[index],
            self.part_id[index],
            self.semantic[index],
            None if self.normals is None else self.normals[index],
            None if self.rest_points is None else self.rest_points[index],
        )


def sample_cloud(obj: ArticulatedObject, n_points: int, rng_seed: int, viewpoint=None) -> LabeledCloud:
    """Sample points uniformly by area over every box face of the object.

    With ``viewpoint`` set, only points whose outward normal faces the
    viewpoint are kept (a cheap partial-view approximation), so fewer than
    ``n_points`` may be returned.
    """
    if n_points < 1:
        raise ValidationError("n_points must be >= 1")
    rng = np.random.default_rng(rng_seed)
    owners = [(0, obj.spec.static_shape)] + [(p.part_id, p.shape) for p in obj.spec.parts]
    face_center, face_normal, face_u, face_v, face_owner, areas = [], [], [], [], [], []
    for pid, box in owners:
        for (c, n, hu, hv), a in zip(box.faces(), box.face_areas()):
            face_center.append(c)
            face_normal.append(n)
            face_u.append(hu)
            face_v.append(hv)
            face_owner.append(pid)
            areas.append(a)
    areas = np.asarray(areas)
    face_idx = rng.choice(len(areas), size=n_points, p=areas / areas.sum())
    st = rng.uniform(-1.0, 1.0, size=(n_points, 2))
    fc, fn = np.asarray(face_center), np.asarray(face_normal)
    fu, fv = np.asarray(face_u), np.asarray(face_v)
    rest = fc[face_idx] + st[:, :1] * fu[face_idx] + st[:, 1:] * fv[face_idx]
    normals = fn[face_idx].copy()
    part_id = np.asarray(face_owner, dtype=np.int64)[face_idx]

    points = rest.copy()
    semantic = np.zeros(n_points, dtype=np.int64)
    for pid in obj.parts:
        m = part_id == pid
        if not m.any():
            continue
        points[m] = obj.pose_points(pid, rest[m])
        R = obj.transform(pid)[:3, :3]
        normals[m] = normals[m] @ R.T
        semantic[m] = int(obj.joint(pid).joint_type)

    cloud = LabeledCloud(points, part_id, semantic, normals, rest)
    if viewpoint is not None:
        vp = as_vec3(viewpoint, "viewpoint")
        visible = np.einsum("ij,ij->i", normals, vp - points) > 0
        cloud = cloud.subset(np.flatnonzero(visible))
    return cloud


@dataclass(eq=False)
class PerPointFields:
    """Per-point class probabilities, offsets, projections and axis votes.

    ``index`` maps each row back to its point in the source cloud; it
    changes only when points are dropped.
    """

    class_probs: np.ndarray
    offset: np.ndarray
    projection: np.ndarray
    axis_dir: np.ndarray
    index: np.ndarray | None = None

    def __post_init__(self):
        self.class_probs = np.asarray(self.class_probs, dtype=float).reshape(-1, 3)
        n = len(self.class_probs)
        for name in ("offset", "projection", "axis_dir"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1, 3)
            if len(arr) != n:
                raise ValidationError(f"field {name!r} has {len(arr)} rows, expected {n}")
            setattr(self, name, arr)
        self.index = np.arange(n) if self.index is None else np.asarray(self.index, dtype=np.int64)
        if self.index.shape != (n,):
            raise ValidationError("index must have one entry per point")

    def __len__(self) -> int:
        return len(self.class_probs)

    def predicted_class(self) -> np.ndarray:
        return np.argmax(self.class_probs, axis=1)

    def subset(self, rows) -> "PerPointFields":
        rows = np.asarray(rows)
        return PerPointFields(
            self.class_probs[rows],
            self.offset[rows],
            self.projection[rows],
            self.axis_dir[rows],
            self.index[rows],
        )

    def validate(self, tol: float = 1e-6) -> None:
        p = self.class_probs
        if np.any(p < -tol) or np.any(np.abs(p.sum(axis=1) - 1.0) > tol):
            raise ValidationError("class_probs rows must be nonnegative and sum to 1")
        if np.any(np.abs(np.linalg.norm(self.axis_dir, axis=1) - 1.0) > tol):
            raise ValidationError("axis_dir rows must be unit vectors")


def ground_truth_fields(cloud: LabeledCloud, obj: ArticulatedObject) -> PerPointFields:
    n = len(cloud)
    ids = set(np.unique(cloud.part_id).tolist()) - {0}
    unknown = ids - set(obj.parts)
    if unknown:
        raise ValidationError(f"cloud references parts not in the object: {sorted(unknown)}")
    class_probs = np.zeros((n, 3))
    class_probs[np.arange(n), cloud.semantic] = 1.0
    offset = np.zeros((n, 3))
    projection = np.zeros((n, 3))
    axis_dir = np.tile(STATIC_AXIS_SENTINEL, (n, 1))
    for pid in sorted(ids):
        m = cloud.part_id == pid
        joint = obj.joint(pid)
        if np.any(cloud.semantic[m] != int(joint.joint_type)):
            raise ValidationError(f"part {pid}: cloud semantics disagree with the joint type")
        pts = cloud.points[m]
        offset[m] = pts.mean(axis=0) - pts
        projection[m] = project_point_to_axis(pts, joint)[1]
        axis_dir[m] = joint.axis_dir
    return PerPointFields(class_probs, offset, projection, axis_dir)


@dataclass(frozen=True)
class NoiseModel:
    class_flip_prob: float = 0.0
    offset_sigma: float = 0.0
    projection_sigma: float = 0.0
    axis_dir_sigma: float = 0.0
    dropout_frac: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.class_flip_prob <= 1.0:
            raise ValidationError("class_flip_prob must lie in [0, 1]")
        if not 0.0 <= self.dropout_frac < 1.0:
            raise ValidationError("dropout_frac must lie in [0, 1)")
        for name in ("offset_sigma", "projection_sigma", "axis_dir_sigma"):
            if not getattr(self, name) >= 0.0:
                raise ValidationError(f"{name} must be nonnegative")

    def with_seed(self, seed: int) -> "NoiseModel":
        return replace(self, rng_seed=int(seed))

    def to_dict(self) -> dict:
        return {
            "class_flip_prob": self.class_flip_prob,
            "offset_sigma": self.offset_sigma,
            "projection_sigma": self.projection_sigma,
            "axis_dir_sigma": self.axis_dir_sigma,
            "dropout_frac": self.dropout_frac,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValidationError(f"unknown noise field(s): {sorted(extra)}")
        kwargs = {k: (int(v) if k == "rng_seed" else float(v)) for k, v in d.items()}
        return cls(**kwargs)


def random_perpendicular(d: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random unit vectors perpendicular to each row of ``d``."""
    while True:
        r = rng.normal(size=d.shape)
        k = np.cross(d, r)
        norms = np.linalg.norm(k, axis=1)
        if np.all(norms > 1e-9):
            return k / norms[:, None]


def corrupt_fields(fields: PerPointFields, noise: NoiseModel) -> PerPointFields:
    """Emulate network predictions by degrading (usually oracle) fields.

    Draw order is fixed, so the output is bit-reproducible for a seed.
    Zero-valued noise terms leave the corresponding arrays untouched.
    """
    rng = np.random.default_rng(noise.rng_seed)
    n = len(fields)
    class_probs = fields.class_probs.copy()
    offset = fields.offset.copy()
    projection = fields.projection.copy()
    axis_dir = fields.axis_dir.copy()

    flip = rng.random(n) < noise.class_flip_prob
    shift = rng.integers(1, 3, size=n)
    if flip.any():
        new_class = (fields.predicted_class() + shift) % 3
        class_probs[flip] = 0.0
        class_probs[np.flatnonzero(flip), new_class[flip]] = 1.0

    if noise.offset_sigma > 0:
        offset += rng.normal(0.0, noise.offset_sigma, size=(n, 3))
    if noise.projection_sigma > 0:
        projection += rng.normal(0.0, noise.projection_sigma, size=(n, 3))
    if noise.axis_dir_sigma > 0 and n:
        angle = np.abs(rng.normal(0.0, noise.axis_dir_sigma, size=n))
        k = random_perpendicular(axis_dir, rng)
        axis_dir = axis_dir * np.cos(angle)[:, None] + np.cross(k, axis_dir) * np.sin(angle)[:, None]
        axis_dir /= np.linalg.norm(axis_dir, axis=1)[:, None]

    keep = np.arange(n)
    n_drop = int(round(noise.dropout_frac * n))
    if n_drop:
        dropped = rng.choice(n, size=n_drop, replace=False)
        keep = np.setdiff1d(keep, dropped)
    return PerPointFields(
        class_probs[keep], offset[keep], projection[keep], axis_dir[keep], fields.index[keep]
    )


# -- random cabinet generator -------------------------------------------------

def random_cabinet(seed: int, n_parts: int | None = None, max_parts: int = 3,
                   randomize_state: bool = True) -> ObjectSpec:
    """A static box body whose front face carries 1-3 doors, flaps or drawers.

    The front face (+x) is split into horizontal bands, one per part.
    Doors hinge on a vertical edge, flaps on the band's bottom edge, and
    drawers slide along +x.
    """
    rng = np.random.default_rng(seed)
    if n_parts is None:
        n_parts = int(rng.integers(1, max_parts + 1))
    hx = rng.uniform(0.18, 0.28)
    hy = rng.uniform(0.22, 0.35)
    hz = rng.uniform(0.28, 0.45)
    body = Box([0.0, 0.0, hz], [hx, hy, hz])
    gap = 0.01
    band = (2 * hz - gap * (n_parts + 1)) / n_parts
    thickness = 0.02
    parts = []
    state = {}
    for k in range(n_parts):
        pid = k + 1
        z_lo = gap + k * (band + gap)
        zc = z_lo + band / 2
        kind = rng.choice(["door", "flap", "drawer"], p=[0.45, 0.15, 0.40])
        if kind == "door":
            side = rng.choice([-1.0, 1.0])
            shape = Box([hx + thickness / 2, 0.0, zc], [thickness / 2, hy, band / 2])
            joint = JointParams([0.0, 0.0, side], [hx, side * hy, zc], Semantic.REVOLUTE)
            rng_hi = float(rng.uniform(1.2, 1.9))
        elif kind == "flap":
            shape = Box([hx + thickness / 2, 0.0, zc], [thickness / 2, hy, band / 2])
            joint = JointParams([0.0, 1.0, 0.0], [hx, 0.0, z_lo], Semantic.REVOLUTE)
            rng_hi = float(rng.uniform(1.0, 1.5))
        else:
            depth = rng.uniform(0.6, 0.9) * 2 * hx
            shape = Box([hx + thickness - depth / 2, 0.0, zc],
                        [depth / 2, 0.9 * hy, 0.45 * band])
            joint = JointParams([1.0, 0.0, 0.0], [hx, 0.0, zc], Semantic.PRISMATIC)
            rng_hi = float(0.8 * depth)
        parts.append(PartSpec(pid, joint, shape, (0.0, rng_hi)))
        if randomize_state:
            state[pid] = float(rng.uniform(0.0, rng_hi))
    return ObjectSpec(body, tuple(parts), int(seed), state or None)


# -- file formats -------------------------------------------------------------

CLOUD_HEADER = "# articukit-cloud v1 N={n}"


def save_scene(spec: ObjectSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")


def load_scene(path) -> ObjectSpec:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return ObjectSpec.from_dict(data)


def save_cloud(cloud: LabeledCloud, path) -> None:
    lines = [CLOUD_HEADER.format(n=len(cloud))]
    for (x, y, z), pid, sem in zip(cloud.points, cloud.part_id, cloud.semantic):
        lines.append(f"{x:.17g} {y:.17g} {z:.17g} {pid} {sem}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_cloud(path) -> LabeledCloud:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# articukit-cloud v1 N="):
            raise ValidationError(f"{path}: line 1: not an articukit-cloud v1 file")
        try:
            n = int(header.split("N=", 1)[1])
        except ValueError:
            raise ValidationError(f"{path}: line 1: bad point count") from None
        pts, pid, sem = [], [], []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 5:
                raise ValidationError(f"{path}: line {lineno}: expected 5 columns")
            try:
                pts.append([float(v) for v in parts[:3]])
                pid.append(int(parts[3]))
                sem.append(int(parts[4]))
            except ValueError:
                raise ValidationError(f"{path}: line {lineno}: malformed record") from None
    if len(pts) != n:
        raise ValidationError(f"{path}: header says N={n} but found {len(pts)} records")
    return LabeledCloud(np.asarray(pts).reshape(-1, 3), pid, sem)


FIELDS_HEADER = "# articukit-fields v1 N={n}"


def save_fields(fields: PerPointFields, path) -> None:
    """One row per point: cloud index, 3 class probs, offset, projection, axis."""
    lines = [FIELDS_HEADER.format(n=len(fields))]
    body = np.hstack([fields.class_probs, fields.offset, fields.projection, fields.axis_dir])
    for i, row in zip(fields.index, body):
        lines.append(f"{i} " + " ".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_fields(path) -> PerPointFields:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# articukit-fields v1 N="):
            raise ValidationError(f"{path}: line 1: not an articukit-fields v1 file")
        try:
            n = int(header.split("N=", 1)[1])
        except ValueError:
            raise ValidationError(f"{path}: line 1: bad point count") from None
        index, rows = [], []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 13:
                raise ValidationError(f"{path}: line {lineno}: expected 13 columns")
            try:
                index.append(int(parts[0]))
                rows.append([float(v) for v in parts[1:]])
            except ValueError:
                raise ValidationError(f"{path}: line {lineno}: malformed record") from None
    if len(rows) != n:
        raise ValidationError(f"{path}: header says N={n} but found {len(rows)} records")
    a = np.asarray(rows, dtype=float).reshape(-1, 12)
    fields = PerPointFields(a[:, 0:3], a[:, 3:6], a[:, 6:9], a[:, 9:12], index)
    fields.validate()
    return fields
