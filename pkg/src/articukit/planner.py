"""Receding-horizon manipulation of one joint against a simulated object.

Plans are generated under the current joint estimate, only the first
``H`` waypoints are executed against the object's true kinematics, and the
estimate is refined from what actually happened before re-planning.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContactLostError, ValidationError
from .kinematics import (
    JointParams,
    axis_angular_error,
    axis_origin_error,
    displace,
    signed_rotation_angle,
)
from .refine import PlanTemplate, RefineConfig, refine_parameters, trajectory_objective
from .scene import ArticulatedObject

RUNLOG_FORMAT_VERSION = 1
CONTACT_TOL = 1e-6


@dataclass(eq=False)
class Trajectory:
    waypoints: np.ndarray
    displacements: np.ndarray

    def __post_init__(self):
        self.waypoints = np.asarray(self.waypoints, dtype=float).reshape(-1, 3)
        self.displacements = np.asarray(self.displacements, dtype=float).ravel()
        if len(self.waypoints) != len(self.displacements):
            raise ValidationError("waypoints and displacements differ in length")

    def __len__(self) -> int:
        return len(self.waypoints)

    def head(self, n: int) -> "Trajectory":
        return Trajectory(self.waypoints[:n], self.displacements[:n])

    def to_dict(self) -> dict:
        return {
            "waypoints": [[float(x) for x in w] for w in self.waypoints],
            "displacements": [float(d) for d in self.displacements],
        }


@dataclass(frozen=True)
class PlanConfig:
    L: int = 10
    H: int = 3
    target_displacement: float = 1.2
    max_iterations: int = 10
    execution_noise_sigma: float = 0.0
    convergence_tol: float = 1e-6
    axis_update_tol_deg: float = 0.01
    target_tol: float = 1e-3
    refine: RefineConfig = field(default_factory=RefineConfig)

    def __post_init__(self):
        if not 1 <= self.H < self.L:
            raise ValidationError(f"need 1 <= H < L, got H={self.H}, L={self.L}")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if self.execution_noise_sigma < 0:
            raise ValidationError("execution_noise_sigma must be nonnegative")
        if not math.isfinite(self.target_displacement):
            raise ValidationError("target_displacement must be finite")

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "refine"}
        d["refine"] = self.refine.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PlanConfig":
        d = dict(d)
        extra = set(d) - set(cls.__dataclass_fields__)
        if extra:
            raise ValidationError(f"unknown plan field(s): {sorted(extra)}")
        if "refine" in d:
            d["refine"] = RefineConfig.from_dict(d["refine"])
        return cls(**d)


def plan_trajectory(psi: JointParams, grasp_point, current: float, target: float, L: int) -> Trajectory:
    """``L`` evenly spaced displacements from ``current`` (exclusive) to ``target``.

    ``grasp_point`` is the contact point at the ``current`` displacement.
    """
    if not isinstance(psi, JointParams):
        raise ValidationError("psi must be JointParams")
    if L < 1:
        raise ValidationError("L must be >= 1")
    p = np.asarray(grasp_point, dtype=float)
    values = current + (target - current) * np.arange(1, L + 1) / L
    waypoints = np.array([displace(p, psi, v - current) for v in values])
    return Trajectory(waypoints, values)


def _contact_on_part(sim: ArticulatedObject, part_id: int, point: np.ndarray) -> bool:
    rest = _rest_point(sim, part_id, point)
    box = sim.part(part_id).shape
    return bool(np.all(np.abs(rest - box.center) <= box.half_extents + CONTACT_TOL))


def execute_steps(sim: ArticulatedObject, part_id: int, grasp_point, planned: Trajectory, H: int,
                  noise_sigma: float = 0.0, rng_seed: int = 0,
                  true_psi: JointParams | None = None) -> Trajectory:
    """Drive the true joint toward each of the first ``H`` planned waypoints.

    The gripper follows the part rigidly: each waypoint is projected onto
    the true one-parameter motion (closest reachable contact position),
    clamped to the joint limits. Mutates ``sim``; the returned trajectory
    holds measured contact positions and the true joint values reached.
    """
    if H > len(planned):
        raise ValidationError(f"H={H} exceeds the plan length {len(planned)}")
    true_psi = sim.joint(part_id) if true_psi is None else true_psi
    p0 = np.asarray(grasp_point, dtype=float)
    if not _contact_on_part(sim, part_id, p0):
        raise ContactLostError(f"grasp point {p0.tolist()} is not on part {part_id}")
    rng = np.random.default_rng(rng_seed)
    s0 = sim.state[part_id]
    waypoints, values = [], []
    for w in planned.waypoints[:H]:
        if true_psi.is_revolute:
            s = s0 + signed_rotation_angle(p0, w, true_psi)
        else:
            s = s0 + float((w - p0) @ true_psi.axis_dir)
        s = sim.clamp(part_id, s)
        sim.set_joint_state(part_id, s)
        pos = displace(p0, true_psi, s - s0)
        if noise_sigma > 0:
            pos = pos + rng.normal(0.0, noise_sigma, size=3)
        waypoints.append(pos)
        values.append(s)
    return Trajectory(np.array(waypoints), np.array(values))


@dataclass(eq=False)
class IterationRecord:
    psi_estimate: JointParams
    planned: Trajectory
    actual: Trajectory
    objective: float
    axis_error_deg: float
    origin_error_m: float | None

    def to_dict(self) -> dict:
        return {
            "psi_estimate": self.psi_estimate.to_dict(),
            "planned": self.planned.to_dict(),
            "actual": self.actual.to_dict(),
            "objective": float(self.objective),
            "axis_error_deg": float(self.axis_error_deg),
            "origin_error_m": None if self.origin_error_m is None else float(self.origin_error_m),
        }


@dataclass(eq=False)
class RunLog:
    iterations: list[IterationRecord]
    final_psi: JointParams
    converged: bool
    initial_psi: JointParams | None = None
    true_psi: JointParams | None = None
    grasp: dict | None = None
    stop_reason: str = ""

    @property
    def objectives(self) -> list[float]:
        return [it.objective for it in self.iterations]

    def to_dict(self) -> dict:
        return {
            "format_version": RUNLOG_FORMAT_VERSION,
            "converged": bool(self.converged),
            "stop_reason": self.stop_reason,
            "initial_psi": None if self.initial_psi is None else self.initial_psi.to_dict(),
            "true_psi": None if self.true_psi is None else self.true_psi.to_dict(),
            "final_psi": self.final_psi.to_dict(),
            "grasp": self.grasp,
            "iterations": [it.to_dict() for it in self.iterations],
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n")


def _errors(est: JointParams, gt: JointParams) -> tuple[float, float | None]:
    axis = axis_angular_error(est.axis_dir, gt.axis_dir)
    origin = axis_origin_error(est, gt) if (est.is_revolute and gt.is_revolute) else None
    return axis, origin


def _believed_displacement(psi: JointParams, start, point) -> float:
    if psi.is_revolute:
        return signed_rotation_angle(start, point, psi)
    return float((np.asarray(point) - start) @ psi.axis_dir)


def receding_horizon_run(sim: ArticulatedObject, part_id: int, initial_psi: JointParams, grasp,
                         config: PlanConfig = PlanConfig(), rng_seed: int = 0) -> RunLog:
    """Plan ``L`` steps, execute ``H``, refine, repeat.

    Each refinement sees every actual waypoint so far, matched against the
    initial grasp point moved by the candidate joint (a following
    :class:`PlanTemplate`), so the objective is zero only for joints that
    reproduce the whole executed path. The target is a displacement relative to the joint state at the start
    of the run. Stops when the believed displacement reaches the target,
    when the objective or the axis update falls below tolerance, or when
    the iteration budget is spent. ``converged`` is set for the two
    tolerance stops and for reaching the target with objective below
    tolerance.
    """
    point = getattr(grasp, "point", grasp)
    p_start = np.asarray(point, dtype=float)
    true_psi = sim.joint(part_id)
    psi = initial_psi
    contact = p_start.copy()
    believed = 0.0
    template = PlanTemplate(p_start.copy())
    actual_all: list[np.ndarray] = []
    records: list[IterationRecord] = []
    converged, reason = False, "max_iterations"
    grasp_rest = _rest_point(sim, part_id, p_start)

    for it in range(config.max_iterations):
        plan = plan_trajectory(psi, contact, believed, config.target_displacement, config.L)
        true_contact = sim.pose_points(part_id, grasp_rest)
        actual = execute_steps(sim, part_id, true_contact, plan, config.H,
                               config.execution_noise_sigma, rng_seed * 1000003 + it, true_psi)
        actual_all.append(actual.waypoints)
        A = np.vstack(actual_all)
        new_psi = refine_parameters(psi, A, template, config.refine)
        objective = trajectory_objective(new_psi, A, template).value
        axis_err, origin_err = _errors(new_psi, true_psi)
        records.append(IterationRecord(new_psi, plan, actual, objective, axis_err, origin_err))

        axis_update = axis_angular_error(new_psi.axis_dir, psi.axis_dir)
        psi = new_psi
        contact = actual.waypoints[-1].copy()
        believed = _believed_displacement(psi, p_start, contact)

        if objective < config.convergence_tol:
            converged, reason = True, "objective"
            break
        if it > 0 and axis_update < config.axis_update_tol_deg:
            converged, reason = True, "axis_update"
            break
        if abs(config.target_displacement - believed) < config.target_tol:
            reason = "target"
            break

    return RunLog(records, psi, converged, initial_psi, true_psi,
                  {"point": p_start.tolist()}, reason)


def _rest_point(sim: ArticulatedObject, part_id: int, point: np.ndarray) -> np.ndarray:
    T = sim.transform(part_id)
    return T[:3, :3].T @ (point - T[:3, 3])
