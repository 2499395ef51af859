"""Joint-parameter refinement from executed trajectories.

Actual contact-point waypoints are matched to waypoints re-planned under a
candidate joint (Hungarian assignment), and the mean matched distance is
minimized over the joint's observable parameters by alternating between
matching and finite-difference descent.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import ValidationError
from .kinematics import JointParams


@dataclass(frozen=True)
class Assignment:
    pairs: tuple[tuple[int, int], ...]
    total_cost: float

    @property
    def cols(self) -> np.ndarray:
        return np.array([c for _, c in self.pairs], dtype=np.int64)


def _matched_sum(C: np.ndarray, cols) -> float:
    total = 0.0
    for r, c in enumerate(cols):
        total += float(C[r, c])
    return total


def hungarian(cost, lexicographic: bool = True) -> Assignment:
    """Minimum-cost assignment of every row to a distinct column (rows <= cols).

    Among optimal assignments, the lexicographically smallest list of
    ``(row, col)`` pairs is returned. ``lexicographic=False`` skips that
    tie-breaking pass (same cost, arbitrary optimal pairs; much faster for
    wide matrices).
    """
    C = np.ascontiguousarray(cost, dtype=float)
    if C.ndim != 2:
        raise ValidationError("cost must be a 2-D matrix")
    H, L = C.shape
    if H > L:
        raise ValidationError(f"cannot assign {H} rows to {L} columns")
    if not np.all(np.isfinite(C)) or np.any(C < 0):
        raise ValidationError("costs must be finite and nonnegative")
    if H == 0:
        return Assignment((), 0.0)

    cols = [int(c) for c in kernels.solve_assignment(C)]
    best = _matched_sum(C, cols)
    if not lexicographic:
        return Assignment(tuple(enumerate(cols)), best)
    tol = 1e-12 * max(1.0, abs(best))
    # walk rows in order, moving each to the smallest column that keeps optimality
    fixed_cost = 0.0
    for r in range(H):
        taken = set(cols[:r])
        rest_rows = np.arange(r + 1, H)
        for c in range(cols[r]):
            if c in taken:
                continue
            free = np.array([j for j in range(L) if j not in taken and j != c], dtype=np.int64)
            sub = C[np.ix_(rest_rows, free)]
            sub_cols = kernels.solve_assignment(sub) if len(rest_rows) else np.zeros(0, dtype=np.int64)
            trial = fixed_cost + float(C[r, c]) + _matched_sum(sub, sub_cols)
            if trial <= best + tol:
                cols[r] = c
                cols[r + 1:] = [int(free[k]) for k in sub_cols]
                break
        fixed_cost += float(C[r, cols[r]])
    pairs = tuple((r, c) for r, c in enumerate(cols))
    return Assignment(pairs, _matched_sum(C, cols))


class PlanTemplate(NamedTuple):
    """A plan segment: start contact point and displacements relative to it.

    ``displacements=None`` makes the template follow the candidate joint:
    its waypoints sit at the displacements that joint attributes to the
    actual waypoints, so each matched distance is the distance from an
    actual waypoint to the candidate's orbit of ``grasp_point``.
    """

    grasp_point: np.ndarray
    displacements: np.ndarray | None = None


def _as_templates(template) -> list[PlanTemplate]:
    if isinstance(template, PlanTemplate):
        return [template]
    if isinstance(template, dict):
        template = [template]
    out = []
    for t in template:
        if isinstance(t, dict):
            t = (t["grasp_point"], t.get("displacements"))
        d = None if t[1] is None else np.asarray(t[1], dtype=float)
        out.append(PlanTemplate(np.asarray(t[0], dtype=float), d))
    if any(t.displacements is None for t in out) and len(out) != 1:
        raise ValidationError("a following template cannot be mixed with other segments")
    return out


def _following(templates: Sequence[PlanTemplate]) -> bool:
    return templates[0].displacements is None


def observed_displacements(start, points, u: np.ndarray, q: np.ndarray, revolute: bool) -> np.ndarray:
    """Displacement of each point relative to ``start`` under the joint ``(u, q)``."""
    P = np.asarray(points, dtype=float).reshape(-1, 3)
    x0 = np.asarray(start, dtype=float) - q
    if not revolute:
        return (P - np.asarray(start, dtype=float)) @ u
    x0 = x0 - (x0 @ u) * u
    X = P - q
    X = X - np.outer(X @ u, u)
    return np.arctan2(_cross(x0, X) @ u, X @ x0)


class _Columns(NamedTuple):
    starts: np.ndarray
    values: np.ndarray


def _columns(templates: Sequence[PlanTemplate], psi: JointParams | None = None,
             A: np.ndarray | None = None) -> _Columns:
    if _following(templates):
        g = np.asarray(templates[0].grasp_point, dtype=float)
        values = observed_displacements(g, A, psi.axis_dir, psi.origin, psi.is_revolute)
        return _Columns(np.tile(g, (len(values), 1)), values)
    starts, values = [], []
    for t in templates:
        d = np.asarray(t.displacements, dtype=float).ravel()
        starts.append(np.tile(np.asarray(t.grasp_point, dtype=float), (len(d), 1)))
        values.append(d)
    if not values or sum(len(v) for v in values) == 0:
        raise ValidationError("plan template has no waypoints")
    return _Columns(np.vstack(starts), np.concatenate(values))


def _cross(u: np.ndarray, X: np.ndarray) -> np.ndarray:
    # u x X row-wise; np.cross is slow for the small arrays used here
    out = np.empty_like(X)
    out[:, 0] = u[1] * X[:, 2] - u[2] * X[:, 1]
    out[:, 1] = u[2] * X[:, 0] - u[0] * X[:, 2]
    out[:, 2] = u[0] * X[:, 1] - u[1] * X[:, 0]
    return out


def _displace_many(starts: np.ndarray, values: np.ndarray, u: np.ndarray, q: np.ndarray,
                   revolute: bool) -> np.ndarray:
    if not revolute:
        return starts + values[:, None] * u
    x = starts - q
    c = np.cos(values)[:, None]
    s = np.sin(values)[:, None]
    return x * c + _cross(u, x) * s + np.outer(x @ u, u) * (1.0 - c) + q


def replan(psi: JointParams, template, actual=None) -> np.ndarray:
    """Template waypoints under ``psi`` (a following template needs ``actual``)."""
    templates = _as_templates(template)
    A = None
    if _following(templates):
        if actual is None:
            raise ValidationError("a following template needs the actual waypoints")
        A = _actual_points(actual)
    cols = _columns(templates, psi, A)
    return _displace_many(cols.starts, cols.values, psi.axis_dir, psi.origin, psi.is_revolute)


def _actual_points(actual) -> np.ndarray:
    pts = getattr(actual, "waypoints", actual)
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise ValidationError("actual trajectory is empty")
    return pts


def cost_matrix(actual_pts: np.ndarray, planned_pts: np.ndarray) -> np.ndarray:
    diff = actual_pts[:, None, :] - planned_pts[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


class Objective(NamedTuple):
    value: float
    assignment: Assignment


def trajectory_objective(psi: JointParams, actual, plan_template,
                         lexicographic: bool = True) -> Objective:
    """Mean Hungarian-matched distance between actual and re-planned waypoints."""
    A = _actual_points(actual)
    P = replan(psi, plan_template, A)
    match = hungarian(cost_matrix(A, P), lexicographic)
    return Objective(match.total_cost / len(A), match)


@dataclass(frozen=True)
class RefineConfig:
    step_size: float = 0.05
    max_inner_iterations: int = 60
    grad_epsilon: float = 1e-7
    tolerance: float = 1e-12
    relative_tolerance: float = 1e-6
    max_outer_iterations: int = 20
    min_step: float = 1e-6

    def __post_init__(self):
        for name in ("step_size", "grad_epsilon", "tolerance", "relative_tolerance", "min_step"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.max_inner_iterations < 1 or self.max_outer_iterations < 1:
            raise ValidationError("iteration budgets must be >= 1")

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "RefineConfig":
        extra = set(d) - set(cls.__dataclass_fields__)
        if extra:
            raise ValidationError(f"unknown refine field(s): {sorted(extra)}")
        return cls(**d)


def _tangent_basis(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.eye(3)[int(np.argmin(np.abs(u)))]
    e1 = np.cross(u, a)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(u, e1)


class _MatchedCost:
    """Matched-pair cost as a function of local coordinates around ``psi``.

    Coordinates are ``(a, b[, c, d])``: the axis moves to
    ``normalize(u + a e1 + b e2)``; for revolute joints the origin moves to
    ``q + c e1 + d e2``, staying in the plane through ``q`` normal to ``u``.
    """

    def __init__(self, psi: JointParams, A: np.ndarray, cols: _Columns, match: Assignment,
                 following: bool = False):
        self.psi = psi
        self.A = A
        idx = match.cols
        self.starts = cols.starts[idx]
        self.values = cols.values[idx]
        self.following = following
        self.e1, self.e2 = _tangent_basis(psi.axis_dir)
        self.dim = 4 if psi.is_revolute else 2

    def params(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        u = self.psi.axis_dir + z[0] * self.e1 + z[1] * self.e2
        u = u / np.linalg.norm(u)
        q = self.psi.origin
        if self.dim == 4:
            q = q + z[2] * self.e1 + z[3] * self.e2
        return u, q

    def residuals(self, z: np.ndarray) -> np.ndarray:
        u, q = self.params(z)
        values = self.values
        if self.following:
            values = observed_displacements(self.starts[0], self.A, u, q, self.psi.is_revolute)
        return self.A - _displace_many(self.starts, values, u, q, self.psi.is_revolute)

    def __call__(self, z: np.ndarray) -> float:
        r = self.residuals(z)
        return float(np.sum(np.sqrt(np.einsum("ij,ij->i", r, r)))) / len(self.A)

    def jacobian(self, r0: np.ndarray, h: float) -> np.ndarray:
        """Forward-difference Jacobian of the stacked residuals."""
        J = np.empty((r0.size, self.dim))
        for k in range(self.dim):
            z = np.zeros(self.dim)
            z[k] = h
            J[:, k] = (self.residuals(z) - r0).ravel() / h
        return J

    def to_joint(self, z: np.ndarray) -> JointParams:
        u, q = self.params(z)
        return JointParams(u, q, self.psi.joint_type)


def _descend(psi: JointParams, A: np.ndarray, cols: _Columns, match: Assignment,
             config: RefineConfig, following: bool = False) -> JointParams:
    """Descent on the matched cost with the assignment held fixed.

    Each step tries a reweighted Gauss-Newton direction built from a
    finite-difference Jacobian (weights ``1/|r_h|`` turn the sum of
    distances into a least-squares problem), then the plain negative
    gradient, backtracking by halving until the cost strictly decreases.
    """
    for _ in range(config.max_inner_iterations):
        fn = _MatchedCost(psi, A, cols, match, following)
        r0 = fn.residuals(np.zeros(fn.dim))
        dist = np.sqrt(np.einsum("ij,ij->i", r0, r0))
        f_cur = float(dist.sum()) / len(A)
        if f_cur <= config.tolerance:
            break
        J = fn.jacobian(r0, config.grad_epsilon)
        # floor keeps exactly-fitted points from pinning the solution
        w = 1.0 / np.maximum(dist, 0.1 * float(dist.mean()))
        JW = J * np.repeat(w, 3)[:, None]
        grad = JW.T @ r0.ravel()
        N = JW.T @ J
        damping = 1e-9 * max(float(np.trace(N)), 1e-12) / fn.dim
        try:
            gn = -np.linalg.solve(N + damping * np.eye(fn.dim), grad)
        except np.linalg.LinAlgError:
            gn = -grad
        true_grad = J.T @ (r0 / np.maximum(dist, 1e-300)[:, None]).ravel()
        g_norm = float(np.linalg.norm(true_grad))
        candidates = [(gn, 1.0)]
        if g_norm > 0:
            candidates.append((-true_grad / g_norm, config.step_size))
        z_best = None
        for direction, step in candidates:
            while step * np.linalg.norm(direction) >= config.min_step * 1e-6 and step >= 1e-12:
                z = step * direction
                f_new = fn(z)
                if f_new < f_cur:
                    z_best = z
                    break
                step *= 0.5
            if z_best is not None:
                break
        if z_best is None:
            break
        psi = fn.to_joint(z_best)
        if f_cur - f_new <= max(config.tolerance, config.relative_tolerance * f_cur):
            break
    return psi


def refine_parameters(psi0: JointParams, actual, plan_template,
                      config: RefineConfig = RefineConfig()) -> JointParams:
    """Alternate Hungarian matching with descent over the joint parameters.

    The joint type never changes. The Hungarian objective of the result is
    never larger than that of ``psi0``.
    """
    A = _actual_points(actual)
    templates = _as_templates(plan_template)
    following = _following(templates)

    def match_at(psi):
        cols = _columns(templates, psi, A)
        planned = _displace_many(cols.starts, cols.values, psi.axis_dir, psi.origin, psi.is_revolute)
        return cols, hungarian(cost_matrix(A, planned), lexicographic=False)

    cols, match = match_at(psi0)
    best_psi, best_val = psi0, match.total_cost / len(A)
    psi = psi0
    for _ in range(config.max_outer_iterations):
        if best_val <= config.tolerance:
            break
        psi = _descend(psi, A, cols, match, config, following)
        cols, match = match_at(psi)
        val = match.total_cost / len(A)
        if val < best_val - config.tolerance:
            best_psi, best_val = psi, val
        else:
            break
    return best_psi
