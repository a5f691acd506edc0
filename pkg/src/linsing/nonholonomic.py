"""Generalized nonholonomic systems: a base pair (B, g), a constraint submanifold
M = {phi = 0}, and a frame of constraint-force directions.

The quotient bundle never gets materialized: everything runs through the
transported frame Gamma_mu = B^{-1} Delta_mu, the pairing matrix
D = dphi . Gamma, and span residuals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import linalg
from .errors import (
    BaseNotRegularError,
    FrameDegenerateError,
    InconsistentSystemError,
    NotOnManifoldError,
    ShapeError,
)
from .expressions import ExpressionField
from .systems import LinearlySingularSystem

__all__ = [
    "SubmanifoldSpec",
    "ForceFrame",
    "GeneralizedNonholonomicSystem",
    "H_frame_at",
    "D_matrix_at",
    "classify_at",
    "multipliers_at",
    "constrained_field_at",
    "projectors_at",
    "unconstrained_solution_at",
    "PointDynamics",
]


@dataclass
class SubmanifoldSpec:
    """Level set M = {phi = 0} of a vector of scalar constraint expressions."""

    phi: ExpressionField  # shape (a,)

    def __post_init__(self):
        if len(self.phi.shape) != 1:
            raise ShapeError("phi must be a vector field of scalars")

    @property
    def codim(self):
        return self.phi.shape[0]

    def values(self, x):
        return self.phi(x)

    def jacobian(self, x):
        return self.phi.jacobian_at(x)

    def is_on(self, x, tol=1e-8):
        return float(np.max(np.abs(self.values(x)))) <= tol

    def project(self, x, target=1e-10, max_iter=20):
        """Gauss-Newton projection onto M; returns (point, converged, iterations)."""
        x = np.asarray(x, dtype=float).copy()
        for it in range(max_iter):
            vals = self.values(x)
            if float(np.max(np.abs(vals))) <= target:
                return x, True, it
            j = self.jacobian(x)
            step, *_ = np.linalg.lstsq(j, vals, rcond=None)
            x = x - step
        vals = self.values(x)
        return x, float(np.max(np.abs(vals))) <= target, max_iter

    def lift(self, x, free_indices, target=1e-10, max_iter=50):
        """Newton-solve phi = 0 over the listed coordinates, holding the rest fixed."""
        x = np.asarray(x, dtype=float).copy()
        free = list(free_indices)
        for it in range(max_iter):
            vals = self.values(x)
            if float(np.max(np.abs(vals))) <= target:
                return x, True, it
            j = self.jacobian(x)[:, free]
            step, *_ = np.linalg.lstsq(j, vals, rcond=None)
            x[free] = x[free] - step
        vals = self.values(x)
        return x, float(np.max(np.abs(vals))) <= target, max_iter


class ForceFrame:
    """An ordered frame of constraint-force sections (columns of a k x m field)."""

    def __init__(self, columns):
        self.columns = list(columns)
        if not self.columns:
            raise ShapeError("a force frame needs at least one section")
        k = self.columns[0].shape
        for c in self.columns:
            if len(c.shape) != 1 or c.shape != k:
                raise ShapeError("force sections must be vectors of equal length")
            if c.variables != self.columns[0].variables:
                raise ShapeError("force sections must share the same variables")

    @property
    def m(self):
        return len(self.columns)

    @property
    def k(self):
        return self.columns[0].shape[0]

    @property
    def variables(self):
        return self.columns[0].variables

    def at(self, x):
        return np.column_stack([c(x) for c in self.columns])


@dataclass
class GeneralizedNonholonomicSystem:
    base: LinearlySingularSystem
    constraints: SubmanifoldSpec
    forces: ForceFrame

    def __post_init__(self):
        if self.constraints.phi.variables != self.base.variables:
            raise ShapeError("constraints must use the base system's variables")
        if self.forces.variables != self.base.variables:
            raise ShapeError("forces must use the base system's variables")
        if self.forces.k != self.base.k:
            raise ShapeError(
                f"force sections live in the target fibre (length {self.base.k})"
            )

    @property
    def n(self):
        return self.base.n

    @property
    def a(self):
        return self.constraints.codim

    @property
    def m(self):
        return self.forces.m


def _require_on_manifold(gnh, x, tols):
    if not gnh.constraints.is_on(x, tols.on_manifold):
        vals = gnh.constraints.values(x)
        raise NotOnManifoldError(
            f"point violates the constraints: max |phi| = {np.max(np.abs(vals)):.3e}"
        )


def _regular_base_matrix(gnh, x, tols):
    b = gnh.base.A_at(x)
    if gnh.base.k != gnh.base.n or linalg.rank(b, tols) < gnh.base.n:
        raise BaseNotRegularError(
            "base morphism is not invertible at this point; "
            "use the linearly singular solve path instead"
        )
    return b


def H_frame_at(gnh, x, tols=linalg.DEFAULT_TOLERANCES):
    """Transported frame Gamma_mu = B(x)^{-1} Delta_mu(x), columns of an n x m array."""
    _require_on_manifold(gnh, x, tols)
    b = _regular_base_matrix(gnh, x, tols)
    gamma = np.linalg.solve(b, gnh.forces.at(x))
    if linalg.rank(gamma, tols) < gnh.m:
        raise FrameDegenerateError("transported force frame is linearly dependent")
    return gamma


def D_matrix_at(gnh, x, tols=linalg.DEFAULT_TOLERANCES):
    """Pairing D[alpha, mu] = dphi^alpha . Gamma_mu (an a x m matrix)."""
    gamma = H_frame_at(gnh, x, tols)
    return gnh.constraints.jacobian(x) @ gamma


@dataclass
class PointClassification:
    d_matrix: np.ndarray
    rank_d: int
    surjective: bool  # the projected-restricted morphism is onto
    injective: bool
    regular: bool


def classify_at(gnh, x, tols=linalg.DEFAULT_TOLERANCES):
    """Regularity of the restricted problem at x via ranks of the D-matrix."""
    d = D_matrix_at(gnh, x, tols)
    r = linalg.rank(d, tols)
    return PointClassification(
        d_matrix=d,
        rank_d=r,
        surjective=(r == gnh.a),
        injective=(r == gnh.m),
        regular=(gnh.a == gnh.m and r == gnh.a),
    )


@dataclass
class MultiplierResult:
    u: np.ndarray
    gauged: bool  # True when the solution is the minimum-norm representative
    residual: float


def multipliers_at(gnh, x, y_at, tols=linalg.DEFAULT_TOLERANCES):
    """Solve D u = -dphi . Y for the constraint multipliers at x.

    Unique when D is square invertible; otherwise the minimum-norm solution is
    returned with `gauged` set. Raises InconsistentSystemError when no u exists.
    """
    d = D_matrix_at(gnh, x, tols)
    rhs = -(gnh.constraints.jacobian(x) @ np.asarray(y_at, dtype=float))
    sol = linalg.solve_affine(d, rhs, tols)
    if not sol.consistent:
        raise InconsistentSystemError(
            f"no multiplier solves the tangency condition (residual {sol.residual:.3e})"
        )
    return MultiplierResult(sol.x0, sol.kernel.dim > 0, sol.residual)


def constrained_field_at(gnh, x, y_at=None, tols=linalg.DEFAULT_TOLERANCES):
    """Value of the constrained dynamics X = Y + Gamma u at a point of M."""
    if y_at is None:
        y_at = unconstrained_solution_at(gnh, x, tols)
    gamma = H_frame_at(gnh, x, tols)
    mult = multipliers_at(gnh, x, y_at, tols)
    return np.asarray(y_at, dtype=float) + gamma @ mult.u, mult


def projectors_at(gnh, x, tols=linalg.DEFAULT_TOLERANCES):
    """Oblique projectors (P onto T_xM along H_x, Q = I - P)."""
    gamma = H_frame_at(gnh, x, tols)
    tm = linalg.kernel_basis(gnh.constraints.jacobian(x), tols)
    return linalg.complement_projectors(tm, gamma, tols)


def unconstrained_solution_at(gnh, x, tols=linalg.DEFAULT_TOLERANCES):
    """Y(x) = B(x)^{-1} g(x) for a regular base."""
    b = _regular_base_matrix(gnh, x, tols)
    return np.linalg.solve(b, gnh.base.f_at(x))


class PointDynamics:
    """Fast pointwise evaluation of the constrained dynamics for integration.

    Caches compiled expression fields and prefactors constant matrices once.
    """

    def __init__(self, gnh, tols=linalg.DEFAULT_TOLERANCES):
        self.gnh = gnh
        self.tols = tols
        self._b_const = None
        if gnh.base.A.is_constant:
            b = gnh.base.A(np.zeros(gnh.n))
            if gnh.base.k == gnh.base.n and linalg.rank(b, tols) == gnh.n:
                self._b_const = scipy.linalg.lu_factor(b)
            else:
                raise BaseNotRegularError("constant base morphism is singular")
        self._jphi = gnh.constraints.phi.jacobian_field()

    def _solve_base(self, x, rhs):
        if self._b_const is not None:
            return scipy.linalg.lu_solve(self._b_const, rhs)
        b = self.gnh.base.A_at(x)
        return np.linalg.solve(b, rhs)

    def unconstrained(self, x):
        return self._solve_base(x, self.gnh.base.f_at(x))

    def field_and_multipliers(self, x):
        y = self.unconstrained(x)
        gamma = self._solve_base(x, self.gnh.forces.at(x))
        jphi = self._jphi(x)
        d = jphi @ gamma
        rhs = -(jphi @ y)
        if d.shape[0] == d.shape[1]:
            try:
                u = np.linalg.solve(d, rhs)
            except np.linalg.LinAlgError:
                u = np.linalg.lstsq(d, rhs, rcond=None)[0]
        else:
            u = np.linalg.lstsq(d, rhs, rcond=None)[0]
        return y + gamma @ u, u

    def field(self, x):
        return self.field_and_multipliers(x)[0]

    def multipliers(self, x):
        return self.field_and_multipliers(x)[1]
