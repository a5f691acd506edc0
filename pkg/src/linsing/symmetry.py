"""Symmetries of linearly singular systems and their descent to the constrained
dynamics, plus constants of motion.

A finite symmetry candidate is a pair (psi, Phi): a base diffeomorphism and a
fibre matrix field. It is accepted when f(psi(x)) = Phi(x) f(x) and
A(psi(x)) Dpsi(x) = Phi(x) A(x) within tolerance. The infinitesimal version
(V, Lambda) checks the linearized conditions Df.V = Lambda f and
(D_V A) + A.DV = Lambda A, obtained by differentiating the flow (the vector
field lifts to the tangent bundle by the complete lift (V, DV.u)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ShapeError
from .expressions import Const, ExpressionField, Var, add, derivative, mul
from .nonholonomic import constrained_field_at, unconstrained_solution_at

__all__ = [
    "SymmetryCandidate",
    "finite_candidate",
    "infinitesimal_candidate",
    "euler_flow_candidate",
    "check_symmetry",
    "check_inf_symmetry",
    "check_descent",
    "check_constant_descent",
]


@dataclass
class SymmetryCandidate:
    kind: str                 # "finite" | "infinitesimal"
    base: ExpressionField     # psi (n -> n) or V (n,)
    fibre: ExpressionField    # Phi or Lambda, (k, k)

    def __post_init__(self):
        if self.kind not in ("finite", "infinitesimal"):
            raise ShapeError("kind must be 'finite' or 'infinitesimal'")
        if len(self.base.shape) != 1:
            raise ShapeError("base component must be a vector field")
        if len(self.fibre.shape) != 2 or self.fibre.shape[0] != self.fibre.shape[1]:
            raise ShapeError("fibre component must be a square matrix field")


def finite_candidate(psi, phi_matrix):
    return SymmetryCandidate("finite", psi, phi_matrix)


def infinitesimal_candidate(v_field, lambda_matrix=None):
    """Infinitesimal candidate; Lambda defaults to the Jacobian DV (the natural
    fibre action on an explicit system, where the fibre is the tangent space)."""
    if lambda_matrix is None:
        lambda_matrix = v_field.jacobian_field()
    return SymmetryCandidate("infinitesimal", v_field, lambda_matrix)


def euler_flow_candidate(cand, eps):
    """Finite candidate (x + eps V(x), I + eps Lambda(x)) from an infinitesimal one."""
    if cand.kind != "infinitesimal":
        raise ShapeError("euler_flow_candidate needs an infinitesimal candidate")
    variables = cand.base.variables
    base = ExpressionField.vector(
        [add(Var(name), mul(Const(eps), e)) for name, e in zip(variables, cand.base.entries)],
        variables,
    )
    k = cand.fibre.shape[0]
    entries = []
    for i in range(k):
        for j in range(k):
            e = mul(Const(eps), cand.fibre.entries[i * k + j])
            if i == j:
                e = add(Const(1.0), e)
            entries.append(e)
    fibre = ExpressionField(entries, variables, (k, k))
    return SymmetryCandidate("finite", base, fibre)


@dataclass
class SymmetryCheck:
    r_f: float
    r_A: float
    passed: bool
    tol: float


def check_symmetry(sys, cand, points, tol=1e-8, tols=linalg.DEFAULT_TOLERANCES):
    """Residuals of the finite symmetry conditions over the sample points."""
    if cand.kind != "finite":
        raise ShapeError("check_symmetry needs a finite candidate")
    r_f = 0.0
    r_a = 0.0
    jpsi = cand.base.jacobian_field()
    for x in points:
        y = cand.base(x)
        dpsi = jpsi(x)
        if linalg.rank(dpsi, tols) < sys.n:
            raise ShapeError("base map is not invertible at a sample point")
        phi_m = cand.fibre(x)
        if linalg.rank(phi_m, tols) < sys.k:
            raise ShapeError("fibre map is not invertible at a sample point")
        r_f = max(r_f, float(np.max(np.abs(sys.f_at(y) - phi_m @ sys.f_at(x)))))
        r_a = max(
            r_a,
            float(np.max(np.abs(sys.A_at(y) @ dpsi - phi_m @ sys.A_at(x)))),
        )
    return SymmetryCheck(r_f, r_a, r_f <= tol and r_a <= tol, tol)


def _directional_matrix_derivative(mat_field, x, v):
    """(D_V mat)(x): entry-wise directional derivative along the vector v."""
    out = np.zeros(mat_field.shape)
    for j, pf in enumerate(mat_field.partial_fields()):
        out += pf(x) * v[j]
    return out


def check_inf_symmetry(sys, cand, points, tol=1e-8):
    """Residuals of the linearized symmetry conditions over the sample points."""
    if cand.kind != "infinitesimal":
        raise ShapeError("check_inf_symmetry needs an infinitesimal candidate")
    jf = sys.f.jacobian_field()
    jv = cand.base.jacobian_field()
    r_f = 0.0
    r_a = 0.0
    a_constant = sys.A.is_constant
    for x in points:
        v = cand.base(x)
        lam = cand.fibre(x)
        r_f = max(r_f, float(np.max(np.abs(jf(x) @ v - lam @ sys.f_at(x)))))
        dva = (
            np.zeros((sys.k, sys.n))
            if a_constant
            else _directional_matrix_derivative(sys.A, x, v)
        )
        resid = dva + sys.A_at(x) @ jv(x) - lam @ sys.A_at(x)
        r_a = max(r_a, float(np.max(np.abs(resid))))
    return SymmetryCheck(r_f, r_a, r_f <= tol and r_a <= tol, tol)


@dataclass
class DescentCheck:
    tangent_to_M: bool
    preserves_forces: bool
    descends: bool
    tangency_residual: float
    force_residual: float
    tol: float


def check_descent(gnh, cand, points_on_m, tol=1e-8, tols=linalg.DEFAULT_TOLERANCES):
    """Does an accepted symmetry descend to the constrained dynamics?

    Tangency: the candidate preserves M (finite: phi(psi(x)) = 0; infinitesimal:
    V.phi = 0 on M). Force preservation: the fibre action maps the force span
    into the force span (least-squares residual of each transported section).
    """
    tang = 0.0
    force = 0.0
    for x in points_on_m:
        if cand.kind == "finite":
            y = cand.base(x)
            tang = max(tang, float(np.max(np.abs(gnh.constraints.values(y)))))
            target = gnh.forces.at(y)
            moved = cand.fibre(x) @ gnh.forces.at(x)
        else:
            v = cand.base(x)
            jphi = gnh.constraints.jacobian(x)
            tang = max(tang, float(np.max(np.abs(jphi @ v))))
            # Lie-type derivative of each force section along (V, Lambda)
            lam = cand.fibre(x)
            target = gnh.forces.at(x)
            cols = []
            for cfield in gnh.forces.columns:
                dcol = cfield.jacobian_field()(x) @ v
                cols.append(lam @ cfield(x) - dcol)
            moved = np.column_stack(cols)
        for j in range(moved.shape[1]):
            sol = linalg.solve_affine(target, moved[:, j], tols)
            force = max(force, sol.residual)
    tangent = tang <= tol
    preserves = force <= tol
    return DescentCheck(tangent, preserves, tangent and preserves, tang, force, tol)


@dataclass
class ConstantDescentCheck:
    base_conserved: bool
    gamma_derivative_small: bool
    constrained_conserved: bool
    max_Y_h: float
    max_Gamma_h: float
    max_X_h: float
    consistent: bool  # conditional equivalence: given base_conserved, the rest agree
    tol: float


def check_constant_descent(gnh, h, points_on_m, y_field=None, tol=1e-8,
                           tols=linalg.DEFAULT_TOLERANCES):
    """Descent test for a conserved quantity h of the unconstrained dynamics.

    Computes Y.h, (Y - X).h and X.h over the sample; when h is conserved for Y,
    conservation for the constrained X is equivalent to (Y - X).h = 0, and the
    `consistent` flag verifies that equivalence numerically.
    """
    if h.shape != ():
        raise ShapeError("h must be a scalar field")
    dh = h.gradient()
    max_yh = 0.0
    max_gh = 0.0
    max_xh = 0.0
    for x in points_on_m:
        y = (
            np.asarray(y_field(x), dtype=float)
            if callable(y_field)
            else unconstrained_solution_at(gnh, x, tols)
        )
        xfield, _ = constrained_field_at(gnh, x, y, tols)
        g = dh(x)
        max_yh = max(max_yh, abs(float(g @ y)))
        max_gh = max(max_gh, abs(float(g @ (y - xfield))))
        max_xh = max(max_xh, abs(float(g @ xfield)))
    base_ok = max_yh <= tol
    gamma_ok = max_gh <= tol
    constrained_ok = max_xh <= tol
    consistent = (not base_ok) or (constrained_ok == gamma_ok)
    return ConstantDescentCheck(
        base_ok, gamma_ok, constrained_ok, max_yh, max_gh, max_xh, consistent, tol
    )
