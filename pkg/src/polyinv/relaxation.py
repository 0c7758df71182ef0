"""LP relaxation of polynomial minimization over a bounded polytope.

The ground problem is

    minimize   c . p(y)
    over       y in R  (a box)
    subject to a_i . y <= b_i  (i in I),   a_j . y = b_j  (j in J).

Blossoming p at a degree profile turns the objective into a multi-affine map
on the lifted rectangle, where the minimum over the rectangle is attained at
vertices, and those vertices collapse into permutation classes.  The
Lagrangian dual of the lifted problem is then the finite linear program

    maximize t
    over     t free, lambda_i >= 0 (i in I), mu_j free (j in J)
    s.t.     t <= c . q(v) + sum_i lambda_i (a_i' . v - b_i)
                           + sum_j mu_j   (a_j' . v - b_j)     for every class v,

whose optimal value d* is a guaranteed lower bound on the true minimum.  The
scaled constraint vectors a' repeat each coordinate once per blossom slot,
divided by the slot count, so that a' . (lifted y) = a . y on the diagonal.

The per-facet blocking bound specializes this to y = (x, d), objective
-gamma_k . (f + G theta), box R_X x R_D, the other facets and the disturbance
polytope as inequalities, and the facet hyperplane as the single equality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lp
from .blossom import BlossomContext, VertexClass, enumerate_vertex_classes, eval_blossom_at_class
from .core import Box, ControlSystem, PolynomialVec, TemplatePolytope

__all__ = [
    "RelaxationProblem",
    "BoundResult",
    "scaled_normal",
    "class_dot",
    "effective_profile",
    "build_relaxation_lp",
    "lower_bound",
    "closed_loop_profile",
    "input_profile",
    "facet_problem",
    "facet_blocking_bound",
    "facet_bound_with_multipliers",
]


@dataclass(frozen=True)
class RelaxationProblem:
    """Data of the ground problem: minimize c . p(y) over box cap constraints."""

    c: np.ndarray
    p: PolynomialVec
    box: Box
    ineq: tuple[tuple[np.ndarray, float], ...] = ()
    eq: tuple[tuple[np.ndarray, float], ...] = ()

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        if c.shape[0] != len(self.p):
            raise ValueError("c and p must have the same number of components")
        if self.p.num_vars != self.box.dim:
            raise ValueError("p and box disagree on the variable count")
        def norm(pairs):
            out = []
            for a, b in pairs:
                a = np.asarray(a, dtype=float)
                if a.shape != (self.box.dim,):
                    raise ValueError("constraint vector dimension mismatch")
                out.append((a, float(b)))
            return tuple(out)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "ineq", norm(self.ineq))
        object.__setattr__(self, "eq", norm(self.eq))


@dataclass(frozen=True)
class BoundResult:
    """Certified lower bound d* with its Lagrange multipliers."""

    d_star: float | None
    lambda_ineq: np.ndarray | None
    mu_eq: np.ndarray | None
    status: lp.Status


def scaled_normal(a, profile) -> np.ndarray:
    """Lift a constraint vector: coordinate j repeated delta_j times, each / delta_j.

    A nonzero coefficient on a zero-degree variable has no slot to attach to
    and is rejected; callers raise the profile to 1 there first.
    """
    a = np.asarray(a, dtype=float)
    profile = [int(d) for d in profile]
    if a.shape[0] != len(profile):
        raise ValueError("vector and profile lengths differ")
    out: list[float] = []
    for aj, dj in zip(a, profile):
        if dj == 0:
            if aj != 0.0:
                raise ValueError(
                    "nonzero constraint coefficient on a zero-degree variable"
                )
            continue
        out.extend([aj / dj] * dj)
    return np.array(out)


def class_dot(a, profile, box: Box, cls: VertexClass) -> float:
    """a' . v for a vertex class without materializing the lifted vectors.

    Equals sum_j (a_j / delta_j) (k_j hi_j + (delta_j - k_j) lo_j).
    """
    a = np.asarray(a, dtype=float)
    total = 0.0
    for j, dj in enumerate(profile):
        if dj == 0:
            if a[j] != 0.0:
                raise ValueError(
                    "nonzero constraint coefficient on a zero-degree variable"
                )
            continue
        k = cls.upper_counts[j]
        total += (a[j] / dj) * (k * box.hi[j] + (dj - k) * box.lo[j])
    return total


def effective_profile(prob: RelaxationProblem, profile) -> np.ndarray:
    """Profile actually used: raised to >= 1 wherever a constraint has a coefficient."""
    profile = np.asarray(profile, dtype=np.int64).copy()
    deg = prob.p.degree_profile()
    if profile.shape[0] != prob.box.dim:
        raise ValueError("profile length must match the variable count")
    if np.any(profile < deg):
        raise ValueError(
            f"profile {profile.tolist()} below objective degrees {deg.tolist()}"
        )
    for a, _ in prob.ineq + prob.eq:
        need = (a != 0.0) & (profile == 0)
        profile[need] = 1
    return profile


def build_relaxation_lp(prob: RelaxationProblem, profile) -> lp.LinearProgram:
    """Assemble the dual LP: variables (t, lambda, mu), one row per vertex class.

    Rows are ordered by the lexicographic class enumeration, which makes the
    program (and hence the solve) bit-reproducible.
    """
    eff = effective_profile(prob, profile)
    ctx = BlossomContext(tuple(int(d) for d in eff), prob.box)
    classes = enumerate_vertex_classes(eff)
    n_i, n_j = len(prob.ineq), len(prob.eq)
    nvars = 1 + n_i + n_j

    coeffs = np.zeros((len(classes), nvars))
    rhs = np.zeros(len(classes))
    for r, cls in enumerate(classes):
        cq = 0.0
        for ci, pi in zip(prob.c, prob.p):
            if ci != 0.0:
                cq += ci * eval_blossom_at_class(pi, ctx, cls)
        coeffs[r, 0] = 1.0
        for idx, (a, b) in enumerate(prob.ineq):
            coeffs[r, 1 + idx] = -(class_dot(a, eff, prob.box, cls) - b)
        for idx, (a, b) in enumerate(prob.eq):
            coeffs[r, 1 + n_i + idx] = -(class_dot(a, eff, prob.box, cls) - b)
        rhs[r] = cq

    lower = np.concatenate([[-np.inf], np.zeros(n_i), np.full(n_j, -np.inf)])
    upper = np.full(nvars, np.inf)
    objective = np.zeros(nvars)
    objective[0] = 1.0
    return lp.LinearProgram(
        objective=objective,
        row_coeffs=coeffs,
        row_relations=(lp.Relation.LE,) * len(classes),
        row_rhs=rhs,
        lower=lower,
        upper=upper,
    )


def lower_bound(
    prob: RelaxationProblem, profile, options: lp.SolverOptions | None = None
) -> BoundResult:
    """Solve the dual LP; the optimum never exceeds the true minimum of c . p."""
    program = build_relaxation_lp(prob, profile)
    out = lp.solve(program, options)
    if out.status is not lp.Status.OPTIMAL:
        return BoundResult(None, None, None, out.status)
    n_i = len(prob.ineq)
    return BoundResult(
        d_star=out.value,
        lambda_ineq=out.point[1 : 1 + n_i].copy(),
        mu_eq=out.point[1 + n_i :].copy(),
        status=out.status,
    )


# -- system-level profiles and the facet bound --------------------------------


def closed_loop_profile(sys: ControlSystem, template: TemplatePolytope) -> np.ndarray:
    """Joint (x, d) degree profile shared by every blocking-condition relaxation.

    Elementwise max of the degrees of f and G, then raised to >= 1 on every
    coordinate that carries a facet-normal or disturbance-polytope coefficient,
    so the same profile serves all facets and the joint synthesis program.
    """
    prof = np.maximum(sys.f.degree_profile(), sys.G.degree_profile())
    n = sys.n
    touched_x = np.any(template.normals != 0.0, axis=0)
    prof[:n][touched_x & (prof[:n] == 0)] = 1
    if sys.m and sys.D.num_halfspaces:
        touched_d = np.any(sys.D.normals != 0.0, axis=0)
        prof[n:][touched_d & (prof[n:] == 0)] = 1
    return prof


def input_profile(sys: ControlSystem, template: TemplatePolytope) -> np.ndarray:
    """State-variable profile for blossoming H in the input-constraint rows."""
    joint = closed_loop_profile(sys, template)
    return np.maximum(joint[: sys.n], sys.H.degree_profile())


def _lift_x(a: np.ndarray, n: int, m: int) -> np.ndarray:
    return np.concatenate([a, np.zeros(m)])


def _lift_d(a: np.ndarray, n: int, m: int) -> np.ndarray:
    return np.concatenate([np.zeros(n), a])


def facet_problem(
    sys: ControlSystem, P: TemplatePolytope, k: int, theta
) -> RelaxationProblem:
    """The ground problem whose nonnegative optimum certifies facet k blocked:

    minimize -gamma_k . (f + G theta) over the facet band of P inside
    R_X x R_D, intersected with the disturbance polytope.
    """
    n, m = sys.n, sys.m
    F = sys.closed_loop(theta)
    ineq = [
        (_lift_d(sys.D.normals[j], n, m), float(sys.D.offsets[j]))
        for j in range(sys.D.num_halfspaces)
    ]
    ineq += [
        (_lift_x(P.normals[i], n, m), float(P.eta[i]))
        for i in range(P.num_facets)
        if i != k
    ]
    eq = [(_lift_x(P.normals[k], n, m), float(P.eta[k]))]
    return RelaxationProblem(
        c=-np.asarray(P.normals[k], dtype=float),
        p=F,
        box=sys.joint_box(),
        ineq=tuple(ineq),
        eq=tuple(eq),
    )


def facet_blocking_bound(
    sys: ControlSystem,
    P: TemplatePolytope,
    k: int,
    theta,
    options: lp.SolverOptions | None = None,
) -> float:
    """Certified lower bound d_k*(theta); nonnegative means facet k is blocked.

    Returns +inf when the relaxation proves the facet band empty (vacuously
    blocked).  Raises RuntimeError on solver failure.
    """
    bound, _, _ = facet_bound_with_multipliers(sys, P, k, theta, options)
    return bound


def facet_bound_with_multipliers(
    sys: ControlSystem,
    P: TemplatePolytope,
    k: int,
    theta,
    options: lp.SolverOptions | None = None,
) -> tuple[float, np.ndarray, np.ndarray]:
    """d_k*(theta) together with its multipliers mapped to template layout.

    Returns (d_k, lam, lam_tilde) where lam has one entry per facet (entry k
    is the free equality multiplier) and lam_tilde one entry per disturbance
    halfspace.  For a facet band the relaxation proves empty, returns
    (+inf, zeros, zeros): the facet is vacuously blocked and carries no
    sensitivity information.
    """
    if not 0 <= k < P.num_facets:
        raise ValueError(f"facet index {k} out of range")
    prob = facet_problem(sys, P, k, theta)
    profile = closed_loop_profile(sys, P)
    result = lower_bound(prob, profile, options)
    K = P.num_facets
    KD = sys.D.num_halfspaces
    if result.status is lp.Status.UNBOUNDED:
        return math.inf, np.zeros(K), np.zeros(KD)
    if result.status is not lp.Status.OPTIMAL:
        raise RuntimeError(f"facet bound LP failed with status {result.status}")
    lam = np.zeros(K)
    others = [i for i in range(K) if i != k]
    lam[others] = result.lambda_ineq[KD:]
    lam[k] = result.mu_eq[0]
    lam_tilde = result.lambda_ineq[:KD].copy()
    return float(result.d_star), lam, lam_tilde
