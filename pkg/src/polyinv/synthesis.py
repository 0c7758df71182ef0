"""Joint synthesis of a controller parameter and a template-polytope invariant.

For a fixed offset vector eta, one linear program simultaneously searches the
controller parameter theta and per-facet Lagrange multipliers so that its
optimal value d* is a common certified lower bound of every facet-blocking
problem: d* >= 0 proves the polytope invariant under h(x) = H(x) theta, with
h(x) in U enforced by finitely many rows evaluated at blossom vertex classes.

When d* falls short, the multipliers price how the bound reacts to moving the
facets: perturbing eta by mu changes the optimum to at least
min_k (d* - lambda_k* . mu).  Maximizing that lower bound over a small box of
admissible perturbations is a second, tiny linear program; the loop applies
its optimizer, re-tightens offsets so no facet is empty, and repeats.
Success is only ever declared by a fresh synthesis solve on the final
polytope, so the returned certificate is self-contained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lp
from .blossom import BlossomContext, enumerate_vertex_classes, eval_blossom_at_class
from .core import Box, ControlSystem, TemplatePolytope
from .relaxation import (
    class_dot,
    closed_loop_profile,
    facet_bound_with_multipliers,
    input_profile,
)

__all__ = [
    "SynthesisOptions",
    "ControllerSolution",
    "IterationRecord",
    "SynthesisResult",
    "EmptyPolytopeError",
    "build_input_constraint_rows",
    "build_synthesis_lp",
    "synthesize_controller",
    "sensitivity_step",
    "tighten_facets",
    "joint_synthesis",
]

_EPSILON_FLOOR = 1e-6


class EmptyPolytopeError(ValueError):
    """The template polytope has empty intersection with the state box."""


@dataclass(frozen=True)
class SynthesisOptions:
    """Knobs of the iterative loop.

    epsilon caps the per-iteration facet perturbation; margin is the d* level
    demanded for success (0 accepts a weak certificate, positive demands
    strict inward flow); stall_tolerance is the minimum d* improvement per
    iteration before epsilon gets halved.
    """

    epsilon: float = 0.02
    max_iters: int = 50
    margin: float = 0.0
    stall_tolerance: float = 1e-7

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.stall_tolerance < 0:
            raise ValueError("stall_tolerance must be nonnegative")


@dataclass(frozen=True)
class ControllerSolution:
    """Parsed optimum of one synthesis LP solve."""

    status: lp.Status
    d_star: float | None = None
    theta: np.ndarray | None = None
    lambda_facets: np.ndarray | None = None  # (K, K); row k multiplies facet rows
    lambda_dist: np.ndarray | None = None  # (K, |K_D|)

    @property
    def ok(self) -> bool:
        return self.status is lp.Status.OPTIMAL


@dataclass(frozen=True)
class IterationRecord:
    """One loop iteration: the solve at eta, and the perturbation chosen after it.

    lambda_stars / lambda_tilde_stars hold the per-facet multiplier family
    recovered from the decoupled facet LPs at theta; together with t = d_star
    they are an alternative optimal solution of the joint LP, and the one
    whose sensitivity rows are sharpest.  facet_bounds are the matching
    per-facet blocking bounds (min over facets equals d_star).
    """

    eta: np.ndarray
    d_star: float
    theta: np.ndarray
    lambda_stars: np.ndarray
    lambda_tilde_stars: np.ndarray
    facet_bounds: np.ndarray | None = None
    mu_star: np.ndarray | None = None
    sensitivity_value: float | None = None


@dataclass(frozen=True)
class SynthesisResult:
    success: bool
    theta: np.ndarray | None
    eta: np.ndarray | None
    d_star: float | None
    trace: tuple[IterationRecord, ...]
    message: str = ""


# -- LP assembly ---------------------------------------------------------------


def build_input_constraint_rows(
    sys: ControlSystem, template: TemplatePolytope
) -> tuple[np.ndarray, np.ndarray]:
    """Rows over theta forcing h(x) in U on all of R_X.

    One row per (input halfspace, state vertex class): alpha_U . H_b(v) theta
    <= beta_U.  Because H_b is multi-affine and the rows cover every class,
    the constraint propagates from classes to the whole box.
    """
    x_prof = input_profile(sys, template)
    ctx = BlossomContext(tuple(int(d) for d in x_prof), sys.state_box)
    classes = enumerate_vertex_classes(x_prof)
    ku = sys.U.num_halfspaces
    coeffs = np.zeros((ku * len(classes), sys.q))
    rhs = np.zeros(ku * len(classes))
    row = 0
    for l in range(ku):
        alpha = sys.U.normals[l]
        for cls in classes:
            hb = np.zeros((sys.p, sys.q))
            for i in range(sys.p):
                for j in range(sys.q):
                    hb[i, j] = eval_blossom_at_class(sys.H[i, j], ctx, cls)
            coeffs[row] = alpha @ hb
            rhs[row] = sys.U.offsets[l]
            row += 1
    return coeffs, rhs


def _blocking_data(sys: ControlSystem, template: TemplatePolytope):
    """Blossom values of f and G plus constraint dots, per joint vertex class."""
    n, m = sys.n, sys.m
    prof = closed_loop_profile(sys, template)
    box = sys.joint_box()
    ctx = BlossomContext(tuple(int(d) for d in prof), box)
    classes = enumerate_vertex_classes(prof)
    nc = len(classes)

    fb = np.zeros((nc, n))
    Gb = np.zeros((nc, n, sys.q))
    gamma_dots = np.zeros((nc, template.num_facets))
    alpha_dots = np.zeros((nc, sys.D.num_halfspaces))
    lifted_gamma = [
        np.concatenate([template.normals[i], np.zeros(m)])
        for i in range(template.num_facets)
    ]
    lifted_alpha = [
        np.concatenate([np.zeros(n), sys.D.normals[j]])
        for j in range(sys.D.num_halfspaces)
    ]
    for r, cls in enumerate(classes):
        for i in range(n):
            fb[r, i] = eval_blossom_at_class(sys.f[i], ctx, cls)
            for l in range(sys.q):
                Gb[r, i, l] = eval_blossom_at_class(sys.G[i, l], ctx, cls)
        for i, gam in enumerate(lifted_gamma):
            gamma_dots[r, i] = class_dot(gam, prof, box, cls)
        for j, alp in enumerate(lifted_alpha):
            alpha_dots[r, j] = class_dot(alp, prof, box, cls)
    return fb, Gb, gamma_dots, alpha_dots


def build_synthesis_lp(sys: ControlSystem, P: TemplatePolytope) -> lp.LinearProgram:
    """The joint synthesis LP over (t, theta, per-facet multipliers).

    Variable layout: t, then theta (q entries), then for each facet k a block
    of |K_X| facet multipliers (entry k of the block, which multiplies the
    facet's own equality, is free; the rest nonnegative) followed by |K_D|
    nonnegative disturbance multipliers.  Row order: input-constraint rows,
    then blocking rows grouped by facet with joint vertex classes in
    lexicographic order.
    """
    if P.dim != sys.n:
        raise ValueError("template dimension disagrees with the system")
    K = P.num_facets
    KD = sys.D.num_halfspaces
    q = sys.q
    block = K + KD
    nvars = 1 + q + K * block

    in_coeffs, in_rhs = build_input_constraint_rows(sys, P)
    fb, Gb, gamma_dots, alpha_dots = _blocking_data(sys, P)
    nc = fb.shape[0]

    rows = np.zeros((in_coeffs.shape[0] + K * nc, nvars))
    rhs = np.zeros(rows.shape[0])
    rows[: in_coeffs.shape[0], 1 : 1 + q] = in_coeffs
    rhs[: in_coeffs.shape[0]] = in_rhs

    facet_slack = gamma_dots - P.eta  # (nc, K): gamma_i' . v_X - eta_i
    dist_slack = alpha_dots - sys.D.offsets if KD else alpha_dots  # (nc, KD)

    r = in_coeffs.shape[0]
    for k in range(K):
        off = 1 + q + k * block
        gk = P.normals[k]
        for ci in range(nc):
            rows[r, 0] = 1.0
            if q:
                rows[r, 1 : 1 + q] = gk @ Gb[ci]
            rows[r, off : off + K] = -facet_slack[ci]
            if KD:
                rows[r, off + K : off + block] = -dist_slack[ci]
            rhs[r] = -(gk @ fb[ci])
            r += 1

    lower = np.full(nvars, 0.0)
    lower[0] = -np.inf
    lower[1 : 1 + q] = -np.inf
    for k in range(K):
        lower[1 + q + k * block + k] = -np.inf  # equality-facet multiplier is free
    upper = np.full(nvars, np.inf)
    objective = np.zeros(nvars)
    objective[0] = 1.0
    return lp.LinearProgram(
        objective=objective,
        row_coeffs=rows,
        row_relations=(lp.Relation.LE,) * rows.shape[0],
        row_rhs=rhs,
        lower=lower,
        upper=upper,
    )


def synthesize_controller(
    sys: ControlSystem,
    P: TemplatePolytope,
    solver_options: lp.SolverOptions | None = None,
) -> ControllerSolution:
    """Solve the joint LP at fixed offsets; d* >= 0 certifies P invariant."""
    program = build_synthesis_lp(sys, P)
    out = lp.solve(program, solver_options)
    if out.status is not lp.Status.OPTIMAL:
        return ControllerSolution(status=out.status)
    K = P.num_facets
    KD = sys.D.num_halfspaces
    q = sys.q
    block = K + KD
    theta = out.point[1 : 1 + q].copy()
    lam = np.zeros((K, K))
    lam_d = np.zeros((K, KD))
    for k in range(K):
        off = 1 + q + k * block
        lam[k] = out.point[off : off + K]
        lam_d[k] = out.point[off + K : off + block]
    return ControllerSolution(
        status=out.status,
        d_star=float(out.value),
        theta=theta,
        lambda_facets=lam,
        lambda_dist=lam_d,
    )


# weight of the secondary inward pressure in the sensitivity objective; small
# enough that the primary bound degrades by at most ~1e-7, large enough to be
# visible above the solver's optimality tolerance
_INWARD_WEIGHT = 1e-7


def sensitivity_step(
    d_star,
    lambda_stars: np.ndarray,
    P: TemplatePolytope,
    epsilon: float,
    solver_options: lp.SolverOptions | None = None,
    floor: float | None = None,
) -> tuple[float, np.ndarray]:
    """Choose a facet perturbation maximizing the certified post-move bound.

    Solves max t subject to t <= d_k - lambda_k* . mu for every facet k, with
    max(-eps, eta_lo - eta) <= mu <= min(eps, eta_hi - eta).  d_star may be a
    scalar (one common bound for all rows) or a per-facet vector; with the
    per-facet blocking bounds as constants, rows of facets that are already
    comfortably blocked stop vetoing perturbations that help the critical
    ones, while the guaranteed inequality on the re-solved optimum is
    unchanged.  The step is always feasible (mu = 0 gives t = min_k d_k).

    The optimal t is typically attained on a whole face of perturbations
    (any facet whose multipliers vanish caps t at its own bound for every
    mu).  Ties are broken toward the most inward perturbation, via a tiny
    secondary objective -sum(mu): this keeps the choice deterministic and
    keeps the loop contracting instead of freezing when the bound cannot
    strictly improve.  To stop that contraction from sacrificing facets that
    are already safe, every facet whose bound clears `floor` (when given)
    gets a guard row keeping its predicted bound above the floor.  Rows of
    vacuously blocked facets (infinite bound) impose nothing and are dropped.

    Returns (min_k(d_k - lambda_k* . mu*), mu*).
    """
    lambda_stars = np.asarray(lambda_stars, dtype=float)
    K = P.num_facets
    if lambda_stars.shape != (K, K):
        raise ValueError(f"lambda_stars must be ({K}, {K})")
    d_vec = np.broadcast_to(np.asarray(d_star, dtype=float), (K,)).copy()
    finite = np.isfinite(d_vec)
    mu_lo = np.maximum(-epsilon, P.eta_lo - P.eta)
    mu_hi = np.minimum(epsilon, P.eta_hi - P.eta)

    nb = int(finite.sum())
    if nb == 0:
        return math.inf, mu_lo.copy()
    guarded = (
        np.flatnonzero(finite & (d_vec >= floor))
        if floor is not None
        else np.zeros(0, dtype=np.int64)
    )
    ng = guarded.shape[0]
    nvars = 1 + K
    rows = np.zeros((nb + ng, nvars))
    rows[:nb, 0] = 1.0
    rows[:nb, 1:] = lambda_stars[finite]
    rhs = np.concatenate([d_vec[finite], d_vec[guarded] - floor if ng else []])
    rows[nb:, 1:] = lambda_stars[guarded]
    objective = np.zeros(nvars)
    objective[0] = 1.0
    objective[1:] = -_INWARD_WEIGHT
    program = lp.LinearProgram(
        objective=objective,
        row_coeffs=rows,
        row_relations=(lp.Relation.LE,) * (nb + ng),
        row_rhs=rhs,
        lower=np.concatenate([[-np.inf], mu_lo]),
        upper=np.concatenate([[np.inf], mu_hi]),
    )
    out = lp.solve(program, solver_options)
    if out.status is not lp.Status.OPTIMAL:
        raise RuntimeError(f"sensitivity LP failed with status {out.status}")
    mu = out.point[1:].copy()
    with np.errstate(invalid="ignore"):
        slack = d_vec - lambda_stars @ mu
    t_star = float(np.min(slack[finite])) if finite.any() else math.inf
    return t_star, mu


def tighten_facets(
    P: TemplatePolytope,
    box: Box,
    solver_options: lp.SolverOptions | None = None,
) -> np.ndarray:
    """Support values of P cap box along each facet normal.

    Replacing eta by the returned vector leaves the set unchanged and makes
    every facet touch it, eliminating empty facets.  Raises
    EmptyPolytopeError when P cap box is empty.
    """
    if P.dim != box.dim:
        raise ValueError("template and box dimensions differ")
    eta_t = np.empty(P.num_facets)
    for k in range(P.num_facets):
        program = lp.LinearProgram(
            objective=P.normals[k],
            row_coeffs=P.normals,
            row_relations=(lp.Relation.LE,) * P.num_facets,
            row_rhs=P.eta,
            lower=box.lo,
            upper=box.hi,
        )
        out = lp.solve(program, solver_options)
        if out.status is lp.Status.INFEASIBLE:
            raise EmptyPolytopeError("template polytope is empty inside the box")
        if out.status is not lp.Status.OPTIMAL:
            raise RuntimeError(f"support LP failed with status {out.status}")
        eta_t[k] = out.value
    return eta_t


def joint_synthesis(
    sys: ControlSystem,
    template: TemplatePolytope,
    options: SynthesisOptions | None = None,
    solver_options: lp.SolverOptions | None = None,
    progress=None,
) -> SynthesisResult:
    """Iterate synthesis and sensitivity until a certified invariant appears.

    The template's eta is the starting guess (callers default it to eta_hi).
    Each iteration solves the joint LP; on d* >= margin the pair (theta, eta)
    is returned as a certified success.  Otherwise the sensitivity LP picks a
    perturbation mu, offsets move to eta + mu, get re-tightened to support
    values (empty-facet repair) and clipped back above eta_lo, and the loop
    continues.  Because success always comes from a fresh solve, a favorable
    sensitivity prediction is never trusted on its own.

    progress, when given, is called as progress(iteration, eta, d_star) after
    every synthesis solve.
    """
    opts = options or SynthesisOptions()
    eta = np.array(template.eta, dtype=float)
    eta = np.maximum(tighten_facets(template.with_eta(eta), sys.state_box, solver_options),
                     template.eta_lo)

    records: list[IterationRecord] = []
    epsilon = opts.epsilon
    prev_d = -np.inf
    stall_run = 0

    def finish(success, theta, eta_f, d_f, msg):
        return SynthesisResult(
            success=success,
            theta=theta,
            eta=eta_f,
            d_star=d_f,
            trace=tuple(records),
            message=msg,
        )

    for it in range(opts.max_iters):
        current = template.with_eta(eta)
        sol = synthesize_controller(sys, current, solver_options)
        if not sol.ok:
            return finish(
                False, None, eta.copy(), None,
                f"synthesis LP failed with status {sol.status.value} at iteration {it}",
            )
        if progress is not None:
            progress(it, eta.copy(), sol.d_star)
        if sol.d_star >= opts.margin:
            records.append(
                IterationRecord(
                    eta=eta.copy(),
                    d_star=sol.d_star,
                    theta=sol.theta,
                    lambda_stars=sol.lambda_facets,
                    lambda_tilde_stars=sol.lambda_dist,
                )
            )
            return finish(True, sol.theta, eta.copy(), sol.d_star, "certified")

        if sol.d_star - prev_d < opts.stall_tolerance:
            stall_run += 1
            if stall_run >= 3:
                epsilon *= 0.5
                stall_run = 0
                if epsilon < _EPSILON_FLOOR:
                    records.append(
                        IterationRecord(
                            eta=eta.copy(),
                            d_star=sol.d_star,
                            theta=sol.theta,
                            lambda_stars=sol.lambda_facets,
                            lambda_tilde_stars=sol.lambda_dist,
                        )
                    )
                    return finish(
                        False, sol.theta, eta.copy(), sol.d_star,
                        "stalled: epsilon underflow without reaching the margin",
                    )
        else:
            stall_run = 0
        prev_d = sol.d_star

        # per-facet bounds and multipliers at theta*: the decoupled optimal
        # family, sharper in the sensitivity rows than the joint LP's vertex
        d_facets = np.empty(current.num_facets)
        lam = np.zeros((current.num_facets, current.num_facets))
        lam_d = np.zeros((current.num_facets, sys.D.num_halfspaces))
        for k in range(current.num_facets):
            d_facets[k], lam[k], lam_d[k] = facet_bound_with_multipliers(
                sys, current, k, sol.theta, solver_options
            )

        t_star, mu = sensitivity_step(
            d_facets, lam, current, epsilon, solver_options, floor=opts.margin
        )
        records.append(
            IterationRecord(
                eta=eta.copy(),
                d_star=sol.d_star,
                theta=sol.theta,
                lambda_stars=lam,
                lambda_tilde_stars=lam_d,
                facet_bounds=d_facets,
                mu_star=mu,
                sensitivity_value=t_star,
            )
        )
        moved = template.with_eta(np.minimum(eta + mu, template.eta_hi))
        try:
            eta = np.maximum(
                tighten_facets(moved, sys.state_box, solver_options), template.eta_lo
            )
        except EmptyPolytopeError:
            return finish(
                False, sol.theta, eta.copy(), sol.d_star,
                "perturbed polytope became empty",
            )

    last = records[-1] if records else None
    return finish(
        False,
        last.theta if last else None,
        eta.copy(),
        last.d_star if last else None,
        f"no certificate within {opts.max_iters} iterations",
    )
