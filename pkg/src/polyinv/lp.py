"""Self-contained dense linear-program solver.

Solves  maximize c . y  subject to rows  a_i . y {<=, =} b_i  and per-variable
bounds  l <= y <= u  (entries may be infinite; free variables are handled by
the bounded-variable simplex directly, without a +/- split).

The method is a two-phase dense simplex over the bounded-variable form: every
row gets a logical variable (slack in [0, inf) for <=, fixed at 0 for =), and
phase 1 introduces signed artificial columns only on rows whose residual the
logical cannot absorb.  Pricing is Dantzig's rule, falling back to Bland's
rule permanently after a run of degenerate steps; the basis inverse is kept
explicitly and refactorized periodically.  A solve that exhausts its
iteration budget or fails the final feasibility audit reports a distinct
NUMERICAL_FAILURE status rather than a wrong answer.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Relation",
    "Status",
    "LinearProgram",
    "SolveOutcome",
    "SolverOptions",
    "solve",
    "dump_lp",
]


class Relation(enum.Enum):
    LE = "<="
    EQ = "="


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class LinearProgram:
    """Dense LP in 'maximize c . y subject to rows and bounds' form."""

    objective: np.ndarray
    row_coeffs: np.ndarray
    row_relations: tuple[Relation, ...]
    row_rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        A = np.asarray(self.row_coeffs, dtype=float)
        b = np.atleast_1d(np.asarray(self.row_rhs, dtype=float))
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        rel = tuple(self.row_relations)
        n = c.shape[0]
        if A.size == 0:
            A = A.reshape(0, n)
        if A.ndim != 2 or A.shape[1] != n:
            raise ValueError(f"row coefficients must be (rows, {n})")
        if b.shape[0] != A.shape[0] or len(rel) != A.shape[0]:
            raise ValueError("rows, relations and rhs lengths disagree")
        if lo.shape != (n,) or hi.shape != (n,):
            raise ValueError("bounds must have one entry per variable")
        if not all(isinstance(r, Relation) for r in rel):
            raise ValueError("row relations must be Relation values")
        for a in (c, A, b, lo, hi):
            a.setflags(write=False)
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "row_coeffs", A)
        object.__setattr__(self, "row_relations", rel)
        object.__setattr__(self, "row_rhs", b)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def num_rows(self) -> int:
        return self.row_coeffs.shape[0]


@dataclass(frozen=True)
class SolveOutcome:
    status: Status
    value: float | None = None
    point: np.ndarray | None = None
    iterations: int = 0
    message: str = ""


@dataclass(frozen=True)
class SolverOptions:
    feas_tol: float = 1e-9
    pivot_tol: float = 1e-10
    degeneracy_threshold: int = 200
    refactor_every: int = 100
    max_iterations: int | None = None  # default scales with problem size


def dump_lp(lp: LinearProgram, target) -> None:
    """Write a plain-text fixed-format dump (one row per line) for cross-checking."""

    def fmt(x: float) -> str:
        if x == np.inf:
            return "inf"
        if x == -np.inf:
            return "-inf"
        return repr(float(x))

    def write(fh: io.TextIOBase) -> None:
        fh.write("maximize " + " ".join(fmt(v) for v in lp.objective) + "\n")
        fh.write(
            "bounds "
            + " ".join(f"{fmt(l)}:{fmt(u)}" for l, u in zip(lp.lower, lp.upper))
            + "\n"
        )
        for coeffs, rel, rhs in zip(lp.row_coeffs, lp.row_relations, lp.row_rhs):
            fh.write(" ".join(fmt(v) for v in coeffs) + f" {rel.value} {fmt(rhs)}\n")

    if hasattr(target, "write"):
        write(target)
    else:
        with open(target, "w", encoding="utf-8") as fh:
            write(fh)


# nonbasic / basic variable statuses
_BASIC = 0
_AT_LO = 1
_AT_HI = 2
_FREE = 3
_FIXED = 4


class _NumericalTrouble(Exception):
    pass


class _Unbounded(Exception):
    pass


class _IterationLimit(Exception):
    pass


class _Simplex:
    def __init__(self, lp: LinearProgram, opt: SolverOptions) -> None:
        self.lp = lp
        self.opt = opt
        self.iterations = 0

        M, n = lp.num_rows, lp.num_vars
        lo_s = lp.lower.copy()
        hi_s = lp.upper.copy()

        # logical column per row: slack [0, inf) for <=, fixed [0, 0] for =
        is_eq = np.array([r is Relation.EQ for r in lp.row_relations], dtype=bool)
        log_lo = np.zeros(M)
        log_hi = np.where(is_eq, 0.0, np.inf)

        # initial nonbasic values of structural variables
        v = np.where(np.isfinite(lo_s), lo_s, np.where(np.isfinite(hi_s), hi_s, 0.0))
        st_struct = np.full(n, _AT_LO, dtype=np.int8)
        st_struct[~np.isfinite(lo_s) & np.isfinite(hi_s)] = _AT_HI
        st_struct[~np.isfinite(lo_s) & ~np.isfinite(hi_s)] = _FREE
        st_struct[lo_s == hi_s] = _FIXED

        resid = lp.row_rhs - lp.row_coeffs @ v

        basis = np.empty(M, dtype=np.int64)
        art_cols: list[np.ndarray] = []
        st_log = np.full(M, _AT_LO, dtype=np.int8)
        st_log[is_eq] = _FIXED
        tol = opt.feas_tol
        n_art = 0
        art_index_of_row = {}
        for i in range(M):
            absorbable = (not is_eq[i] and resid[i] >= -tol) or (
                is_eq[i] and abs(resid[i]) <= tol
            )
            if absorbable:
                basis[i] = n + i
                st_log[i] = _BASIC
            else:
                col = np.zeros(M)
                col[i] = 1.0 if resid[i] >= 0 else -1.0
                art_index_of_row[i] = n + M + n_art
                basis[i] = n + M + n_art
                art_cols.append(col)
                n_art += 1

        self.n_struct = n
        self.M = M
        self.n_art = n_art
        if n_art:
            self.A = np.hstack([lp.row_coeffs, np.eye(M), np.column_stack(art_cols)])
        else:
            self.A = np.hstack([lp.row_coeffs, np.eye(M)])
        self.N = self.A.shape[1]
        self.lower = np.concatenate([lo_s, log_lo, np.zeros(n_art)])
        self.upper = np.concatenate([hi_s, log_hi, np.full(n_art, np.inf)])
        self.status = np.concatenate(
            [st_struct, st_log, np.full(n_art, _BASIC, dtype=np.int8)]
        )
        self.val = np.concatenate([v, np.zeros(M), np.zeros(n_art)])
        self.basis = basis
        self.b = lp.row_rhs
        self.Binv = np.eye(M)
        self.xB = np.zeros(M)
        self.pivots_since_refactor = 0
        self.bland = False
        self._refactor()

        if opt.max_iterations is not None:
            self.max_iterations = opt.max_iterations
        else:
            self.max_iterations = max(2000, 25 * (self.N + M))

    # -- factorization ----------------------------------------------------

    def _refactor(self) -> None:
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B) if self.M else np.zeros((0, 0))
        except np.linalg.LinAlgError as exc:
            raise _NumericalTrouble(f"singular basis: {exc}") from exc
        val_nb = self.val.copy()
        val_nb[self.basis] = 0.0
        self.xB = self.Binv @ (self.b - self.A @ val_nb)
        self.val[self.basis] = self.xB
        self.pivots_since_refactor = 0

    # -- core iteration ----------------------------------------------------

    def optimize(self, c: np.ndarray) -> None:
        """Run simplex iterations for objective c until optimal for this phase."""
        opt = self.opt
        degen_run = 0
        while True:
            if self.iterations >= self.max_iterations:
                raise _IterationLimit(
                    f"iteration limit {self.max_iterations} reached"
                )
            if self.pivots_since_refactor >= opt.refactor_every:
                self._refactor()

            y = c[self.basis] @ self.Binv if self.M else np.zeros(0)
            d = c - y @ self.A
            st = self.status
            tol = opt.feas_tol
            eligible = (
                ((st == _AT_LO) & (d > tol))
                | ((st == _AT_HI) & (d < -tol))
                | ((st == _FREE) & (np.abs(d) > tol))
            )
            if not eligible.any():
                return
            if self.bland:
                e = int(np.flatnonzero(eligible)[0])
            else:
                score = np.where(eligible, np.abs(d), -1.0)
                e = int(np.argmax(score))
            sigma = 1.0 if (st[e] == _AT_LO or (st[e] == _FREE and d[e] > 0)) else -1.0

            w = self.Binv @ self.A[:, e] if self.M else np.zeros(0)
            denom = sigma * w
            lo_b = self.lower[self.basis]
            hi_b = self.upper[self.basis]
            ratios = np.full(self.M, np.inf)
            dec = (denom > opt.pivot_tol) & np.isfinite(lo_b)
            if dec.any():
                ratios[dec] = np.maximum((self.xB[dec] - lo_b[dec]) / denom[dec], 0.0)
            inc = (denom < -opt.pivot_tol) & np.isfinite(hi_b)
            if inc.any():
                ratios[inc] = np.maximum((self.xB[inc] - hi_b[inc]) / denom[inc], 0.0)

            basic_min = ratios.min() if self.M else np.inf
            own_range = self.upper[e] - self.lower[e]
            step = min(basic_min, own_range)
            if not np.isfinite(step):
                raise _Unbounded(f"unbounded in variable {e}")

            self.iterations += 1
            if own_range <= basic_min:
                # bound flip: entering variable crosses to its other bound
                self.val[e] = self.upper[e] if sigma > 0 else self.lower[e]
                self.status[e] = _AT_HI if sigma > 0 else _AT_LO
                if self.M:
                    self.xB -= sigma * step * w
                    self.val[self.basis] = self.xB
            else:
                cand = np.flatnonzero(ratios <= basic_min + 1e-12)
                if self.bland:
                    r = int(cand[np.argmin(self.basis[cand])])
                else:
                    r = int(cand[np.argmax(np.abs(w[cand]))])
                leaving = self.basis[r]
                hit_lower = denom[r] > 0
                self.xB -= sigma * step * w
                self.xB[r] = self.val[e] + sigma * step
                bound = lo_b[r] if hit_lower else hi_b[r]
                self.val[leaving] = bound
                if self.lower[leaving] == self.upper[leaving]:
                    self.status[leaving] = _FIXED
                else:
                    self.status[leaving] = _AT_LO if hit_lower else _AT_HI
                self.status[e] = _BASIC
                self.basis[r] = e
                pivot_row = self.Binv[r] / w[r]
                self.Binv -= np.outer(w, pivot_row)
                self.Binv[r] = pivot_row
                self.val[self.basis] = self.xB
                self.pivots_since_refactor += 1

            if step <= 1e-11:
                degen_run += 1
                if degen_run >= opt.degeneracy_threshold:
                    self.bland = True
            else:
                degen_run = 0

    # -- verification ------------------------------------------------------

    def _feasibility_report(self) -> tuple[float, float]:
        """Worst row violation and worst bound violation at the current point."""
        point = self.val[: self.n_struct]
        lp = self.lp
        row_viol = 0.0
        if lp.num_rows:
            vals = lp.row_coeffs @ point
            for i, rel in enumerate(lp.row_relations):
                gap = vals[i] - lp.row_rhs[i]
                row_viol = max(row_viol, abs(gap) if rel is Relation.EQ else gap)
        lo_gap = np.max(lp.lower - point, initial=0.0)
        hi_gap = np.max(point - lp.upper, initial=0.0)
        return row_viol, max(lo_gap, hi_gap)


def solve(lp: LinearProgram, options: SolverOptions | None = None) -> SolveOutcome:
    """Solve an LP, returning Optimal/Infeasible/Unbounded or a numerical diagnostic."""
    opt = options or SolverOptions()

    if np.any(lp.lower > lp.upper):
        return SolveOutcome(Status.INFEASIBLE, message="contradictory variable bounds")

    try:
        sim = _Simplex(lp, opt)
    except _NumericalTrouble as exc:
        return SolveOutcome(Status.NUMERICAL_FAILURE, message=str(exc))

    n, M, N = sim.n_struct, sim.M, sim.N
    c_full = np.concatenate([lp.objective, np.zeros(N - n)])

    try:
        if sim.n_art:
            c_ph1 = np.zeros(N)
            c_ph1[n + M :] = -1.0
            try:
                sim.optimize(c_ph1)
            except _Unbounded as exc:
                return SolveOutcome(
                    Status.NUMERICAL_FAILURE,
                    iterations=sim.iterations,
                    message=f"phase 1 reported unbounded: {exc}",
                )
            sim._refactor()
            art_sum = float(np.sum(np.abs(sim.val[n + M :])))
            scale = 1.0 + float(np.max(np.abs(lp.row_rhs), initial=0.0))
            if art_sum > 100.0 * opt.feas_tol * scale:
                return SolveOutcome(
                    Status.INFEASIBLE,
                    iterations=sim.iterations,
                    message=f"phase 1 infeasibility {art_sum:.3e}",
                )
            # freeze artificials at zero so they can never re-enter
            sim.upper[n + M :] = 0.0
            nb_art = np.flatnonzero(sim.status[n + M :] != _BASIC) + n + M
            sim.status[nb_art] = _FIXED
            sim.val[nb_art] = 0.0

        try:
            sim.optimize(c_full)
        except _Unbounded as exc:
            return SolveOutcome(
                Status.UNBOUNDED, iterations=sim.iterations, message=str(exc)
            )

        sim._refactor()
        row_viol, bound_viol = sim._feasibility_report()
        scale = 1.0 + float(np.max(np.abs(lp.row_rhs), initial=0.0))
        if row_viol > 100.0 * opt.feas_tol * scale or bound_viol > 100.0 * opt.feas_tol:
            return SolveOutcome(
                Status.NUMERICAL_FAILURE,
                iterations=sim.iterations,
                message=(
                    f"solution failed the feasibility audit "
                    f"(row {row_viol:.3e}, bound {bound_viol:.3e})"
                ),
            )
        point = sim.val[:n].copy()
        return SolveOutcome(
            Status.OPTIMAL,
            value=float(lp.objective @ point),
            point=point,
            iterations=sim.iterations,
        )
    except _IterationLimit as exc:
        return SolveOutcome(
            Status.NUMERICAL_FAILURE, iterations=sim.iterations, message=str(exc)
        )
    except _NumericalTrouble as exc:
        return SolveOutcome(
            Status.NUMERICAL_FAILURE, iterations=sim.iterations, message=str(exc)
        )
