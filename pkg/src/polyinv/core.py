"""Sparse multivariate polynomials, boxes, polytopes and the control system model.

A disturbed polynomial control system has the affine-in-input form

    xdot = f(x, d) + g(x, d) u,    x in R_X,  d in D,  u in U,

with a feedback controller searched in the template subspace u = h(x) = H(x) theta.
Substituting the template gives the closed loop xdot = f(x, d) + G(x, d) theta
with G = g * H, which is the object everything downstream works on.

All polynomials are stored sparsely as (exponent-vector, coefficient) term lists
over a fixed, positional variable ordering.  For system data the ordering is the
joint state-then-disturbance list (x_1..x_n, d_1..d_m); the controller template H
lives in the state variables only and is lifted into the joint space when composed.
"""

from __future__ import annotations

import itertools
import warnings

import numpy as np

__all__ = [
    "Polynomial",
    "PolynomialVec",
    "PolynomialMatrix",
    "Box",
    "Polytope",
    "TemplatePolytope",
    "ControlSystem",
    "eval_poly",
    "degree_profile",
    "compose_control_matrix",
    "eval_system",
]


class Polynomial:
    """Sparse polynomial: sum of coeff * prod_j y_j**exps[j] terms.

    Terms with equal exponent vectors are merged at construction and
    zero-coefficient terms dropped, so equality of term lists is equality of
    polynomials (up to float representation).  Instances are immutable.
    """

    __slots__ = ("num_vars", "terms", "_exps", "_coeffs")

    def __init__(self, num_vars: int, terms) -> None:
        num_vars = int(num_vars)
        if num_vars < 0:
            raise ValueError("num_vars must be nonnegative")
        merged: dict[tuple[int, ...], float] = {}
        for exps, coeff in terms:
            key = tuple(int(e) for e in exps)
            if len(key) != num_vars:
                raise ValueError(
                    f"term exponent vector has length {len(key)}, expected {num_vars}"
                )
            if any(e < 0 for e in key):
                raise ValueError(f"negative exponent in term {key}")
            merged[key] = merged.get(key, 0.0) + float(coeff)
        clean = sorted((e, c) for e, c in merged.items() if c != 0.0)
        object.__setattr__(self, "num_vars", num_vars)
        object.__setattr__(self, "terms", tuple(clean))
        exps = np.array([e for e, _ in clean], dtype=np.int64)
        exps = exps.reshape(len(clean), num_vars)
        object.__setattr__(self, "_exps", exps)
        object.__setattr__(self, "_coeffs", np.array([c for _, c in clean]))

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, num_vars: int) -> "Polynomial":
        return cls(num_vars, [])

    @classmethod
    def constant(cls, num_vars: int, value: float) -> "Polynomial":
        return cls(num_vars, [((0,) * num_vars, value)])

    @classmethod
    def variable(cls, num_vars: int, index: int) -> "Polynomial":
        """The monomial y_index."""
        if not 0 <= index < num_vars:
            raise ValueError(f"variable index {index} out of range for {num_vars} vars")
        exps = [0] * num_vars
        exps[index] = 1
        return cls(num_vars, [(tuple(exps), 1.0)])

    # -- evaluation --------------------------------------------------------

    def __call__(self, point) -> float:
        point = np.asarray(point, dtype=float)
        if point.shape != (self.num_vars,):
            raise ValueError(
                f"point has shape {point.shape}, expected ({self.num_vars},)"
            )
        if len(self.terms) == 0:
            return 0.0
        return float(self._coeffs @ np.prod(point ** self._exps, axis=1))

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at an (N, num_vars) array of points, returning shape (N,)."""
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.num_vars:
            raise ValueError(f"points must have shape (N, {self.num_vars})")
        if len(self.terms) == 0:
            return np.zeros(points.shape[0])
        mono = np.prod(points[:, None, :] ** self._exps[None, :, :], axis=2)
        return mono @ self._coeffs

    # -- structure ---------------------------------------------------------

    def degree_profile(self) -> np.ndarray:
        """Per-variable maximum exponent, as an int vector of length num_vars."""
        if len(self.terms) == 0:
            return np.zeros(self.num_vars, dtype=np.int64)
        return self._exps.max(axis=0)

    def embed(self, num_vars: int) -> "Polynomial":
        """Lift into a larger variable list; new trailing variables get degree 0."""
        if num_vars < self.num_vars:
            raise ValueError("cannot embed into fewer variables")
        pad = (0,) * (num_vars - self.num_vars)
        return Polynomial(num_vars, [(e + pad, c) for e, c in self.terms])

    # -- arithmetic --------------------------------------------------------

    def _check_same_vars(self, other: "Polynomial") -> None:
        if self.num_vars != other.num_vars:
            raise ValueError("polynomials are over different variable lists")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(self.num_vars, other)
        self._check_same_vars(other)
        return Polynomial(self.num_vars, list(self.terms) + list(other.terms))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.num_vars, [(e, -c) for e, c in self.terms])

    def __sub__(self, other):
        return self + (-other if isinstance(other, Polynomial) else -float(other))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Polynomial(self.num_vars, [(e, c * float(other)) for e, c in self.terms])
        self._check_same_vars(other)
        prod = [
            (tuple(a + b for a, b in zip(e1, e2)), c1 * c2)
            for e1, c1 in self.terms
            for e2, c2 in other.terms
        ]
        return Polynomial(self.num_vars, prod)

    __rmul__ = __mul__

    def __eq__(self, other):
        return (
            isinstance(other, Polynomial)
            and self.num_vars == other.num_vars
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.num_vars, self.terms))

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        bits = []
        for exps, coeff in self.terms:
            mono = "*".join(
                f"y{j}" if e == 1 else f"y{j}^{e}" for j, e in enumerate(exps) if e
            )
            bits.append(f"{coeff:g}*{mono}" if mono else f"{coeff:g}")
        return "Polynomial(" + " + ".join(bits) + ")"


class PolynomialVec:
    """Vector of polynomials over one shared variable list."""

    __slots__ = ("entries", "num_vars")

    def __init__(self, entries) -> None:
        entries = tuple(entries)
        if not entries:
            raise ValueError("PolynomialVec needs at least one entry")
        nv = entries[0].num_vars
        if any(p.num_vars != nv for p in entries):
            raise ValueError("entries have mismatched variable counts")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "num_vars", nv)

    def __setattr__(self, name, value):
        raise AttributeError("PolynomialVec is immutable")

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i) -> Polynomial:
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def __call__(self, point) -> np.ndarray:
        return np.array([p(point) for p in self.entries])

    def degree_profile(self) -> np.ndarray:
        out = np.zeros(self.num_vars, dtype=np.int64)
        for p in self.entries:
            out = np.maximum(out, p.degree_profile())
        return out

    def embed(self, num_vars: int) -> "PolynomialVec":
        return PolynomialVec([p.embed(num_vars) for p in self.entries])


class PolynomialMatrix:
    """Dense matrix of polynomials over one shared variable list."""

    __slots__ = ("rows", "shape", "num_vars")

    def __init__(self, rows, num_vars: int | None = None, ncols: int | None = None) -> None:
        rows = tuple(tuple(r) for r in rows)
        if rows:
            ncols = len(rows[0])
            if any(len(r) != ncols for r in rows):
                raise ValueError("ragged rows")
        elif ncols is None:
            raise ValueError("ncols required for a matrix with zero rows")
        entries = [p for r in rows for p in r]
        if entries:
            nv = entries[0].num_vars
            if any(p.num_vars != nv for p in entries):
                raise ValueError("entries have mismatched variable counts")
        else:
            if num_vars is None:
                raise ValueError("num_vars required for a matrix with no entries")
            nv = int(num_vars)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "shape", (len(rows), int(ncols)))
        object.__setattr__(self, "num_vars", nv)

    def __setattr__(self, name, value):
        raise AttributeError("PolynomialMatrix is immutable")

    @classmethod
    def zeros(cls, shape: tuple[int, int], num_vars: int) -> "PolynomialMatrix":
        z = Polynomial.zero(num_vars)
        return cls(
            [[z] * shape[1] for _ in range(shape[0])],
            num_vars=num_vars,
            ncols=shape[1],
        )

    @classmethod
    def identity(cls, size: int, num_vars: int) -> "PolynomialMatrix":
        one = Polynomial.constant(num_vars, 1.0)
        zero = Polynomial.zero(num_vars)
        return cls([[one if i == j else zero for j in range(size)] for i in range(size)])

    def __getitem__(self, ij) -> Polynomial:
        i, j = ij
        return self.rows[i][j]

    def __call__(self, point) -> np.ndarray:
        out = np.zeros(self.shape)
        for i, row in enumerate(self.rows):
            for j, p in enumerate(row):
                out[i, j] = p(point)
        return out

    def degree_profile(self) -> np.ndarray:
        out = np.zeros(self.num_vars, dtype=np.int64)
        for row in self.rows:
            for p in row:
                out = np.maximum(out, p.degree_profile())
        return out

    def embed(self, num_vars: int) -> "PolynomialMatrix":
        return PolynomialMatrix(
            [[p.embed(num_vars) for p in row] for row in self.rows],
            num_vars=num_vars,
            ncols=self.shape[1],
        )

    def __matmul__(self, other: "PolynomialMatrix") -> "PolynomialMatrix":
        if self.shape[1] != other.shape[0]:
            raise ValueError(
                f"inner dimension mismatch: {self.shape} @ {other.shape}"
            )
        if self.num_vars != other.num_vars:
            raise ValueError("matrices are over different variable lists")
        n, k = self.shape
        _, q = other.shape
        out = []
        for i in range(n):
            row = []
            for j in range(q):
                acc = Polynomial.zero(self.num_vars)
                for l in range(k):
                    acc = acc + self.rows[i][l] * other.rows[l][j]
                row.append(acc)
            out.append(row)
        return PolynomialMatrix(out, num_vars=self.num_vars, ncols=q)


# -- module-level operation aliases (functional API) -------------------------


def eval_poly(p: Polynomial, point) -> float:
    """Evaluate a polynomial at a point."""
    return p(point)


def degree_profile(p) -> np.ndarray:
    """Per-variable maximum exponent of a Polynomial / PolynomialVec / matrix."""
    return p.degree_profile()


def compose_control_matrix(g: PolynomialMatrix, H: PolynomialMatrix) -> PolynomialMatrix:
    """Expand G = g * H, lifting H from state variables into g's joint variables.

    g is n x p over (x, d); H is p x q over x alone.  H's variables are lifted
    with zero disturbance degrees so the product shares one variable ordering.
    """
    if g.shape[1] != H.shape[0]:
        raise ValueError(
            f"inner dimension mismatch: g is {g.shape}, H is {H.shape}"
        )
    if H.num_vars > g.num_vars:
        raise ValueError(
            f"H has {H.num_vars} variables but g only {g.num_vars}"
        )
    return g @ H.embed(g.num_vars)


class Box:
    """Axis-aligned rectangle {y : lo <= y <= hi} with strictly positive widths."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi) -> None:
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be equal-length vectors")
        if not np.all(lo < hi):
            raise ValueError("box requires lo < hi in every coordinate")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):
        raise AttributeError("Box is immutable")

    @classmethod
    def empty_product(cls) -> "Box":
        """The zero-dimensional box (single point: the empty tuple)."""
        b = object.__new__(cls)
        z = np.zeros(0)
        z.setflags(write=False)
        object.__setattr__(b, "lo", z)
        object.__setattr__(b, "hi", z)
        return b

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def contains(self, point, tol: float = 0.0) -> bool:
        point = np.asarray(point, dtype=float)
        return bool(np.all(point >= self.lo - tol) and np.all(point <= self.hi + tol))

    def concat(self, other: "Box") -> "Box":
        """Cartesian product of two boxes (used for R_X x R_D)."""
        if self.dim == 0:
            return other
        if other.dim == 0:
            return self
        return Box(np.concatenate([self.lo, other.lo]), np.concatenate([self.hi, other.hi]))

    def vertices(self) -> np.ndarray:
        """All 2^dim corner points, shape (2^dim, dim)."""
        if self.dim == 0:
            return np.zeros((1, 0))
        corners = itertools.product(*[(l, h) for l, h in zip(self.lo, self.hi)])
        return np.array(list(corners))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(size, self.dim))

    def __repr__(self):
        return f"Box(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


class Polytope:
    """H-representation polytope {y : normals @ y <= offsets}.

    A polytope with zero halfspaces represents the whole space (used for an
    unconstrained input set).
    """

    __slots__ = ("normals", "offsets")

    def __init__(self, normals, offsets, dim: int | None = None) -> None:
        normals = np.asarray(normals, dtype=float)
        offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
        if normals.size == 0:
            if dim is None:
                raise ValueError("dim required for a polytope with no halfspaces")
            normals = np.zeros((0, dim))
            offsets = np.zeros(0)
        if normals.ndim != 2:
            raise ValueError("normals must be a 2-D array")
        if normals.shape[0] != offsets.shape[0]:
            raise ValueError("normals and offsets disagree on halfspace count")
        if normals.shape[0] and np.any(np.all(normals == 0.0, axis=1)):
            raise ValueError("zero normal vector")
        normals.setflags(write=False)
        offsets.setflags(write=False)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)

    def __setattr__(self, name, value):
        raise AttributeError("Polytope is immutable")

    @classmethod
    def from_box(cls, box: Box) -> "Polytope":
        eye = np.eye(box.dim)
        return cls(np.vstack([eye, -eye]), np.concatenate([box.hi, -box.lo]))

    @classmethod
    def unconstrained(cls, dim: int) -> "Polytope":
        return cls(np.zeros((0, dim)), np.zeros(0), dim=dim)

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    @property
    def num_halfspaces(self) -> int:
        return self.normals.shape[0]

    def contains(self, point, tol: float = 0.0) -> bool:
        point = np.asarray(point, dtype=float)
        if self.num_halfspaces == 0:
            return True
        return bool(np.all(self.normals @ point <= self.offsets + tol))

    def contains_many(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        if self.num_halfspaces == 0:
            return np.ones(points.shape[0], dtype=bool)
        return np.all(points @ self.normals.T <= self.offsets + tol, axis=1)

    def __repr__(self):
        return f"Polytope({self.num_halfspaces} halfspaces in R^{self.dim})"


class TemplatePolytope:
    """Polytope with fixed facet normals and movable offsets eta in [eta_lo, eta_hi]."""

    __slots__ = ("normals", "eta", "eta_lo", "eta_hi")

    def __init__(self, normals, eta, eta_lo, eta_hi) -> None:
        normals = np.asarray(normals, dtype=float)
        eta = np.asarray(eta, dtype=float)
        eta_lo = np.asarray(eta_lo, dtype=float)
        eta_hi = np.asarray(eta_hi, dtype=float)
        if normals.ndim != 2 or normals.shape[0] == 0:
            raise ValueError("template needs at least one facet normal")
        k = normals.shape[0]
        if not (eta.shape == eta_lo.shape == eta_hi.shape == (k,)):
            raise ValueError("eta, eta_lo, eta_hi must all have one entry per facet")
        if np.any(np.all(normals == 0.0, axis=1)):
            raise ValueError("zero facet normal")
        if np.any(eta_lo > eta_hi):
            raise ValueError("eta_lo exceeds eta_hi on some facet")
        if np.any(eta < eta_lo - 1e-12) or np.any(eta > eta_hi + 1e-12):
            raise ValueError("eta outside [eta_lo, eta_hi]")
        for a in (normals, eta, eta_lo, eta_hi):
            a.setflags(write=False)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "eta_lo", eta_lo)
        object.__setattr__(self, "eta_hi", eta_hi)

    def __setattr__(self, name, value):
        raise AttributeError("TemplatePolytope is immutable")

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    @property
    def num_facets(self) -> int:
        return self.normals.shape[0]

    def with_eta(self, eta) -> "TemplatePolytope":
        return TemplatePolytope(self.normals, eta, self.eta_lo, self.eta_hi)

    def as_polytope(self, eta=None) -> Polytope:
        return Polytope(self.normals, self.eta if eta is None else eta)

    def lower_polytope(self) -> Polytope:
        """The inner polytope at offsets eta_lo (the set that must stay inside)."""
        return Polytope(self.normals, self.eta_lo)

    def upper_polytope(self) -> Polytope:
        """The outer polytope at offsets eta_hi (the safe set)."""
        return Polytope(self.normals, self.eta_hi)


class ControlSystem:
    """Polynomial control system with box state domain and polytopic D and U.

    f and g are given over the joint variables (x_1..x_n, d_1..d_m); the
    controller template H over (x_1..x_n) only.  The closed-loop control matrix
    G = g * H is expanded once at construction.

    dist_box is the interval hull of D.  If omitted it is computed by 2m
    support LPs over D; if given explicitly it wins, with a warning when it
    fails to cover the computed hull.
    """

    __slots__ = ("f", "g", "H", "G", "state_box", "dist_box", "D", "U")

    def __init__(
        self,
        f: PolynomialVec,
        g: PolynomialMatrix,
        H: PolynomialMatrix,
        state_box: Box,
        D: Polytope,
        U: Polytope,
        dist_box: Box | None = None,
    ) -> None:
        n = state_box.dim
        m = D.dim
        if len(f) != n:
            raise ValueError(f"f has {len(f)} entries, state dimension is {n}")
        if f.num_vars != n + m:
            raise ValueError(f"f must be over {n + m} variables (x then d)")
        if g.shape[0] != n or g.num_vars != n + m:
            raise ValueError("g must be n x p over the joint (x, d) variables")
        p = g.shape[1]
        if H.num_vars != n:
            raise ValueError("H must be over the state variables only")
        if H.shape[0] != p:
            raise ValueError(f"H has {H.shape[0]} rows, g has {p} columns")
        if U.dim != p:
            raise ValueError("U lives in input space R^p")

        hull = _interval_hull(D) if m else Box.empty_product()
        if dist_box is None:
            if hull is None:
                raise ValueError(
                    "cannot compute the interval hull of D; pass dist_box explicitly"
                )
            dist_box = hull
        elif m:
            if dist_box.dim != m:
                raise ValueError("dist_box dimension disagrees with D")
            if hull is not None and (
                np.any(dist_box.lo > hull.lo + 1e-9) or np.any(dist_box.hi < hull.hi - 1e-9)
            ):
                warnings.warn(
                    "explicit dist_box does not contain the interval hull of D",
                    stacklevel=2,
                )

        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "G", compose_control_matrix(g, H))
        object.__setattr__(self, "state_box", state_box)
        object.__setattr__(self, "dist_box", dist_box)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "U", U)

    def __setattr__(self, name, value):
        raise AttributeError("ControlSystem is immutable")

    @property
    def n(self) -> int:
        return self.state_box.dim

    @property
    def m(self) -> int:
        return self.D.dim

    @property
    def p(self) -> int:
        return self.g.shape[1]

    @property
    def q(self) -> int:
        return self.H.shape[1]

    def joint_box(self) -> Box:
        return self.state_box.concat(self.dist_box)

    def closed_loop(self, theta) -> PolynomialVec:
        """F = f + G theta as a polynomial vector over (x, d)."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.q,):
            raise ValueError(f"theta must have length {self.q}")
        comps = []
        for i in range(self.n):
            acc = self.f[i]
            for l in range(self.q):
                if theta[l] != 0.0:
                    acc = acc + self.G[i, l] * theta[l]
            comps.append(acc)
        return PolynomialVec(comps)

    def control_value(self, theta, x) -> np.ndarray:
        """h(x) = H(x) theta."""
        theta = np.asarray(theta, dtype=float)
        return self.H(np.asarray(x, dtype=float)) @ theta

    def rhs(self, x, d, theta) -> np.ndarray:
        """f(x, d) + G(x, d) theta at one point."""
        x = np.asarray(x, dtype=float)
        d = np.asarray(d, dtype=float)
        if x.shape != (self.n,) or d.shape != (self.m,):
            raise ValueError("state or disturbance dimension mismatch")
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.q,):
            raise ValueError(f"theta must have length {self.q}")
        y = np.concatenate([x, d])
        out = self.f(y)
        if self.q:
            out = out + self.G(y) @ theta
        return out


def eval_system(sys: ControlSystem, x, d, theta) -> np.ndarray:
    """Closed-loop vector field f(x,d) + G(x,d) theta."""
    return sys.rhs(x, d, theta)


def _interval_hull(D: Polytope) -> Box | None:
    """Smallest box containing D, by 2m support LPs; None if D is unbounded."""
    from . import lp as _lp

    m = D.dim
    lo = np.empty(m)
    hi = np.empty(m)
    for j in range(m):
        for sign, dest in ((1.0, hi), (-1.0, lo)):
            c = np.zeros(m)
            c[j] = sign
            prog = _lp.LinearProgram(
                objective=c,
                row_coeffs=D.normals,
                row_relations=[_lp.Relation.LE] * D.num_halfspaces,
                row_rhs=D.offsets,
                lower=np.full(m, -np.inf),
                upper=np.full(m, np.inf),
            )
            out = _lp.solve(prog)
            if out.status is not _lp.Status.OPTIMAL:
                warnings.warn(
                    f"disturbance polytope unbounded or empty in coordinate {j}",
                    stacklevel=3,
                )
                return None
            dest[j] = sign * out.value
    return Box(lo, hi)
