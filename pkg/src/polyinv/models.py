"""The benchmark systems bundled with the package.

Four models: two Moore-Greitzer jet-engine surge instances (linear and
degree-(3,1) controller templates), a unicycle in polynomial coordinates with
its forward velocity treated as the disturbance, and a rigid-body motion
model with a multi-affine two-output controller.

Domains, disturbance sets, input sets and template radii follow the published
experiments.  The rigid-body facet template is a reconstruction: the source
only states "18 facets", so this file uses the six axis-aligned directions
plus the twelve edge diagonals (normalized), with the outer offsets tangent
to the state box and the inner offsets tangent to a small ball around the
box center; the sixteen controller parameters are read as the full
multi-affine basis (eight monomials) per output.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Box,
    ControlSystem,
    Polynomial,
    PolynomialMatrix,
    PolynomialVec,
    Polytope,
    TemplatePolytope,
)
from .synthesis import SynthesisOptions

__all__ = [
    "BenchmarkModel",
    "uniform_normals",
    "tangent_offsets",
    "jet_engine_1",
    "jet_engine_2",
    "unicycle",
    "rigid_body",
    "builtin_models",
]


@dataclass(frozen=True)
class BenchmarkModel:
    name: str
    system: ControlSystem
    template: TemplatePolytope
    options: SynthesisOptions
    notes: str = ""


def uniform_normals(count: int, phase: float = 0.0) -> np.ndarray:
    """count unit normals at uniformly spaced angles, starting at phase."""
    angles = phase + 2.0 * math.pi * np.arange(count) / count
    return np.column_stack([np.cos(angles), np.sin(angles)])


def tangent_offsets(normals: np.ndarray, center, radius: float) -> np.ndarray:
    """Offsets making each (unit-normal) halfspace tangent to a ball."""
    center = np.asarray(center, dtype=float)
    return normals @ center + radius


def _interval(lo: float, hi: float) -> Polytope:
    return Polytope(np.array([[1.0], [-1.0]]), np.array([hi, -lo]))


def _jet_system(dist: float) -> ControlSystem:
    return _jet_system_with_H(
        PolynomialMatrix([[Polynomial.variable(2, 0), Polynomial.variable(2, 1)]]),
        dist,
    )


def _jet_system_with_H(H: PolynomialMatrix, dist: float) -> ControlSystem:
    # x1dot = -x2 - 1.5 x1^2 - 0.5 x1^3 + d,  x2dot = u
    f1 = Polynomial(
        3, [((0, 1, 0), -1.0), ((2, 0, 0), -1.5), ((3, 0, 0), -0.5), ((0, 0, 1), 1.0)]
    )
    return ControlSystem(
        f=PolynomialVec([f1, Polynomial.zero(3)]),
        g=PolynomialMatrix([[Polynomial.zero(3)], [Polynomial.constant(3, 1.0)]]),
        H=H,
        state_box=Box([-0.2, -0.2], [0.2, 0.2]),
        D=_interval(-dist, dist),
        U=_interval(-0.35, 0.35),
    )


def jet_engine_1() -> BenchmarkModel:
    """Jet engine, linear controller, 24 facets, |d| <= 0.02."""
    normals = uniform_normals(24)
    template = TemplatePolytope(
        normals,
        eta=tangent_offsets(normals, (0.0, 0.0), 0.2),
        eta_lo=tangent_offsets(normals, (0.0, 0.0), 0.01),
        eta_hi=tangent_offsets(normals, (0.0, 0.0), 0.2),
    )
    return BenchmarkModel(
        name="jet1",
        system=_jet_system(0.02),
        template=template,
        options=SynthesisOptions(epsilon=0.02, max_iters=50),
        notes="Moore-Greitzer surge model; linear feedback h = th1 x1 + th2 x2.",
    )


def jet_engine_2() -> BenchmarkModel:
    """Jet engine, degree-(3,1) controller, 8 facets, |d| <= 0.025."""
    basis = [
        Polynomial(2, [((a, b), 1.0)])
        for a in range(4)
        for b in range(2)
    ]
    H = PolynomialMatrix([basis])
    normals = uniform_normals(8)
    template = TemplatePolytope(
        normals,
        eta=tangent_offsets(normals, (0.0, 0.0), 0.2),
        eta_lo=tangent_offsets(normals, (0.0, 0.0), 0.01),
        eta_hi=tangent_offsets(normals, (0.0, 0.0), 0.2),
    )
    return BenchmarkModel(
        name="jet2",
        system=_jet_system_with_H(H, 0.025),
        template=template,
        options=SynthesisOptions(epsilon=0.02, max_iters=50),
        notes="Larger disturbance compensated by a richer controller template.",
    )


def unicycle() -> BenchmarkModel:
    """Unicycle in body coordinates; velocity is the disturbance, omega the input."""
    # z1dot = v - z2 w, z2dot = z1 w, over (z1, z2, v)
    f = PolynomialVec([Polynomial(3, [((0, 0, 1), 1.0)]), Polynomial.zero(3)])
    g = PolynomialMatrix(
        [[Polynomial(3, [((0, 1, 0), -1.0)])], [Polynomial(3, [((1, 0, 0), 1.0)])]]
    )
    H = PolynomialMatrix(
        [[Polynomial.constant(2, 1.0), Polynomial.variable(2, 0), Polynomial.variable(2, 1)]]
    )
    system = ControlSystem(
        f=f,
        g=g,
        H=H,
        state_box=Box([-0.1, 0.9], [0.1, 1.1]),
        D=_interval(0.96, 1.04),
        U=Polytope.unconstrained(1),
    )
    normals = uniform_normals(24)
    center = (0.0, 1.0)
    template = TemplatePolytope(
        normals,
        eta=tangent_offsets(normals, center, 0.1),
        eta_lo=tangent_offsets(normals, center, 0.01),
        eta_hi=tangent_offsets(normals, center, 0.1),
    )
    return BenchmarkModel(
        name="unicycle",
        system=system,
        template=template,
        options=SynthesisOptions(epsilon=0.01, max_iters=50),
        notes="Affine feedback h = th0 + th1 z1 + th2 z2; no input constraints.",
    )


def _multi_affine_basis(n: int) -> list[Polynomial]:
    """All 2^n monomials with exponents in {0, 1}, lexicographic order."""
    return [
        Polynomial(n, [(exps, 1.0)])
        for exps in itertools.product(range(2), repeat=n)
    ]


def rigid_body_normals() -> np.ndarray:
    """Six axis directions plus the twelve normalized edge diagonals."""
    eye = np.eye(3)
    rows = [eye[i] * s for i in range(3) for s in (1.0, -1.0)]
    for i in range(3):
        for j in range(i + 1, 3):
            for si in (1.0, -1.0):
                for sj in (1.0, -1.0):
                    v = np.zeros(3)
                    v[i], v[j] = si, sj
                    rows.append(v / math.sqrt(2.0))
    return np.array(rows)


def rigid_body() -> BenchmarkModel:
    """Rigid-body motion with two torque inputs and a multi-affine controller."""
    # x1dot = u1, x2dot = u2, x3dot = x1 x2; no disturbance
    f = PolynomialVec(
        [Polynomial.zero(3), Polynomial.zero(3), Polynomial(3, [((1, 1, 0), 1.0)])]
    )
    g = PolynomialMatrix(
        [
            [Polynomial.constant(3, 1.0), Polynomial.zero(3)],
            [Polynomial.zero(3), Polynomial.constant(3, 1.0)],
            [Polynomial.zero(3), Polynomial.zero(3)],
        ]
    )
    basis = _multi_affine_basis(3)
    zero = Polynomial.zero(3)
    H = PolynomialMatrix([basis + [zero] * 8, [zero] * 8 + basis])
    box = Box([-0.2, -0.2, -0.2], [0.4, 0.2, 0.4])
    system = ControlSystem(
        f=f,
        g=g,
        H=H,
        state_box=box,
        D=Polytope.unconstrained(0),
        U=Polytope(
            np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]),
            np.ones(4),
        ),
    )
    normals = rigid_body_normals()
    center = box.midpoint
    support = np.array(
        [float(np.sum(np.maximum(n * box.lo, n * box.hi))) for n in normals]
    )
    template = TemplatePolytope(
        normals,
        eta=support,
        eta_lo=tangent_offsets(normals, center, 0.05),
        eta_hi=support,
    )
    return BenchmarkModel(
        name="rigid",
        system=system,
        template=template,
        options=SynthesisOptions(epsilon=0.05, max_iters=50),
        notes=(
            "Reconstructed 18-facet template: 6 axis normals + 12 edge diagonals, "
            "outer offsets tangent to the state box, inner offsets tangent to a "
            "radius-0.05 ball at the box center.  The sixteen controller "
            "parameters are the full multi-affine basis (8 monomials) per output."
        ),
    )


def builtin_models() -> list[BenchmarkModel]:
    """All bundled benchmarks, in publication order."""
    return [jet_engine_1(), jet_engine_2(), unicycle(), rigid_body()]


def get_model(name: str) -> BenchmarkModel:
    for model in builtin_models():
        if model.name == name:
            return model
    raise KeyError(f"unknown builtin model {name!r}")
