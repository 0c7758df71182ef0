"""The blossom (polar form) of a polynomial, evaluated at rectangle vertex classes.

The blossom of a polynomial p of per-variable degrees (delta_1, ..., delta_m)
is the unique symmetric multi-affine map q over delta_1 + ... + delta_m slot
variables that agrees with p on the diagonal.  Each monomial factor y_j**d is
replaced by the elementary symmetric average

    B(d, delta)(z_1, ..., z_delta) = (1 / C(delta, d)) * sum over d-subsets
                                     of products of the chosen slots.

Because q is symmetric within each variable's slot block, its value at a
vertex of the lifted rectangle [lo_j, hi_j]^delta_j x ... depends only on how
many slots of each block sit at the upper bound.  Such an orbit is a
VertexClass, and with k of delta slots at hi the symmetric average collapses
to the closed form

    B(d, delta) at class k = sum_i C(k, i) * C(delta - k, d - i) / C(delta, d)
                             * hi**i * lo**(d - i),

counting d-subsets by how many upper slots i they pick up.  Only these class
values are ever needed: the blossom is never materialised as a coefficient
table.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .core import Box, Polynomial

__all__ = [
    "VertexClass",
    "BlossomContext",
    "enumerate_vertex_classes",
    "bernstein_sym_at_class",
    "bernstein_sym_enumerated",
    "eval_blossom_at_class",
    "class_point",
]


@dataclass(frozen=True)
class VertexClass:
    """Orbit of lifted-rectangle vertices under per-variable slot permutation.

    upper_counts[j] is the number of variable-j slots sitting at the upper
    bound; the remaining profile[j] - upper_counts[j] slots sit at the lower.
    """

    upper_counts: tuple[int, ...]

    def __post_init__(self):
        if any(k < 0 for k in self.upper_counts):
            raise ValueError("upper counts must be nonnegative")


@dataclass(frozen=True)
class BlossomContext:
    """Degree profile plus the box whose lifted rectangle the blossom lives on."""

    profile: tuple[int, ...]
    box: Box

    def __post_init__(self):
        object.__setattr__(self, "profile", tuple(int(d) for d in self.profile))
        if len(self.profile) != self.box.dim:
            raise ValueError("profile length must equal box dimension")
        if any(d < 0 for d in self.profile):
            raise ValueError("profile entries must be nonnegative")


def enumerate_vertex_classes(profile) -> list[VertexClass]:
    """All vertex classes of a profile, lexicographically ordered.

    There are exactly prod_j (profile[j] + 1) of them; a zero-degree variable
    contributes the single count 0.
    """
    profile = [int(d) for d in profile]
    if any(d < 0 for d in profile):
        raise ValueError("profile entries must be nonnegative")
    return [
        VertexClass(counts)
        for counts in itertools.product(*[range(d + 1) for d in profile])
    ]


def bernstein_sym_at_class(d: int, delta: int, k: int, lo: float, hi: float) -> float:
    """Symmetric-average factor B(d, delta) at a class with k upper slots."""
    if not 0 <= d <= delta:
        raise ValueError(f"need 0 <= d <= delta, got d={d}, delta={delta}")
    if not 0 <= k <= delta:
        raise ValueError(f"need 0 <= k <= delta, got k={k}, delta={delta}")
    if d == 0:
        return 1.0
    total = 0.0
    for i in range(max(0, d - delta + k), min(d, k) + 1):
        total += comb(k, i) * comb(delta - k, d - i) * hi**i * lo ** (d - i)
    return total / comb(delta, d)


def bernstein_sym_enumerated(d: int, slots) -> float:
    """Reference evaluation of B(d, delta) by direct subset enumeration.

    Averages the products of every combination of d slot values.  Exponential
    in delta; used to validate the closed form, never on the production path.
    """
    slots = list(slots)
    delta = len(slots)
    if not 0 <= d <= delta:
        raise ValueError(f"need 0 <= d <= len(slots), got d={d}, delta={delta}")
    if d == 0:
        return 1.0
    total = 0.0
    for combo in itertools.combinations(slots, d):
        total += float(np.prod(combo))
    return total / comb(delta, d)


def eval_blossom_at_class(p: Polynomial, ctx: BlossomContext, cls: VertexClass) -> float:
    """Blossom value of p at a vertex class of ctx's lifted rectangle.

    p may have smaller degrees than ctx.profile (degree elevation); it must not
    exceed it.
    """
    profile = ctx.profile
    if p.num_vars != len(profile):
        raise ValueError(
            f"polynomial has {p.num_vars} variables, context profile {len(profile)}"
        )
    if len(cls.upper_counts) != len(profile):
        raise ValueError("class and profile lengths differ")
    if any(k > d for k, d in zip(cls.upper_counts, profile)):
        raise ValueError("class upper counts exceed the profile")
    deg = p.degree_profile()
    if np.any(deg > np.array(profile)):
        raise ValueError(
            f"profile {profile} too small for polynomial of degrees {tuple(deg)}"
        )
    lo, hi = ctx.box.lo, ctx.box.hi
    total = 0.0
    for exps, coeff in p.terms:
        factor = coeff
        for j, d in enumerate(exps):
            if d:
                factor *= bernstein_sym_at_class(
                    d, profile[j], cls.upper_counts[j], lo[j], hi[j]
                )
        total += factor
    return total


def class_point(ctx: BlossomContext, cls: VertexClass) -> np.ndarray:
    """Canonical lifted-space representative: first k_j slots at hi, rest at lo."""
    if len(cls.upper_counts) != len(ctx.profile):
        raise ValueError("class and profile lengths differ")
    coords: list[float] = []
    for j, delta in enumerate(ctx.profile):
        k = cls.upper_counts[j]
        if k > delta:
            raise ValueError("class upper counts exceed the profile")
        coords.extend([ctx.box.hi[j]] * k)
        coords.extend([ctx.box.lo[j]] * (delta - k))
    return np.array(coords)
