"""Hyperboloid-model primitives: points, isometries, polar coordinates.

Points live on the upper sheet of x^2 + y^2 - z^2 = -1 in Minkowski
3-space; isometries are 3x3 matrices preserving the bilinear form
diag(1, 1, -1).  In this representation composing isometries is a plain
matrix product and distance is a single acosh, so nothing degrades far
from the origin the way disk or polar coordinates do.  Polar coordinates
appear only at the input/output boundary.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

TAU = 2.0 * math.pi

#: signs of the Minkowski form diag(1, 1, -1)
MINKOWSKI_SIGNS = np.array([1.0, 1.0, -1.0])

#: the point j(v0): apex of the hyperboloid
ORIGIN = np.array([0.0, 0.0, 1.0])

IDENTITY = np.eye(3)

#: compose_chain renormalizes after this many products to bound drift
RENORM_EVERY = 32

POINT_TOL = 1e-9


class PolarCoord(NamedTuple):
    """Radial coordinates (r, phi): r in absolute units, phi in [0, 2pi)."""

    r: float
    phi: float


def wrap_angle(phi):
    return phi % TAU


def minkowski_dot(a, b):
    """Minkowski inner product; broadcasts over leading axes."""
    return (np.asarray(a) * np.asarray(b) * MINKOWSKI_SIGNS).sum(axis=-1)


def hyp_distance(a, b):
    """Distance acosh(-<a,b>).

    The argument is clamped to [1, inf) to absorb rounding, so distances
    below ~1e-8 collapse to 0 rather than NaN.
    """
    return np.arccosh(np.maximum(-minkowski_dot(a, b), 1.0))


def polar_to_point(c: PolarCoord):
    r, phi = c
    return np.array([math.sinh(r) * math.cos(phi),
                     math.sinh(r) * math.sin(phi),
                     math.cosh(r)])


def point_to_polar(p) -> PolarCoord:
    r = math.acosh(max(float(p[2]), 1.0))
    if r < POINT_TOL:
        return PolarCoord(0.0, 0.0)
    return PolarCoord(r, wrap_angle(math.atan2(float(p[1]), float(p[0]))))


def is_valid_point(p, tol=POINT_TOL):
    return abs(float(minkowski_dot(p, p)) + 1.0) <= tol and p[2] >= 1.0 - tol


def rotation(theta):
    """Rotation around the apex by theta (counterclockwise)."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def translation(length):
    """Translation by `length` along the x-axis geodesic."""
    ch, sh = math.cosh(length), math.sinh(length)
    return np.array([[ch, 0.0, sh], [0.0, 1.0, 0.0], [sh, 0.0, ch]])


def compose(g, h):
    """Product g.h (apply h first).  Callers accumulating long chains
    should renormalize every RENORM_EVERY steps; see compose_chain."""
    return g @ h


def inverse(g):
    # J g^T J is the exact inverse of a Minkowski-orthogonal matrix
    return (g.T * MINKOWSKI_SIGNS).T * MINKOWSKI_SIGNS


def renormalize(m):
    """Gram-Schmidt in signature (2,1): snap m back onto the isometry group.

    The timelike column is fixed first so the upper sheet is preserved.
    """
    z = m[:, 2]
    z = z / math.sqrt(-minkowski_dot(z, z))
    x = m[:, 0] + minkowski_dot(m[:, 0], z) * z
    x = x / math.sqrt(minkowski_dot(x, x))
    y = m[:, 1] + minkowski_dot(m[:, 1], z) * z - minkowski_dot(m[:, 1], x) * x
    y = y / math.sqrt(minkowski_dot(y, y))
    return np.column_stack([x, y, z])


def compose_chain(matrices):
    """Left-to-right product of a sequence, renormalized every RENORM_EVERY."""
    acc = IDENTITY
    for k, m in enumerate(matrices, 1):
        acc = acc @ m
        if k % RENORM_EVERY == 0:
            acc = renormalize(acc)
    return renormalize(acc)


def isometry_defect(m):
    """Max deviation of m^T J m from J; 0 for an exact isometry."""
    j = np.diag(MINKOWSKI_SIGNS)
    return float(np.abs(m.T @ j @ m - j).max())


def triangle_side(alpha, beta, gamma):
    """Side opposite `alpha` in a hyperbolic triangle with the given angles
    (second law of cosines)."""
    ch = (math.cos(alpha) + math.cos(beta) * math.cos(gamma)) / (
        math.sin(beta) * math.sin(gamma))
    return math.acosh(ch)


def step_isometries(spec):
    """Parent-frame -> child-frame isometries for every (vertex type, child
    index) of a grid spec, plus the root's steps keyed by its type name.

    Frame convention: a vertex sits at the frame origin with +x pointing at
    its right parent (at child 0 for the root).  Around a vertex of degree
    k the consecutive neighbors -- right parent, left parent (if any),
    ring predecessor, children left to right, ring successor -- are spaced
    by the uniform face angle 2pi/k, counterclockwise.  The step rotates to
    the child's bearing, translates one edge, and turns to face back.
    """
    if spec.kind not in ("G7", "G67"):
        raise ValueError(f"unknown grid kind: {spec.kind!r}")
    table = {}
    for name, vt in spec.types.items():
        angle = TAU / vt.degree
        for i, child_name in enumerate(vt.child_types):
            bearing = (vt.n_parents + 1 + i) * angle
            length = spec.edge_lengths[(vt.degree, spec.types[child_name].degree)]
            step = rotation(bearing) @ translation(length) @ rotation(math.pi)
            table[(name, i)] = renormalize(step)
    root = spec.root_type
    angle = TAU / root.degree
    for i, child_name in enumerate(root.child_types):
        bearing = i * angle
        length = spec.edge_lengths[(root.degree, spec.types[child_name].degree)]
        step = rotation(bearing) @ translation(length) @ rotation(math.pi)
        table[(root.name, i)] = renormalize(step)
    return table
