"""Equispaced mesh, rectangle-rule discretization, and the theta matrix.

A matrix-valued function ``A(t)`` on ``[a, b]`` becomes a 4-mode tensor whose
(k, l) slice is the lower-triangular matrix ``nu`` with

    nu[i, j] = A_kl(tau_i) * h   for i >= j,   0 above the diagonal,

on the mesh ``tau_i = a + i*h`` with ``h = (b - a) / M`` (i = 1..M, so the
last point is ``b`` and the first is ``a + h``).  This right-endpoint cell
convention is the one that reproduces the reference error tables; the
solution at ``t = a`` is the known initial value and is not a mesh point.

The scheme is the rectangle quadrature rule, accurate to O(h) = O(1/M).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor_core import BlockStructure, Tensor4

__all__ = ["Mesh", "build_mesh", "discretize_problem", "theta_matrix", "DiscretizationError"]


class DiscretizationError(ValueError):
    """An entry function produced a non-finite sample."""


@dataclass(frozen=True)
class Mesh:
    """Equispaced mesh of M right-endpoint cell points on [a, b]."""

    a: float
    b: float
    m: int
    h: float
    tau: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=float))


def build_mesh(a: float, b: float, m: int) -> Mesh:
    """Build the mesh ``tau_i = a + i*h``, ``h = (b - a)/m``, i = 1..m.

    Raises on a degenerate interval or fewer than two points.
    """
    if not b > a:
        raise ValueError(f"degenerate interval [{a}, {b}]")
    if m < 2:
        raise ValueError(f"mesh needs at least 2 points, got {m}")
    h = (b - a) / m
    tau = a + h * np.arange(1, m + 1)
    return Mesh(a=float(a), b=float(b), m=int(m), h=float(h), tau=tau)


def theta_matrix(mesh: Mesh) -> np.ndarray:
    """h times the lower-triangular all-ones M x M matrix (discrete Heaviside)."""
    return mesh.h * np.tril(np.ones((mesh.m, mesh.m)))


def discretize_problem(problem, mesh: Mesh) -> Tensor4:
    """Sample a Problem's entry functions into the 4-mode tensor.

    Slice (k, l) is ``h * A_kl(tau_i)`` on and below the diagonal (row i takes
    the sample at tau_i), flagged lower-triangular; entries with no terms
    produce exact-zero slices flagged ZERO.  Zero detection is structural
    (term lists), never numerical.
    """
    n = problem.n
    m = mesh.m
    data = np.zeros((n, n, m, m), dtype=complex)
    flags = np.full((n, n), BlockStructure.ZERO, dtype=np.uint8)
    mask = np.tril(np.ones((m, m)))
    for (k, l), terms in problem.entries.items():
        if not terms:
            continue
        profile = problem.eval_entry(k, l, mesh.tau)
        bad = ~np.isfinite(profile)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise DiscretizationError(
                f"entry ({k}, {l}) of problem {problem.id!r} is not finite "
                f"at tau[{i}] = {mesh.tau[i]}"
            )
        data[k, l] = (profile * mesh.h)[:, None] * mask
        flags[k, l] = BlockStructure.LOWER_TRIANGULAR
    return Tensor4(data, flags)
