"""Built-in test problems, symbolic entry functions, and reference solutions.

A :class:`Problem` describes ``A(t)`` symbolically: each matrix entry is a
sum of terms ``coeff * t**power * trig(omega * t)`` with trig one of
{1, cos, sin}.  That covers the constant and polynomial/cosine test matrices
as well as the spin-simulation Hamiltonians, keeps sampling exact, and makes
zero entries structural.

References (the sampled true bilinear form ``w^H U(t) v``) come either from
closed forms, where the problem admits one, or from an adaptive
Dormand-Prince integration with dense output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .discretize import Mesh

__all__ = [
    "Term",
    "Problem",
    "Reference",
    "NmrCoefficients",
    "builtin",
    "builtin_ids",
    "analytic_const3",
    "analytic_nmr1",
    "nmr_coefficients",
    "nmr_generate",
    "rk45_reference",
    "StiffnessError",
    "problem_to_json",
    "problem_from_json",
]

DEFAULT_NMR_SEED = 20230517


class StiffnessError(RuntimeError):
    """The adaptive integrator underflowed its step size."""


@dataclass(frozen=True)
class Term:
    """One summand ``coeff * t**power * trig(omega*t)`` of a matrix entry."""

    coeff: complex
    power: int = 0
    trig: str = "none"  # none | cos | sin
    omega: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        val = self.coeff * t**self.power
        if self.trig == "cos":
            val = val * np.cos(self.omega * t)
        elif self.trig == "sin":
            val = val * np.sin(self.omega * t)
        elif self.trig != "none":
            raise ValueError(f"unknown trig kind {self.trig!r}")
        return val


@dataclass
class Problem:
    """Symbolic description of ``A(t)`` on ``[a, b]`` plus the probe vectors."""

    id: str
    n: int
    a: float
    b: float
    entries: dict[tuple[int, int], list[Term]]
    v: np.ndarray
    w: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=complex).ravel()
        self.w = np.asarray(self.w, dtype=complex).ravel()
        if self.v.size != self.n or self.w.size != self.n:
            raise ValueError("v and w must have length n")
        for (k, l) in self.entries:
            if not (0 <= k < self.n and 0 <= l < self.n):
                raise ValueError(f"entry index ({k}, {l}) out of bounds for n={self.n}")

    def eval_entry(self, k: int, l: int, t):
        """Evaluate entry (k, l) at scalar or array ``t``."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for term in self.entries.get((k, l), ()):
            out += term(t)
        return out

    def eval_matrix(self, t: float) -> np.ndarray:
        """Dense ``A(t)`` at one time point."""
        out = np.zeros((self.n, self.n), dtype=complex)
        for (k, l), terms in self.entries.items():
            for term in terms:
                out[k, l] += term(float(t))
        return out


@dataclass
class Reference:
    """Sampled true solution ``s_hat`` on a mesh."""

    kind: str  # analytic | rk45
    values: np.ndarray
    rtol: float | None = None
    atol: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).ravel()


def _entries_from_matrix(mat) -> dict:
    entries = {}
    n = len(mat)
    for k in range(n):
        for l in range(n):
            terms = mat[k][l]
            if terms:
                entries[(k, l)] = list(terms)
    return entries


def _const3() -> Problem:
    c = lambda x: [Term(x)]
    mat = [
        [c(-1), c(1), c(1)],
        [c(1), [], c(1)],
        [c(1), c(1), c(-1)],
    ]
    e1 = np.array([1.0, 0.0, 0.0])
    return Problem("const3", 3, 0.0, 1.0, _entries_from_matrix(mat), e1, e1)


def _timedep5() -> Problem:
    K = Term  # brevity: K(c, p) is c * t**p, cos/sin spelled out
    cos = Term(1.0, 0, "cos", 1.0)
    mat = [
        [[cos], [], [K(1)], [K(2)], [K(1)]],
        [[], [cos, K(-1, 1)], [K(1), K(-3, 1)], [K(1, 1)], []],
        [[], [K(1, 1)], [K(2, 1), cos], [], []],
        [[], [K(1)], [K(2, 1), K(1)], [K(1, 1), cos], [K(1, 1)]],
        [[K(1, 1)], [K(-1, 1), K(-1)], [K(-6, 1), K(-1)], [K(1), K(-2, 1)], [cos, K(-2, 1)]],
    ]
    e1 = np.zeros(5)
    e1[0] = 1.0
    return Problem("timedep5", 5, 1e-4, 1.0, _entries_from_matrix(mat), e1, e1)


def _zero1() -> Problem:
    return Problem("zero1", 1, 0.0, 1.0, {}, np.array([1.0]), np.array([1.0]))


@dataclass(frozen=True)
class NmrCoefficients:
    """Seeded synthetic coefficient set for the spin-simulation generators."""

    kind: int
    seed: int
    nu: float
    alpha: np.ndarray                  # 16 diagonal frequencies
    beta: np.ndarray | None = None     # kind 1: per-level cos(2 pi nu t) weights
    gamma: np.ndarray | None = None    # kind 1: per-level cos(4 pi nu t) weights
    B: np.ndarray | None = None        # kinds 2-3: coupling matrix
    C: np.ndarray | None = None        # kinds 2-3: second coupling matrix


def _symmetric_sparse(rng, n, pairs_per_row, scale, complex_values=False):
    mat = np.zeros((n, n), dtype=complex if complex_values else float)
    for i in range(n):
        cols = rng.choice(n - 1, size=pairs_per_row, replace=False)
        for c in cols:
            j = c if c < i else c + 1
            val = rng.uniform(-scale, scale)
            if complex_values:
                val = val + 1j * rng.uniform(-scale, scale)
            mat[i, j] = val
            mat[j, i] = np.conj(val) if complex_values else val
    return mat


# Default frequency scales (Hz) per experiment kind.  The intervals differ by
# orders of magnitude, so the scales are chosen to put the integrated phase
# 2*pi*alpha*tau_exp at O(1): the stated iteration counts then reach the
# discretization-limited accuracy, the regime the experiments probe.
_NMR_SCALES = {1: (4e3, 2e3), 2: (2e4, 5e3), 3: (3e2, 1.5e2)}


def nmr_coefficients(kind: int, seed: int = DEFAULT_NMR_SEED, **overrides) -> NmrCoefficients:
    """Draw the synthetic coefficient set for one experiment kind.

    The true coefficient data of the cited spin systems is not public, so the
    generators keep the functional forms, the 2**4 = 16 state-space size, the
    coupling sparsity style, and the experiment intervals, with values from a
    seeded uniform draw.  Diagonal frequencies are alpha ~ U(-s, s) with the
    per-kind scale s from ``_NMR_SCALES``; modulation weights and couplings
    use the second per-kind scale; the spinning rate defaults to nu = 1e4 and
    couplings get two symmetric partners per row.  All are overridable
    (``alpha_scale``, ``mod_scale``, ``gamma_scale``, ``coupling_scale``,
    ``pairs_per_row``, ``nu``, ``a``, ``b``).
    """
    if kind not in (1, 2, 3):
        raise ValueError(f"unknown experiment kind {kind}")
    rng = np.random.default_rng(seed + 1000 * kind)
    n = 16
    nu = float(overrides.get("nu", 1e4))
    alpha_default, other_default = _NMR_SCALES[kind]
    alpha_scale = float(overrides.get("alpha_scale", alpha_default))
    mod_scale = float(overrides.get("mod_scale", other_default))
    coupling_scale = float(overrides.get("coupling_scale", other_default))
    pairs = int(overrides.get("pairs_per_row", 2))
    gamma_scale = float(overrides.get("gamma_scale", mod_scale))
    alpha = rng.uniform(-alpha_scale, alpha_scale, size=n)
    if kind == 1:
        beta = rng.uniform(-mod_scale, mod_scale, size=n)
        gamma = rng.uniform(-gamma_scale, gamma_scale, size=n)
        return NmrCoefficients(kind, seed, nu, alpha, beta=beta, gamma=gamma)
    B = _symmetric_sparse(rng, n, pairs, coupling_scale)
    C = _symmetric_sparse(rng, n, pairs, coupling_scale, complex_values=(kind == 3))
    return NmrCoefficients(kind, seed, nu, alpha, B=B, C=C)


def _nmr_vectors(kind: int) -> np.ndarray:
    if kind == 3:
        return np.ones(16)
    return np.tile([0.0, 1.0, 1.0], 6)[:16]


_NMR_INTERVALS = {1: (0.0, 5e-5), 2: (0.0, 5e-6), 3: (0.0, 1e-3)}


def nmr_generate(kind: int, seed: int = DEFAULT_NMR_SEED, **overrides) -> Problem:
    """Build the spin-simulation problem ``A(t) = -2*pi*i * H(t)`` for one kind.

    kind 1: diagonal ``H``, level k carrying
    ``alpha_k + beta_k cos(2 pi nu t) + gamma_k cos(4 pi nu t)``.
    kind 2: ``diag(alpha) + B cos(2 pi nu t) + C cos(4 pi nu t)`` with real
    symmetric sparse couplings.
    kind 3: ``diag(alpha) + B (0.5 + cos 4t + sin 10t - 0.4 sin 16t)
    + C (sin 4t + cos 8t + 2 sin 12t)`` with real B and complex Hermitian C.

    Probe vectors default to the repeating (0, 1, 1) pattern for kinds 1-2 and
    all-ones for kind 3; intervals default to [0, 5e-5], [0, 5e-6], [0, 1e-3].
    Identical seeds give bit-identical problems.
    """
    coeffs = nmr_coefficients(kind, seed, **overrides)
    s = -2j * np.pi  # A(t) = -i 2 pi H(t)
    w2 = 2 * np.pi * coeffs.nu
    entries: dict[tuple[int, int], list[Term]] = {}
    if kind == 1:
        for k in range(16):
            entries[(k, k)] = [
                Term(s * coeffs.alpha[k]),
                Term(s * coeffs.beta[k], 0, "cos", w2),
                Term(s * coeffs.gamma[k], 0, "cos", 2 * w2),
            ]
    elif kind == 2:
        for k in range(16):
            entries[(k, k)] = [Term(s * coeffs.alpha[k])]
        for (i, j) in zip(*np.nonzero(coeffs.B)):
            entries.setdefault((int(i), int(j)), []).append(Term(s * coeffs.B[i, j], 0, "cos", w2))
        for (i, j) in zip(*np.nonzero(coeffs.C)):
            entries.setdefault((int(i), int(j)), []).append(Term(s * coeffs.C[i, j], 0, "cos", 2 * w2))
    else:
        for k in range(16):
            entries[(k, k)] = [Term(s * coeffs.alpha[k])]
        # B * (0.5 + cos 4t + sin 10t - 0.4 sin 16t)
        for (i, j) in zip(*np.nonzero(coeffs.B)):
            c = s * coeffs.B[i, j]
            entries.setdefault((int(i), int(j)), []).extend([
                Term(0.5 * c),
                Term(c, 0, "cos", 4.0),
                Term(c, 0, "sin", 10.0),
                Term(-0.4 * c, 0, "sin", 16.0),
            ])
        # C * (sin 4t + cos 8t + 2 sin 12t)
        for (i, j) in zip(*np.nonzero(coeffs.C)):
            c = s * coeffs.C[i, j]
            entries.setdefault((int(i), int(j)), []).extend([
                Term(c, 0, "sin", 4.0),
                Term(c, 0, "cos", 8.0),
                Term(2.0 * c, 0, "sin", 12.0),
            ])
    a, b = _NMR_INTERVALS[kind]
    a = float(overrides.get("a", a))
    b = float(overrides.get("b", b))
    vec = _nmr_vectors(kind)
    prob = Problem(f"nmr{kind}", 16, a, b, entries, vec, vec,
                   meta={"kind": kind, "seed": seed, "coefficients": coeffs})
    return prob


_BUILTIN_FACTORIES = {
    "const3": _const3,
    "timedep5": _timedep5,
    "zero1": _zero1,
    "nmr1": lambda: nmr_generate(1),
    "nmr2": lambda: nmr_generate(2),
    "nmr3": lambda: nmr_generate(3),
}


def builtin_ids() -> list[str]:
    return sorted(_BUILTIN_FACTORIES)


def builtin(problem_id: str) -> Problem:
    """Return a built-in problem by id (const3, timedep5, zero1, nmr1/2/3)."""
    try:
        factory = _BUILTIN_FACTORIES[problem_id]
    except KeyError:
        raise KeyError(f"unknown builtin problem {problem_id!r}; "
                       f"known: {', '.join(builtin_ids())}") from None
    return factory()


def analytic_const3(mesh: Mesh) -> Reference:
    """Closed-form (exp(A t))_{11} for the constant 3x3 problem.

    The spectrum is {-2, sqrt(2), -sqrt(2)}, giving
    ``-sinh(2t)/2 + cosh(2t)/2 + cosh(sqrt(2) t)/2``.
    """
    t = mesh.tau
    vals = -0.5 * np.sinh(2 * t) + 0.5 * np.cosh(2 * t) + 0.5 * np.cosh(np.sqrt(2) * t)
    return Reference("analytic", vals)


def analytic_nmr1(mesh: Mesh, coeffs: NmrCoefficients) -> Reference:
    """Exact ``w^H U(t) v`` for the diagonal (kind 1) experiment.

    ``A(t)`` is diagonal and commutes with itself, so each level evolves by
    the exponential of the antiderivative:

        u_k(t) = exp(-2 pi i [alpha_k t + beta_k sin(2 pi nu t)/(2 pi nu)
                              + gamma_k sin(4 pi nu t)/(4 pi nu)])
    """
    if coeffs.kind != 1:
        raise ValueError("analytic solution is available for kind 1 only")
    t = mesh.tau[None, :]
    w2 = 2 * np.pi * coeffs.nu
    phase = (coeffs.alpha[:, None] * t
             + coeffs.beta[:, None] * np.sin(w2 * t) / w2
             + coeffs.gamma[:, None] * np.sin(2 * w2 * t) / (2 * w2))
    diag = np.exp(-2j * np.pi * phase)
    vec = _nmr_vectors(1).astype(complex)
    vals = (np.conj(vec)[:, None] * diag * vec[:, None]).sum(axis=0)
    return Reference("analytic", vals)


def rk45_reference(problem: Problem, mesh: Mesh, rtol: float = 1e-10,
                   atol: float = 1e-12) -> Reference:
    """Adaptive Dormand-Prince reference: solve ``u' = A(t) u``, ``u(a) = v``.

    The dense output is evaluated at every mesh point (no nearest-sample
    matching), and ``s_hat_i = w^H u(tau_i)``.
    """
    if rtol <= 0 or atol <= 0:
        raise ValueError("rtol and atol must be positive")
    y0 = problem.v.astype(complex)
    sol = solve_ivp(lambda t, y: problem.eval_matrix(t) @ y,
                    (problem.a, problem.b), y0,
                    method="RK45", rtol=rtol, atol=atol, dense_output=True)
    if not sol.success:
        t_fail = sol.t[-1] if sol.t.size else problem.a
        raise StiffnessError(
            f"integrator failed for {problem.id!r} near t = {t_fail}: {sol.message}")
    u = sol.sol(mesh.tau)  # (n, M)
    vals = np.conj(problem.w) @ u
    return Reference("rk45", vals, rtol=rtol, atol=atol)


def _complex_to_json(z: complex) -> dict:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def problem_to_json(problem: Problem) -> str:
    """Serialize to the documented JSON schema (1-based entry indices)."""
    doc = {
        "id": problem.id,
        "n": problem.n,
        "interval": [problem.a, problem.b],
        "v": [_complex_to_json(z) for z in problem.v],
        "w": [_complex_to_json(z) for z in problem.w],
        "entries": [
            {
                "k": k + 1,
                "l": l + 1,
                "terms": [
                    {**_complex_to_json(term.coeff), "power": term.power,
                     "trig": term.trig, "omega": term.omega}
                    for term in terms
                ],
            }
            for (k, l), terms in sorted(problem.entries.items())
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def problem_from_json(text: str) -> Problem:
    """Parse the JSON problem format (inverse of :func:`problem_to_json`)."""
    doc = json.loads(text)
    entries = {}
    for ent in doc["entries"]:
        terms = [
            Term(complex(t["re"], t["im"]), int(t.get("power", 0)),
                 str(t.get("trig", "none")), float(t.get("omega", 0.0)))
            for t in ent["terms"]
        ]
        entries[(int(ent["k"]) - 1, int(ent["l"]) - 1)] = terms
    v = np.array([complex(z["re"], z["im"]) for z in doc["v"]])
    w = np.array([complex(z["re"], z["im"]) for z in doc["w"]])
    a, b = doc["interval"]
    return Problem(str(doc["id"]), int(doc["n"]), float(a), float(b), entries, v, w)
