"""Potential sets and their exact gradient flows.

A potential set holds the ``n`` objective pieces the switching process
moves between.  Quadratic members ``0.5 theta' A theta - b' theta`` keep
an eigendecomposition around so single-potential gradient flow can be
evaluated in closed form; least-squares blocks ``0.5 |G theta - y|^2``
are the standard source of such members.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

_SYM_TOL = 1e-12
_SINGULAR_TOL = 1e-12


def _mat_apply(x: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Rowwise ``x @ m`` with a fixed scalar summation order.

    Written as explicit multiply-adds over the (small) coordinate
    dimension so results are identical no matter how many rows are
    processed together; the replicate-parallel engine relies on that.
    """
    out = np.empty_like(x)
    k_dim = m.shape[0]
    for j in range(m.shape[1]):
        acc = x[:, 0] * m[0, j]
        for k in range(1, k_dim):
            acc = acc + x[:, k] * m[k, j]
        out[:, j] = acc
    return out


@dataclass(frozen=True, eq=False)
class QuadraticPotential:
    """``phi(theta) = 0.5 theta' A theta - b' theta`` with psd ``A``.

    ``kappa`` is the smallest curvature eigenvalue (clipped at 0); the
    eigendecomposition is precomputed for the closed-form flow.
    """

    a_mat: np.ndarray
    b_vec: np.ndarray
    kappa: float = field(init=False)
    _evecs: np.ndarray = field(init=False, repr=False)
    _evals: np.ndarray = field(init=False, repr=False)
    _beta: np.ndarray = field(init=False, repr=False)
    _xhat: np.ndarray = field(init=False, repr=False)
    _singular: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a = np.array(self.a_mat, dtype=float)
        b = np.array(self.b_vec, dtype=float).reshape(-1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("curvature matrix must be square")
        if b.shape != (a.shape[0],):
            raise ValueError("linear term has the wrong length")
        scale = max(1.0, float(np.max(np.abs(a))))
        if np.max(np.abs(a - a.T)) > _SYM_TOL * scale:
            raise ValueError("curvature matrix must be symmetric")
        a = 0.5 * (a + a.T)
        evals, evecs = np.linalg.eigh(a)
        if evals[0] < -_SINGULAR_TOL * scale:
            raise ValueError("curvature matrix must be positive semidefinite")
        evals = np.maximum(evals, 0.0)
        singular = evals <= _SINGULAR_TOL * scale
        beta = evecs.T @ b
        xhat = np.where(singular, 0.0, beta / np.where(singular, 1.0, evals))
        object.__setattr__(self, "a_mat", a)
        object.__setattr__(self, "b_vec", b)
        object.__setattr__(self, "kappa", float(evals[0]))
        object.__setattr__(self, "_evecs", evecs)
        object.__setattr__(self, "_evals", evals)
        object.__setattr__(self, "_beta", beta)
        object.__setattr__(self, "_xhat", xhat)
        object.__setattr__(self, "_singular", singular)

    @property
    def dim(self) -> int:
        return self.a_mat.shape[0]

    def gradient_rows(self, x: np.ndarray) -> np.ndarray:
        """Gradient ``A theta - b`` for a block of row vectors."""
        return _mat_apply(x, self.a_mat) - self.b_vec

    def flow_rows(self, x: np.ndarray, d) -> np.ndarray:
        """Gradient-flow map over durations ``d`` for a block of rows.

        Nonsingular eigendirections contract towards the stationary
        point, directions with zero curvature drift linearly with the
        projected linear term.
        """
        y = _mat_apply(x, self._evecs)
        d = np.asarray(d, dtype=float)
        for j in range(self.dim):
            if self._singular[j]:
                y[:, j] = y[:, j] + self._beta[j] * d
            else:
                y[:, j] = self._xhat[j] + (y[:, j] - self._xhat[j]) * np.exp(
                    -self._evals[j] * d
                )
        return _mat_apply(y, self._evecs.T)


@dataclass(frozen=True, eq=False)
class CustomPotential:
    """Potential given by a gradient callable (rows in, rows out)."""

    grad: Callable
    kappa: Optional[float] = None

    def gradient_rows(self, x: np.ndarray) -> np.ndarray:
        g = np.asarray(self.grad(x), dtype=float)
        if g.shape != x.shape:
            raise ValueError("custom gradient changed the block shape")
        return g


Potential = Union[QuadraticPotential, CustomPotential]


@dataclass(frozen=True, eq=False)
class PotentialSet:
    """The ``n`` potentials the switching process samples from."""

    members: Tuple[Potential, ...]
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if len(self.members) < 1:
            raise ValueError("need at least one potential")
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        for m in self.members:
            if isinstance(m, QuadraticPotential) and m.dim != self.dim:
                raise ValueError("potential dimensions disagree")

    @property
    def n(self) -> int:
        return len(self.members)

    @property
    def all_quadratic(self) -> bool:
        return all(isinstance(m, QuadraticPotential) for m in self.members)

    @property
    def kappas(self):
        return tuple(m.kappa for m in self.members)

    @property
    def convexity_regime(self) -> str:
        """``all_positive`` / ``sum_positive`` / ``degenerate``.

        The middle regime is enough for contraction of the averaged
        flow; the first gives per-member contraction.
        """
        ks = self.kappas
        if any(k is None for k in ks):
            raise ValueError("convexity regime needs kappa for every member")
        if min(ks) > 0:
            return "all_positive"
        if sum(ks) > 0:
            return "sum_positive"
        return "degenerate"


def _check_member(ps: PotentialSet, i: int):
    if not 0 <= i < ps.n:
        raise ValueError(f"potential index {i} out of range for n={ps.n}")


def _check_point(ps: PotentialSet, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape != (ps.dim,):
        raise ValueError(f"point has dimension {theta.size}, expected {ps.dim}")
    return theta


def gradient(ps: PotentialSet, i: int, theta) -> np.ndarray:
    """Gradient of member ``i`` at ``theta``."""
    _check_member(ps, i)
    theta = _check_point(ps, theta)
    return ps.members[i].gradient_rows(theta[None, :])[0]


def full_gradient(ps: PotentialSet, theta) -> np.ndarray:
    """Gradient of the averaged objective ``(1/n) sum_i phi_i``."""
    theta = _check_point(ps, theta)
    acc = ps.members[0].gradient_rows(theta[None, :])[0]
    for m in ps.members[1:]:
        acc = acc + m.gradient_rows(theta[None, :])[0]
    return acc / ps.n


def mean_quadratic(ps: PotentialSet) -> QuadraticPotential:
    """The averaged objective as a quadratic (requires quadratic members)."""
    if not ps.all_quadratic:
        raise ValueError("averaged quadratic needs all-quadratic members")
    a = sum(m.a_mat for m in ps.members) / ps.n
    b = sum(m.b_vec for m in ps.members) / ps.n
    return QuadraticPotential(a_mat=a, b_vec=b)


def exact_flow(potential: QuadraticPotential, theta0, t: float) -> np.ndarray:
    """Closed-form gradient flow of one quadratic from ``theta0`` over ``t``."""
    if not isinstance(potential, QuadraticPotential):
        raise ValueError("exact flow is only available for quadratic potentials")
    if not t >= 0:
        raise ValueError("flow duration must be nonnegative")
    theta0 = np.asarray(theta0, dtype=float).reshape(-1)
    if theta0.shape != (potential.dim,):
        raise ValueError("point dimension mismatch")
    return potential.flow_rows(theta0[None, :], float(t))[0]


def from_least_squares(blocks: Sequence[Tuple[np.ndarray, np.ndarray]]) -> PotentialSet:
    """Potential set from least-squares blocks ``(G_i, y_i)``.

    Member ``i`` is ``0.5 |G_i theta - y_i|^2`` up to the constant
    ``0.5 |y_i|^2``, i.e. ``A_i = G_i'G_i`` and ``b_i = G_i'y_i``.
    """
    if not blocks:
        raise ValueError("need at least one block")
    members = []
    dim = None
    for g, y in blocks:
        g = np.asarray(g, dtype=float)
        if g.ndim == 1:
            g = g[None, :]
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.shape != (g.shape[0],):
            raise ValueError("observation vector length must match block rows")
        if dim is None:
            dim = g.shape[1]
        elif g.shape[1] != dim:
            raise ValueError("blocks disagree on the parameter dimension")
        members.append(QuadraticPotential(a_mat=g.T @ g, b_vec=g.T @ y))
    return PotentialSet(members=tuple(members), dim=dim)


def load_least_squares_csv(paths: Sequence) -> PotentialSet:
    """One CSV per block: rows are observations, last column is ``y``."""
    blocks = []
    for path in paths:
        arr = np.loadtxt(path, delimiter=",", ndmin=2)
        if arr.shape[1] < 2:
            raise ValueError(f"{path}: need at least one feature column plus y")
        blocks.append((arr[:, :-1], arr[:, -1]))
    return from_least_squares(blocks)


def minimiser(ps: PotentialSet) -> np.ndarray:
    """Stationary point of the averaged objective.

    Solves ``mean(A) theta = mean(b)``; a (numerically) singular mean
    curvature is reported rather than silently pseudo-inverted.
    """
    mean = mean_quadratic(ps)
    a, b = mean.a_mat, mean.b_vec
    if np.linalg.cond(a) > 1e12:
        raise ValueError("mean curvature matrix is singular; no unique minimiser")
    return np.linalg.solve(a, b)


def population_field(matrices: Sequence[np.ndarray], i: int, theta) -> np.ndarray:
    """Linear drift ``G_i theta`` of a switching linear system."""
    mats = [np.asarray(m, dtype=float) for m in matrices]
    if not 0 <= i < len(mats):
        raise ValueError(f"matrix index {i} out of range")
    theta = np.asarray(theta, dtype=float).reshape(-1)
    g = mats[i]
    if g.shape != (theta.size, theta.size):
        raise ValueError("matrix shape does not match the state dimension")
    return g @ theta
