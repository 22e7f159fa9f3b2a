"""Symmetric positive definite matrix tools: Stein divergence, conditioning,
and discriminative projection learning on the Stiefel manifold.

The divergence used throughout is the symmetric Jensen-type log-det distance

    d2(X, Y) = logdet((X + Y) / 2) - logdet(X Y) / 2

computed entirely from Cholesky factors, so no eigendecompositions or matrix
logs are needed. ``learn_projection`` finds a column-orthonormal P that pulls
same-class descriptors together and pushes different-class descriptors apart
in the projected space P^T X P, following a signed k-nearest-neighbor
affinity graph.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    AffinityUndefinedError,
    DimensionMismatchError,
    IrreparablySingularError,
    NotPositiveDefiniteError,
    NumericalFaultError,
)

logger = logging.getLogger(__name__)

# Shift used by project() to keep tiny projected eigenvalues from tripping
# later factorizations; small enough to be invisible at working tolerances.
PROJECT_EPSILON = 1e-10

# How many times regularize() may double its shift before giving up.
MAX_REGULARIZE_DOUBLINGS = 10


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def logdet_pd(x: np.ndarray) -> float:
    """Log-determinant of a symmetric positive definite matrix via Cholesky.

    Raises :class:`NotPositiveDefiniteError` if the factorization fails and
    :class:`NumericalFaultError` on non-finite input (which LAPACK would
    otherwise propagate silently).
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.isfinite(x).all():
        raise NumericalFaultError("numerical fault: non-finite matrix")
    try:
        factor = np.linalg.cholesky(x)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"not positive definite: {exc}") from exc
    return 2.0 * float(np.log(np.diagonal(factor)).sum())


def stein_divergence(x: np.ndarray, y: np.ndarray) -> float:
    """Squared Stein (Jensen log-det) divergence between two SPD matrices.

    Symmetric in its arguments, zero exactly when ``x is y`` numerically, and
    nonnegative (tiny negative rounding residues are clamped to zero).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionMismatchError(
            f"operands must be square matrices of equal shape, got {x.shape} and {y.shape}"
        )
    value = logdet_pd(0.5 * (x + y)) - 0.5 * (logdet_pd(x) + logdet_pd(y))
    return value if value > 0.0 else 0.0


def regularize(x: np.ndarray, epsilon: float) -> np.ndarray:
    """Shift a symmetric matrix by ``epsilon * I`` until it factorizes.

    The shift doubles on failure, at most :data:`MAX_REGULARIZE_DOUBLINGS`
    times; a matrix that still will not factorize raises
    :class:`IrreparablySingularError`. Well-conditioned inputs come back as
    exactly ``x + epsilon * I``.
    """
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise NumericalFaultError("numerical fault: non-finite matrix")
    scale = max(1.0, float(np.abs(x).max()))
    if np.abs(x - x.T).max() > 1e-8 * scale:
        raise ValueError("matrix is not symmetric")
    x = _symmetrize(x)
    eye = np.eye(x.shape[0])
    shift = float(epsilon)
    for _ in range(MAX_REGULARIZE_DOUBLINGS + 1):
        shifted = x + shift * eye
        try:
            np.linalg.cholesky(shifted)
        except np.linalg.LinAlgError:
            shift *= 2.0
            continue
        if shift != epsilon:
            logger.debug("regularize: shift grew to %.3g", shift)
        return shifted
    raise IrreparablySingularError(
        f"irreparably singular: not positive definite after shift {shift / 2.0:.3g}"
    )


def project(p: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Congruence-project an SPD matrix: ``P^T X P``, defensively conditioned.

    ``p`` is (n, m) column-orthonormal, ``x`` is (n, n). The result gets a
    :data:`PROJECT_EPSILON` shift so rank-deficient covariances stay usable
    downstream.
    """
    p = np.asarray(p, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if p.ndim != 2 or x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionMismatchError(
            f"expected (n, m) projection and (n, n) matrix, got {p.shape} and {x.shape}"
        )
    if p.shape[0] != x.shape[0]:
        raise DimensionMismatchError(
            f"projection rows {p.shape[0]} do not match matrix dimension {x.shape[0]}"
        )
    return regularize(_symmetrize(p.T @ x @ p), PROJECT_EPSILON)


def orthonormality_error(p: np.ndarray) -> float:
    """Max absolute deviation of ``P^T P`` from the identity."""
    p = np.asarray(p, dtype=np.float64)
    return float(np.abs(p.T @ p - np.eye(p.shape[1])).max())


def random_spd(dim: int, rng: np.random.Generator, eig_range: tuple[float, float] = (0.5, 2.0)) -> np.ndarray:
    """Random SPD matrix with log-uniform spectrum in ``eig_range``."""
    lo, hi = eig_range
    if not 0.0 < lo <= hi:
        raise ValueError(f"eig_range must satisfy 0 < lo <= hi, got {eig_range}")
    q = _qr_retract(rng.standard_normal((dim, dim)))
    eigs = np.exp(rng.uniform(np.log(lo), np.log(hi), size=dim))
    return _symmetrize((q * eigs) @ q.T)


def random_orthonormal(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Random (rows, cols) matrix with orthonormal columns."""
    if cols > rows:
        raise ValueError(f"cannot fit {cols} orthonormal columns in {rows} rows")
    return _qr_retract(rng.standard_normal((rows, cols)))


def stein_pairwise(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Symmetric matrix of pairwise Stein divergences with zero diagonal."""
    m = len(mats)
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            out[i, j] = out[j, i] = stein_divergence(mats[i], mats[j])
    return out


def build_affinity(
    labels: Sequence[int],
    pairwise: np.ndarray,
    k_within: int = 3,
    k_between: int = 3,
) -> np.ndarray:
    """Signed k-NN affinity: +1 toward same-class neighbors, -1 toward
    nearest other-class neighbors, symmetrized by maximum magnitude.

    Classes with fewer members than ``k_within`` simply contribute fewer +1
    edges (no error). Distance ties break toward the lower index, and a
    (+1, -1) symmetrization conflict resolves to +1.
    """
    labels = np.asarray(labels)
    m = labels.shape[0]
    pairwise = np.asarray(pairwise, dtype=np.float64)
    if pairwise.shape != (m, m):
        raise DimensionMismatchError(
            f"pairwise matrix shape {pairwise.shape} does not match {m} labels"
        )
    if m < 2:
        raise ValueError("need at least two instances to build an affinity graph")
    if k_within < 0 or k_between < 0:
        raise ValueError("neighbor counts must be nonnegative")
    a = np.zeros((m, m), dtype=np.int8)
    for i in range(m):
        same = [j for j in range(m) if j != i and labels[j] == labels[i]]
        other = [j for j in range(m) if labels[j] != labels[i]]
        for j in sorted(same, key=lambda j: (pairwise[i, j], j))[:k_within]:
            a[i, j] = 1
        for j in sorted(other, key=lambda j: (pairwise[i, j], j))[:k_between]:
            a[i, j] = -1
    positive = (a == 1) | (a.T == 1)
    negative = (a == -1) | (a.T == -1)
    out = np.where(positive, 1, np.where(negative, -1, 0)).astype(np.int8)
    np.fill_diagonal(out, 0)
    return out


def affinity_objective(
    p: np.ndarray, descriptors: Sequence[np.ndarray], affinity: np.ndarray
) -> float:
    """Sum of signed projected divergences: ``sum_ij A_ij d2(P^T Xi P, P^T Xj P)``.

    Counts each unordered pair twice, matching the symmetric double sum.
    """
    projected, logdets = _project_all(p, descriptors, affinity)
    total = 0.0
    for i, j in zip(*np.nonzero(np.triu(affinity))):
        mid = logdet_pd(0.5 * (projected[i] + projected[j]))
        total += 2.0 * float(affinity[i, j]) * (mid - 0.5 * (logdets[i] + logdets[j]))
    return total


def affinity_objective_gradient(
    p: np.ndarray, descriptors: Sequence[np.ndarray], affinity: np.ndarray
) -> np.ndarray:
    """Euclidean gradient of :func:`affinity_objective` with respect to P."""
    p = np.asarray(p, dtype=np.float64)
    projected, _ = _project_all(p, descriptors, affinity)
    grad = np.zeros_like(p)
    for i, j in zip(*np.nonzero(np.triu(affinity))):
        xi, xj = np.asarray(descriptors[i]), np.asarray(descriptors[j])
        xm = 0.5 * (xi + xj)
        sm = 0.5 * (projected[i] + projected[j])
        pair_grad = (
            2.0 * _solve_right(xm @ p, sm)
            - _solve_right(xi @ p, projected[i])
            - _solve_right(xj @ p, projected[j])
        )
        grad += 2.0 * float(affinity[i, j]) * pair_grad
    return grad


def _project_all(
    p: np.ndarray, descriptors: Sequence[np.ndarray], affinity: np.ndarray
) -> tuple[dict[int, np.ndarray], dict[int, float]]:
    p = np.asarray(p, dtype=np.float64)
    used = sorted(set(np.nonzero(affinity)[0]) | set(np.nonzero(affinity)[1]))
    projected: dict[int, np.ndarray] = {}
    logdets: dict[int, float] = {}
    for i in used:
        s = _symmetrize(p.T @ np.asarray(descriptors[i], dtype=np.float64) @ p)
        projected[i] = s
        logdets[i] = logdet_pd(s)
    return projected, logdets


def _solve_right(a: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Compute ``a @ inv(s)`` for symmetric PD ``s`` without forming the inverse."""
    return np.linalg.solve(s, a.T).T


def _qr_retract(a: np.ndarray) -> np.ndarray:
    """Thin QR with the usual sign fix so the map is deterministic."""
    q, r = np.linalg.qr(a)
    signs = np.sign(np.diagonal(r))
    signs[signs == 0] = 1.0
    return q * signs


@dataclass(frozen=True)
class ProjectionConfig:
    """Settings for :func:`learn_projection`."""

    max_iterations: int = 200
    relative_tolerance: float = 1e-6
    initial_step: float = 1.0
    max_halvings: int = 20
    k_within: int = 3
    k_between: int = 3
    init: str = "identity"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.relative_tolerance <= 0.0:
            raise ValueError("relative_tolerance must be positive")
        if self.initial_step <= 0.0:
            raise ValueError("initial_step must be positive")
        if self.max_halvings < 0:
            raise ValueError("max_halvings must be nonnegative")
        if self.init not in ("identity", "random"):
            raise ValueError(f"init must be 'identity' or 'random', got {self.init!r}")


@dataclass(frozen=True)
class ProjectionResult:
    """Outcome of projection learning.

    ``objective_history`` holds the objective at the initial point and after
    every accepted step, so it is non-increasing by construction.
    ``converged`` is False only when the iteration cap was hit while the
    objective was still moving.
    """

    projection: np.ndarray
    objective_history: np.ndarray
    converged: bool
    iterations: int
    max_orthonormality_error: float


def learn_projection(
    descriptors: Sequence[np.ndarray],
    labels: Sequence[int],
    target_dim: int,
    config: ProjectionConfig | None = None,
) -> ProjectionResult:
    """Learn a discriminative column-orthonormal projection.

    Minimizes the signed sum of pairwise projected Stein divergences over the
    affinity graph of :func:`build_affinity` by Riemannian gradient descent
    on the Stiefel manifold: Euclidean gradient, tangent-space projection,
    QR retraction, and a halving backtracking line search.

    Parameters
    ----------
    descriptors : sequence of numpy.ndarray
        SPD matrices, all (n, n).
    labels : sequence of int
        Class label per descriptor; at least two distinct classes.
    target_dim : int
        Number of projection columns m, 1 <= m <= n.
    config : ProjectionConfig, optional
        Optimizer settings; defaults are sensible for desk-scale problems.

    Raises
    ------
    AffinityUndefinedError
        If fewer than two distinct classes are present.
    """
    config = config or ProjectionConfig()
    labels = np.asarray(labels)
    if len(descriptors) != labels.shape[0]:
        raise DimensionMismatchError(
            f"{len(descriptors)} descriptors but {labels.shape[0]} labels"
        )
    if len(set(labels.tolist())) < 2:
        raise AffinityUndefinedError(
            "affinity undefined: need at least two distinct classes"
        )
    mats = [np.asarray(x, dtype=np.float64) for x in descriptors]
    n = mats[0].shape[0]
    for x in mats:
        if x.shape != (n, n):
            raise DimensionMismatchError(
                f"descriptor shape {x.shape} does not match ({n}, {n})"
            )
    if not 1 <= target_dim <= n:
        raise ValueError(f"target_dim must lie in [1, {n}], got {target_dim}")

    affinity = build_affinity(labels, stein_pairwise(mats), config.k_within, config.k_between)

    if config.init == "identity":
        p = np.eye(n, target_dim)
    else:
        p = random_orthonormal(n, target_dim, np.random.default_rng(config.seed))

    if not np.any(affinity):
        return ProjectionResult(
            projection=p,
            objective_history=np.array([0.0]),
            converged=True,
            iterations=0,
            max_orthonormality_error=orthonormality_error(p),
        )

    def try_objective(candidate: np.ndarray) -> float:
        try:
            return affinity_objective(candidate, mats, affinity)
        except NotPositiveDefiniteError:
            return np.inf

    objective = try_objective(p)
    if not np.isfinite(objective):
        raise NotPositiveDefiniteError(
            "not positive definite: a descriptor lost rank under the initial projection"
        )
    history = [objective]
    max_dev = orthonormality_error(p)
    converged = False

    for _ in range(config.max_iterations):
        grad = affinity_objective_gradient(p, mats, affinity)
        riem = grad - p @ _symmetrize(p.T @ grad)
        if not np.isfinite(riem).all():
            raise NumericalFaultError("numerical fault: non-finite gradient")
        if np.abs(riem).max() == 0.0:
            converged = True
            break
        step = config.initial_step
        trial = None
        trial_objective = np.inf
        for _ in range(config.max_halvings + 1):
            candidate = _qr_retract(p - step * riem)
            candidate_objective = try_objective(candidate)
            if candidate_objective < objective:
                trial, trial_objective = candidate, candidate_objective
                break
            step *= 0.5
        if trial is None:
            # No descent at the finest step: stationary at this resolution.
            converged = True
            break
        p = trial
        max_dev = max(max_dev, orthonormality_error(p))
        decrease = objective - trial_objective
        relative = decrease / max(abs(objective), 1e-12)
        objective = trial_objective
        history.append(objective)
        if relative < config.relative_tolerance:
            converged = True
            break

    if not converged:
        logger.warning(
            "projection learning hit the iteration cap (%d) before the objective settled",
            config.max_iterations,
        )
    return ProjectionResult(
        projection=p,
        objective_history=np.asarray(history),
        converged=converged,
        iterations=len(history) - 1,
        max_orthonormality_error=max_dev,
    )
