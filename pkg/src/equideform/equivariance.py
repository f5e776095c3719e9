"""Certification of equivariant nondegeneracy and slice construction.

The numerical Jacobi kernel is extracted by SVD of the weight-symmetrized
operator and compared against the span of the Killing-induced Jacobi fields
through principal angles. A state is certified nondegenerate exactly when
the kernel dimension equals the Killing rank and every principal angle is
below tolerance; a mandatory multiplicative spectral gap guards against
silent misclassification near threshold.

All subspace work happens in the W inner product: node vectors u, v pair as
sum_i w_i u_i v_i, and bases are W-orthonormal. Mapping v -> sqrt(W) v
turns that into the ordinary Euclidean geometry, which is how every routine
here is implemented.
"""

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .variational import (CmcProfile, ProblemState, jacobi,
                          killing_jacobi_basis, pairing, residual,
                          residual_norm)

GAP_FLOOR = 1.0e3


def _sym_scaled(J):
    # sqrt(W) J / sqrt(W): symmetric because W J is
    sw = np.sqrt(J.pairing.weights)
    A = (sw[:, None] * J.matrix) / sw[None, :]
    return 0.5 * (A + A.T), sw


def _default_tol_rel(n):
    return 1e-8 * n


@dataclass(frozen=True, eq=False)
class KernelBasis:
    vectors: np.ndarray          # (n, dim), W-orthonormal columns
    singular_values: np.ndarray  # the retained small singular values
    tolerance: float
    gap: float
    indeterminate: bool

    @property
    def dim(self):
        return self.vectors.shape[1]


def numerical_kernel(J, tol_rel=None):
    """Near-kernel of a Jacobi operator via SVD of sqrt(W) J sqrt(W)^-1.

    Retains right singular vectors with sigma < tol_rel * sigma_max and maps
    them back by W^-1/2, which makes the returned columns exactly
    W-orthonormal. The gap field holds the ratio between the smallest
    rejected and the largest retained singular value; anything below 10^3
    flags the result indeterminate (no certified separation).
    """
    n = J.matrix.shape[0]
    if tol_rel is None:
        tol_rel = _default_tol_rel(n)
    if not 0.0 < tol_rel <= 1e-2:
        raise PreconditionError(f"tol_rel must lie in (0, 1e-2], got {tol_rel}")
    A, sw = _sym_scaled(J)
    _, s, Vt = np.linalg.svd(A)
    tol = tol_rel * (s[0] if s.size else 0.0)
    kept = s < tol              # s is descending, so this is a tail block
    d = int(np.sum(kept))
    vectors = (Vt[n - d:].T / sw[:, None]) if d else np.zeros((n, 0))
    if d == 0:
        gap = np.inf
    else:
        largest_kept = s[n - d]
        gap = np.inf if largest_kept == 0.0 else float(s[n - d - 1] / largest_kept)
    indeterminate = bool(d > 0 and gap < GAP_FLOOR)
    return KernelBasis(vectors=vectors, singular_values=s[n - d:].copy(),
                       tolerance=float(tol), gap=float(gap),
                       indeterminate=indeterminate)


def rank_basis(vectors, weights, rtol=1e-10):
    """W-orthonormal basis of the span of a (possibly dependent) list."""
    n = weights.size
    if not len(vectors):
        return np.zeros((n, 0))
    sw = np.sqrt(weights)
    M = sw[:, None] * np.column_stack(vectors)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0.0 else 0
    return U[:, :r] / sw[:, None]


@dataclass(frozen=True, eq=False)
class NondegeneracyReport:
    kernel_dim: int
    killing_rank: int
    principal_angles: np.ndarray
    max_principal_angle: float
    verdict: str                 # nondegenerate | degenerate | indeterminate
    tolerances: dict
    gap: float
    indeterminate: bool
    residual_norm: float

    def to_payload(self):
        return {
            "kernel_dim": self.kernel_dim,
            "killing_rank": self.killing_rank,
            "principal_angles": [float(a) for a in self.principal_angles],
            "max_principal_angle": float(self.max_principal_angle),
            "verdict": self.verdict,
            "tolerances": dict(self.tolerances),
            "gap": float(self.gap),
            "indeterminate": self.indeterminate,
            "residual_norm": float(self.residual_norm),
        }


def nondegeneracy_report(problem, state, lambda_hat, tol_rel=None,
                         angle_tol=1e-6, operator=None):
    """Compare ker J with the Killing-Jacobi span at a critical state.

    Requires the state to be critical to 1e-8 in the W residual norm. The
    operator argument substitutes a pre-assembled JacobiOperator (used by
    fault-injection paths); by default the exact discrete Hessian is built
    here.
    """
    rn = residual_norm(problem, state, lambda_hat)
    if not rn < 1e-8:
        raise PreconditionError(
            f"state is not critical: |residual|_W = {rn:.3e} >= 1e-8")
    J = operator if operator is not None else jacobi(problem, state, lambda_hat)
    kb = numerical_kernel(J, tol_rel=tol_rel)
    w = pairing(problem).weights
    B = rank_basis(killing_jacobi_basis(problem, state, lambda_hat), w)
    r = B.shape[1]
    d = kb.dim
    if d and r:
        M = kb.vectors.T @ (w[:, None] * B)
        sig = np.linalg.svd(M, compute_uv=False)
        angles = np.arccos(np.clip(sig, -1.0, 1.0))
    else:
        angles = np.zeros(0)
    max_angle = float(np.max(angles)) if angles.size else 0.0
    if kb.indeterminate:
        verdict = "indeterminate"
    elif d == r and max_angle < angle_tol:
        verdict = "nondegenerate"
    else:
        verdict = "degenerate"
    used_tol_rel = tol_rel if tol_rel is not None else _default_tol_rel(J.matrix.shape[0])
    return NondegeneracyReport(
        kernel_dim=d, killing_rank=r, principal_angles=angles,
        max_principal_angle=max_angle, verdict=verdict,
        tolerances={"tol_rel": float(used_tol_rel), "angle_tol": float(angle_tol),
                    "kernel_tolerance": float(kb.tolerance)},
        gap=kb.gap, indeterminate=kb.indeterminate, residual_norm=float(rn))


@dataclass(frozen=True, eq=False)
class SliceBasis:
    vectors: np.ndarray  # (n, n - killing_rank), W-orthonormal columns


def slice_basis(problem, state, lambda_hat):
    """W-orthogonal complement of the Killing-Jacobi span in node space."""
    w = pairing(problem).weights
    vecs = killing_jacobi_basis(problem, state, lambda_hat)
    n = w.size
    sw = np.sqrt(w)
    if not len(vecs):
        return SliceBasis(vectors=np.eye(n) / sw[:, None])
    M = sw[:, None] * np.column_stack(vecs)
    U, s, _ = np.linalg.svd(M, full_matrices=True)
    r = int(np.sum(s > 1e-10 * s[0])) if s.size and s[0] > 0.0 else 0
    return SliceBasis(vectors=U[:, r:] / sw[:, None])


def transversality_margin(problem, state, lambda_hat, slc):
    """Smallest singular value of [Killing basis | slice basis], W-normalized.

    The Killing-Jacobi rank basis is evaluated at the *current* state while
    the slice typically comes from a nearby reference; a margin bounded away
    from zero certifies that the frozen slice still crosses the moving orbit
    directions transversally.
    """
    w = pairing(problem).weights
    sw = np.sqrt(w)
    B = rank_basis(killing_jacobi_basis(problem, state, lambda_hat), w)
    M = np.concatenate([sw[:, None] * B, sw[:, None] * slc.vectors], axis=1)
    s = np.linalg.svd(M, compute_uv=False)
    return float(s[-1])


@dataclass(frozen=True, eq=False)
class DiagnosticsReport:
    symmetry_residual: float
    index: int
    fd_consistency: float  # nan when no problem/state context was supplied
    flagged: bool

    def to_payload(self):
        return {
            "symmetry_residual": float(self.symmetry_residual),
            "index": int(self.index),
            "fd_consistency": float(self.fd_consistency),
            "flagged": self.flagged,
        }


def operator_diagnostics(J, problem=None, state=None, lambda_hat=None,
                         probes=10, step=1e-5, seed=0):
    """Symmetric-structure diagnostics for an assembled operator.

    Reports (i) the relative asymmetry of W J; (ii) the index
    dim ker J - dim ker J^* computed from matching SVD thresholds on the
    scaled operator and its transpose -- square W-symmetric operators must
    come out 0, which is the finite-dimensional shadow of the index-zero
    property of the continuum theory, and the check exists because that
    property can genuinely fail off this class; (iii) when (problem, state,
    lambda_hat) are supplied, the worst relative gap between J v and the
    central difference of the residual over random probe vectors (probes for
    Dirichlet profiles are zeroed at the boundary, where rows are pinned).
    """
    W = J.pairing.weights[:, None] * J.matrix
    denom = np.linalg.norm(W)
    sym = float(np.linalg.norm(W - W.T) / denom) if denom > 0.0 else 0.0
    Araw = (np.sqrt(J.pairing.weights)[:, None] * J.matrix
            / np.sqrt(J.pairing.weights)[None, :])
    n = J.matrix.shape[0]
    tol_rel = _default_tol_rel(n)
    s_fwd = np.linalg.svd(Araw, compute_uv=False)
    s_adj = np.linalg.svd(Araw.T, compute_uv=False)
    dk = int(np.sum(s_fwd < tol_rel * s_fwd[0]))
    dc = int(np.sum(s_adj < tol_rel * s_adj[0]))
    index = dk - dc
    fd = np.nan
    if problem is not None and state is not None and lambda_hat is not None:
        rng = np.random.default_rng(seed)
        worst = 0.0
        base = state.values
        for _ in range(probes):
            v = rng.standard_normal(n)
            if isinstance(problem, CmcProfile):
                v[0] = 0.0
                v[-1] = 0.0
            rp = residual(problem, ProblemState(base + step * v), lambda_hat)
            rm = residual(problem, ProblemState(base - step * v), lambda_hat)
            num = (rp - rm) / (2.0 * step)
            Jv = J.matrix @ v
            scale = max(np.linalg.norm(Jv), 1e-300)
            worst = max(worst, float(np.linalg.norm(num - Jv) / scale))
        fd = worst
    flagged = bool(sym > 1e-8 or index != 0)
    return DiagnosticsReport(symmetry_residual=sym, index=index,
                             fd_consistency=fd, flagged=flagged)
