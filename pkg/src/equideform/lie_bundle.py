"""Matrix models for the isometry algebras of the constant curvature spaces.

For a curvature parameter lam the algebra g_lam sits inside gl(n+1) as the
span of the block matrices

    L_lam(D, u) = [[0, -lam * u^T],
                   [u,  D        ]]

with D antisymmetric n x n and u in R^n, so dim g_lam = n(n+1)/2 for every
lam. For lam != 0 these are exactly the matrices antisymmetric with respect
to the diagonal form eta_lam below, and the group G_lam generated by them
preserves eta_lam. At lam = 0 the form degenerates; membership in G_0 is
structural instead: first row (1, 0, ..., 0) and orthogonal lower right
block, the Euclidean motions in homogeneous coordinates.

Group membership for lam != 0 is certified through the three block
equations on g = [[a, v^T], [w, B]]:

    a v + lam B^T w = 0,   a^2 + lam |w|^2 = 1,   v v^T + lam B^T B = lam I.

A complementary slice A of upper block-triangular matrices with positive
corner and positive definite lower block meets G_lam only at the identity;
complement_and_slice_check certifies the tangent splitting and probes the
off-identity margin on seeded samples.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DomainError


# ---------------------------------------------------------------------------
# types

@dataclass(frozen=True)
class QuadraticForm:
    lam: float
    matrix: np.ndarray


@dataclass(frozen=True)
class AlgebraElement:
    lam: float
    D: np.ndarray
    u: np.ndarray
    mat: np.ndarray


@dataclass(frozen=True)
class AlgebraBasis:
    lam: float
    elements: tuple

    def stacked(self):
        return np.column_stack([e.mat.ravel() for e in self.elements])


@dataclass(frozen=True)
class SliceElement:
    a: float
    v: np.ndarray
    B: np.ndarray
    mat: np.ndarray


@dataclass(frozen=True)
class GroupWord:
    """Letters (D_i, u_i) spelling h = prod_i exp(L_{base_lambda}(D_i, u_i))."""

    letters: tuple
    base_lambda: float


@dataclass(frozen=True)
class CheckReport:
    lam: float
    n: int
    n_samples: int
    seed: int
    rank: int
    expected_rank: int
    full_rank: bool
    stacked_min_singular_value: float
    identity_residual: float
    min_off_identity_residual: float

    @property
    def passed(self):
        return self.full_rank and self.identity_residual < 1e-12


# ---------------------------------------------------------------------------
# basic constructors

def algebra_element(lam, D, u):
    D = np.asarray(D, dtype=float)
    u = np.asarray(u, dtype=float)
    n = len(u)
    if D.shape != (n, n):
        raise DomainError(f"D has shape {D.shape}, expected ({n}, {n})")
    if np.max(np.abs(D + D.T)) > 1e-12 * max(1.0, np.max(np.abs(D))):
        raise DomainError("D must be antisymmetric")
    mat = np.zeros((n + 1, n + 1))
    mat[0, 1:] = -lam * u
    mat[1:, 0] = u
    mat[1:, 1:] = D
    return AlgebraElement(float(lam), D, u, mat)


def eta_form(lam, n):
    """Diagonal form preserved by G_lam; undefined at lam = 0."""
    if lam == 0.0:
        raise DomainError("eta_form is undefined at lam = 0; membership there is structural")
    s = np.sqrt(abs(lam))
    d = np.ones(n + 1) * s
    d[0] = (1.0 / s) if lam > 0 else (-1.0 / s)
    return QuadraticForm(float(lam), np.diag(d))


def _antisym_pairs(n):
    return [(a, b) for a in range(n) for b in range(a + 1, n)]


def algebra_basis(lam, n):
    """Ordered basis: rotations L(E_ab, 0) for a < b, then translations L(0, e_k)."""
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    els = []
    for a, b in _antisym_pairs(n):
        E = np.zeros((n, n))
        E[a, b] = -1.0
        E[b, a] = 1.0
        els.append(algebra_element(lam, E, np.zeros(n)))
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        els.append(algebra_element(lam, np.zeros((n, n)), e))
    return AlgebraBasis(float(lam), tuple(els))


# ---------------------------------------------------------------------------
# residuals

def invariance_residual(X, lam):
    """Deviation of X from the fiber algebra.

    lam != 0: Frobenius norm of X^T eta + eta X. lam = 0: norm of the first
    row plus the antisymmetry defect of the lower right block.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0] - 1
    if lam != 0.0:
        eta = eta_form(lam, n).matrix
        return float(np.linalg.norm(X.T @ eta + eta @ X))
    D = X[1:, 1:]
    return float(np.linalg.norm(X[0, :]) + np.linalg.norm(D + D.T))


def group_membership_residual(g, lam):
    """Violation of the G_lam defining equations by a candidate matrix."""
    g = np.asarray(g, dtype=float)
    n = g.shape[0] - 1
    a = g[0, 0]
    v = g[0, 1:]
    w = g[1:, 0]
    B = g[1:, 1:]
    if lam != 0.0:
        r1 = a * v + lam * (B.T @ w)
        r2 = a * a + lam * np.dot(w, w) - 1.0
        r3 = np.outer(v, v) + lam * (B.T @ B) - lam * np.eye(n)
        return float(np.sqrt(np.dot(r1, r1) + r2 * r2 + np.sum(r3 * r3)))
    e0 = np.zeros(n + 1)
    e0[0] = 1.0
    return float(np.sqrt(np.sum((g[0, :] - e0) ** 2) + np.sum((B.T @ B - np.eye(n)) ** 2)))


def bracket_closure_residual(basis):
    """Max least-squares defect of projecting basis brackets back onto the span.

    Accepts an AlgebraBasis or a plain list of square matrices.
    """
    if hasattr(basis, "elements"):
        mats = [e.mat for e in basis.elements]
    else:
        mats = [np.asarray(m, dtype=float) for m in basis]
    M = np.column_stack([m.ravel() for m in mats])
    worst = 0.0
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            br = mats[i] @ mats[j] - mats[j] @ mats[i]
            coef, _, _, _ = np.linalg.lstsq(M, br.ravel(), rcond=None)
            worst = max(worst, float(np.linalg.norm(M @ coef - br.ravel())))
    return worst


# ---------------------------------------------------------------------------
# complement slice

def complement_basis(n):
    """Basis of the tangent a = {[[alpha, v^T], [0, S]], S symmetric} at the identity."""
    out = []
    m = np.zeros((n + 1, n + 1))
    m[0, 0] = 1.0
    out.append(m)
    for k in range(n):
        m = np.zeros((n + 1, n + 1))
        m[0, 1 + k] = 1.0
        out.append(m)
    for a in range(n):
        for b in range(a, n):
            m = np.zeros((n + 1, n + 1))
            m[1 + a, 1 + b] = 1.0
            m[1 + b, 1 + a] = 1.0
            out.append(m)
    return out


def slice_element(a, v, B):
    a = float(a)
    v = np.asarray(v, dtype=float)
    B = np.asarray(B, dtype=float)
    n = len(v)
    if a <= 0.0:
        raise DomainError("slice corner a must be positive")
    if np.max(np.abs(B - B.T)) > 1e-12 * max(1.0, np.max(np.abs(B))):
        raise DomainError("slice block B must be symmetric")
    if np.min(np.linalg.eigvalsh(B)) <= 0.0:
        raise DomainError("slice block B must be positive definite")
    mat = np.zeros((n + 1, n + 1))
    mat[0, 0] = a
    mat[0, 1:] = v
    mat[1:, 1:] = B
    return SliceElement(a, v, B, mat)


def _sample_slice_element(rng, n):
    # log-normal corner and exponentiated symmetric block keep the sample on
    # the slice manifold; resample until it is clearly off the identity
    for _ in range(100):
        a = float(np.exp(0.4 * rng.standard_normal()))
        v = 0.5 * rng.standard_normal(n)
        S = 0.4 * rng.standard_normal((n, n))
        B = expm(0.5 * (S + S.T))
        g = slice_element(a, v, B)
        if np.linalg.norm(g.mat - np.eye(n + 1)) >= 0.05:
            return g
    raise RuntimeError("slice sampling failed to leave the identity")


def complement_and_slice_check(lam, n, n_samples=200, seed=0):
    """Certify T_1 A + g_lam = gl(n+1) and that the slice meets G_lam only at 1.

    The rank check stacks algebra_basis(lam, n) with complement_basis(n) and
    requires full rank (n+1)^2. The intersection probe samples slice
    elements away from the identity and reports the smallest membership
    residual as the margin; the identity itself must have residual zero.
    """
    basis = algebra_basis(lam, n)
    cols = [e.mat.ravel() for e in basis.elements]
    cols += [m.ravel() for m in complement_basis(n)]
    M = np.column_stack(cols)
    sv = np.linalg.svd(M, compute_uv=False)
    expected = (n + 1) ** 2
    rank = int(np.sum(sv > 1e-10 * sv[0]))

    rng = np.random.default_rng(seed)
    margin = np.inf
    for _ in range(int(n_samples)):
        g = _sample_slice_element(rng, n)
        margin = min(margin, group_membership_residual(g.mat, lam))
    ident = group_membership_residual(np.eye(n + 1), lam)
    return CheckReport(
        lam=float(lam), n=int(n), n_samples=int(n_samples), seed=int(seed),
        rank=rank, expected_rank=expected, full_rank=(rank == expected),
        stacked_min_singular_value=float(sv[-1]),
        identity_residual=float(ident),
        min_off_identity_residual=float(margin),
    )


# ---------------------------------------------------------------------------
# sections and exponentials

def exponential(X):
    """Matrix exponential (scaling and squaring with Pade approximation)."""
    return expm(np.asarray(X, dtype=float))


def section(word, lam):
    """Evaluate a group word at an arbitrary curvature parameter.

    The letters are coordinate pairs, so the same word defines an element of
    every fiber; at word.base_lambda it reproduces the original element.
    """
    if not word.letters:
        raise DomainError("group word must have at least one letter")
    n = len(np.asarray(word.letters[0][1]))
    g = np.eye(n + 1)
    for D, u in word.letters:
        g = g @ exponential(algebra_element(lam, D, u).mat)
    return g


# ---------------------------------------------------------------------------
# deformed bracket on the reductive pair k + m

class ReductivePair:
    """Matrix realization of a reductive splitting k + m inside a Lie algebra.

    The built-in instance is so(n) inside so(n+1) with m = R^n, embedded at
    lam = 1 through L_1(D, 0) and L_1(0, u). The closure relations
    [k,k] in k, [k,m] in m, [m,m] in k are verified on construction.
    """

    def __init__(self, n):
        self.n = int(n)
        if self.n < 2:
            raise DomainError(f"need n >= 2, got {n}")
        self._verify()

    def embed_k(self, D):
        D = np.asarray(D, dtype=float)
        if np.max(np.abs(D + D.T)) > 1e-10 * max(1.0, np.max(np.abs(D))):
            raise DomainError("k component must be antisymmetric")
        return algebra_element(1.0, D, np.zeros(self.n)).mat

    def embed_m(self, u):
        u = np.asarray(u, dtype=float)
        return algebra_element(1.0, np.zeros((self.n, self.n)), u).mat

    def split(self, X):
        """Exact block split of an so(n+1) matrix into (k, m, defect)."""
        X = np.asarray(X, dtype=float)
        D = X[1:, 1:]
        u = X[1:, 0]
        rebuilt = self.embed_k(0.5 * (D - D.T)) + self.embed_m(u)
        return 0.5 * (D - D.T), u, float(np.max(np.abs(X - rebuilt)))

    def _verify(self, seed=12345):
        rng = np.random.default_rng(seed)
        n = self.n
        for _ in range(5):
            A = rng.standard_normal((n, n))
            B = rng.standard_normal((n, n))
            Dk1, Dk2 = A - A.T, B - B.T
            u1, u2 = rng.standard_normal(n), rng.standard_normal(n)
            kk = _comm(self.embed_k(Dk1), self.embed_k(Dk2))
            km = _comm(self.embed_k(Dk1), self.embed_m(u2))
            mm = _comm(self.embed_m(u1), self.embed_m(u2))
            if np.max(np.abs(kk[1:, 0])) > 1e-12:
                raise DomainError("[k, k] leaves k")
            if np.max(np.abs(km[1:, 1:])) > 1e-12:
                raise DomainError("[k, m] leaves m")
            _, mu, _ = self.split(mm)
            if np.max(np.abs(mu)) > 1e-12:
                raise DomainError("[m, m] leaves k")


def _comm(X, Y):
    return X @ Y - Y @ X


def deformed_bracket(lam, x, y, pair=None):
    """Bracket of the deformed algebra on k + m coordinates.

    The k x k and k x m parts are those of the undeformed algebra; the m x m
    part is scaled by lam, so lam = 1 reproduces the round bracket and
    lam = 0 abelianizes the translations. Inputs and output are coordinate
    pairs (D, u).
    """
    xk, xm = np.asarray(x[0], dtype=float), np.asarray(x[1], dtype=float)
    yk, ym = np.asarray(y[0], dtype=float), np.asarray(y[1], dtype=float)
    if pair is None:
        pair = ReductivePair(len(xm))
    for D in (xk, yk):
        if np.max(np.abs(D + D.T)) > 1e-10 * max(1.0, np.max(np.abs(D))):
            raise DomainError("k components must be antisymmetric matrices")
    Zk = _comm(pair.embed_k(xk), pair.embed_k(yk))
    Zm = _comm(pair.embed_k(xk), pair.embed_m(ym)) - _comm(pair.embed_k(yk), pair.embed_m(xm))
    Zmm = _comm(pair.embed_m(xm), pair.embed_m(ym))
    Dkk, _, d1 = pair.split(Zk)
    _, um, d2 = pair.split(Zm)
    Dmm, _, d3 = pair.split(Zmm)
    if max(d1, d2, d3) > 1e-10:
        raise DomainError("bracket left the k + m span")
    return Dkk + lam * Dmm, um
