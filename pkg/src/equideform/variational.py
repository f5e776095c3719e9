"""Discretized symmetry-invariant variational problems on 1-D meshes.

Four instances, each a family of smooth functions on node space driven by
one real parameter lambda_hat:

* CmcCircle: closed curves in the curvature-lam plane written as radial
  graphs r(theta) about the chart origin; f = Length - H * EnclosedArea,
  critical points have geodesic curvature H (inward normal convention,
  asserted by the flat rho = 1/H test).
* CmcProfile: axisymmetric surfaces of revolution in M^2(k) x R written as
  profiles rho(z) with Dirichlet boundary radii; f = LateralArea -
  H * EnclosedVolume, critical points have principal curvature sum H.
* HarmonicTorus: maps S^1 -> R^2/Z^2 in homotopy class (p, q) with a flat
  Gram matrix path; f = Dirichlet energy; critical points are closed
  geodesics (straight lines).
* HarmonicSphere: degree-1 maps S^1 -> sphere of curvature lam; critical
  points are great circles.

Residual and Jacobi operators are exact first and second derivatives of the
discrete functional against the fixed background pairing, so the weighted
operator W J is symmetric by construction and the discrete model is smooth
in the literal finite-dimensional sense.

States of the harmonic instances store periodic chart data with the winding
handled analytically: the torus state is the periodic remainder on top of
the (p, q) line, the sphere state is (colatitude, longitude - theta). A
spectral derivative never sees the non-periodic winding part.

Harmonic instances require an odd node count: on even spectral grids the
sawtooth mode lies in the kernel of D1^T D1 and would inflate every Jacobi
kernel by one spurious dimension per component.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from .ambient import (FlatTorus, ProductM2kR, ScaledSphere, SpaceForm2,
                      quadric_embed, quadric_to_chart, radial_area, sn_lambda)
from .errors import DomainError, ShapeError, UnsupportedError
from .lie_bundle import algebra_element
from .mesh import TWO_PI, Grid, Pairing

RMIN = 0.05  # radial graphs stay away from the chart origin
SIN_MIN = 0.05  # sphere charts stay away from the poles


def radial_cap(lam):
    """Largest admissible chart radius for the solver at curvature lam.

    Keeps curves bounded away from the antipode for lam > 0 (the enclosed
    disk convention needs it) and away from sinh overflow for lam < 0.
    """
    if lam > 0.0:
        return 0.95 * np.pi / np.sqrt(lam)
    if lam < 0.0:
        return 25.0 / np.sqrt(-lam)
    return 1.0e3


# ---------------------------------------------------------------------------
# problem and state containers

@dataclass(frozen=True, eq=False)
class CmcCircle:
    H: float
    grid: Grid

    def __post_init__(self):
        if self.grid.kind != "periodic":
            raise DomainError("CmcCircle needs a periodic grid")

    def ambient(self, lambda_hat):
        return SpaceForm2(float(lambda_hat))


@dataclass(frozen=True, eq=False)
class CmcProfile:
    H: float
    grid: Grid
    boundary_radii: tuple

    def __post_init__(self):
        if self.grid.kind != "dirichlet":
            raise DomainError("CmcProfile needs a dirichlet grid")
        if len(self.boundary_radii) != 2 or min(self.boundary_radii) <= 0:
            raise DomainError("boundary radii must be two positive numbers")

    def ambient(self, lambda_hat):
        return ProductM2kR(float(lambda_hat))


def _require_odd_periodic(grid, name):
    if grid.kind != "periodic":
        raise DomainError(f"{name} needs a periodic grid")
    if grid.N % 2 == 0:
        raise DomainError(
            f"{name} needs an odd node count; the even-grid sawtooth mode "
            "sits in ker(D1^T D1) and fakes an extra Jacobi kernel dimension")


@dataclass(frozen=True, eq=False)
class HarmonicTorus:
    homotopy: tuple
    grid: Grid
    gram_start: np.ndarray
    gram_end: np.ndarray

    def __post_init__(self):
        _require_odd_periodic(self.grid, "HarmonicTorus")
        p, q = self.homotopy
        if p == 0 and q == 0:
            raise DomainError("homotopy class must be nonzero")
        object.__setattr__(self, "gram_start", np.asarray(self.gram_start, dtype=float))
        object.__setattr__(self, "gram_end", np.asarray(self.gram_end, dtype=float))
        FlatTorus(self.gram_start)  # validates SPD
        FlatTorus(self.gram_end)

    def ambient(self, lambda_hat):
        t = float(lambda_hat)
        return FlatTorus((1.0 - t) * self.gram_start + t * self.gram_end)


@dataclass(frozen=True, eq=False)
class HarmonicSphere:
    grid: Grid

    def __post_init__(self):
        _require_odd_periodic(self.grid, "HarmonicSphere")

    def ambient(self, lambda_hat):
        return ScaledSphere(float(lambda_hat))


@dataclass(frozen=True, eq=False)
class ProblemState:
    """Node vector of unknowns; see the module docstring per instance."""
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class JacobiOperator:
    matrix: np.ndarray
    pairing: Pairing
    lambda_hat: float


def is_harmonic(problem):
    return isinstance(problem, (HarmonicTorus, HarmonicSphere))


def state_size(problem):
    n = problem.grid.N
    return 2 * n if is_harmonic(problem) else n


def pairing(problem):
    """Background pairing weights for the problem's node space.

    CMC instances pair against the chart quadrature weights; harmonic
    instances use the unit-circumference domain density 1/(2 pi), tiled over
    both chart components.
    """
    w = problem.grid.quad
    if is_harmonic(problem):
        ws = w / TWO_PI
        return Pairing(np.concatenate([ws, ws]))
    return Pairing(w.copy())


def _split(vals):
    n = vals.size // 2
    return vals[:n], vals[n:]


def _check_state(problem, state, lambda_hat):
    v = state.values
    if v.size != state_size(problem):
        raise ShapeError(f"state has {v.size} values, expected {state_size(problem)}")
    if not np.all(np.isfinite(v)):
        raise DomainError("state contains non-finite values")
    if isinstance(problem, CmcCircle):
        cap = radial_cap(lambda_hat)
        if np.min(v) < RMIN or np.max(v) > cap:
            raise DomainError(
                f"radial graph left [{RMIN}, {cap:.6g}] at lambda={lambda_hat}")
    elif isinstance(problem, CmcProfile):
        cap = radial_cap(lambda_hat)
        if np.min(v) < RMIN or np.max(v) > cap:
            raise DomainError(
                f"profile left [{RMIN}, {cap:.6g}] at k={lambda_hat}")
        ra, rb = problem.boundary_radii
        if abs(v[0] - ra) > 1e-9 or abs(v[-1] - rb) > 1e-9:
            raise DomainError("profile boundary values must equal the prescribed radii")
    elif isinstance(problem, HarmonicSphere):
        a, _ = _split(v)
        if np.min(np.abs(np.sin(a))) < SIN_MIN:
            raise DomainError("sphere state too close to a chart pole")
        ScaledSphere(float(lambda_hat))  # validates lam > 0
    return v


# ---------------------------------------------------------------------------
# CmcCircle assembly

def _circle_terms(problem, r, lam):
    p = problem.grid.diff1 @ r
    sn, snp = sn_lambda(lam, r)
    F = np.sqrt(p * p + sn * sn)
    return p, sn, snp, F


def _circle_value(problem, r, lam):
    w = problem.grid.quad
    _, sn, _, F = _circle_terms(problem, r, lam)
    return float(w @ F - problem.H * (w @ radial_area(lam, r)))


def _circle_grad(problem, r, lam):
    w = problem.grid.quad
    D1 = problem.grid.diff1
    p, sn, snp, F = _circle_terms(problem, r, lam)
    return w * (sn * snp / F - problem.H * sn) + D1.T @ (w * p / F)


def _circle_hess(problem, r, lam):
    w = problem.grid.quad
    D1 = problem.grid.diff1
    p, sn, snp, F = _circle_terms(problem, r, lam)
    snpp = -lam * sn
    a = w * sn * sn / F ** 3
    b = -w * p * sn * snp / F ** 3
    c = w * ((snp * snp + sn * snpp) / F - (sn * snp) ** 2 / F ** 3
             - problem.H * snp)
    H = D1.T @ (a[:, None] * D1)
    H += D1.T * b[None, :]          # D1^T diag(b)
    H += b[:, None] * D1            # diag(b) D1
    H[np.arange(r.size), np.arange(r.size)] += c
    return H


def geodesic_curvature(problem, state, lambda_hat):
    """Pointwise geodesic curvature of a CmcCircle radial graph.

    kappa = (-sn r'' + 2 sn' r'^2 + sn^2 sn') / Wtilde^3 in the warped polar
    chart; the residual satisfies residual ~= (kappa - H) sn up to
    discretization error.
    """
    if not isinstance(problem, CmcCircle):
        raise UnsupportedError("geodesic curvature is defined for CmcCircle only")
    r = _check_state(problem, state, lambda_hat)
    p, sn, snp, F = _circle_terms(problem, r, lambda_hat)
    rpp = problem.grid.diff2 @ r
    return (-sn * rpp + 2.0 * snp * p * p + sn * sn * snp) / F ** 3


# ---------------------------------------------------------------------------
# CmcProfile assembly

def _profile_terms(problem, rho, k):
    p = problem.grid.diff1 @ rho
    sn, snp = sn_lambda(k, rho)
    S = np.sqrt(1.0 + p * p)
    return p, sn, snp, S


def _profile_value(problem, rho, k):
    w = problem.grid.quad
    _, sn, _, S = _profile_terms(problem, rho, k)
    return float(TWO_PI * (w @ (sn * S) - problem.H * (w @ radial_area(k, rho))))


def _profile_grad(problem, rho, k):
    w = problem.grid.quad
    D1 = problem.grid.diff1
    p, sn, snp, S = _profile_terms(problem, rho, k)
    g = TWO_PI * (w * (snp * S - problem.H * sn) + D1.T @ (w * sn * p / S))
    g[0] = 0.0
    g[-1] = 0.0
    return g


def _profile_hess(problem, rho, k):
    w = problem.grid.quad
    D1 = problem.grid.diff1
    p, sn, snp, S = _profile_terms(problem, rho, k)
    snpp = -k * sn
    fpp = TWO_PI * sn / S ** 3
    frp = TWO_PI * snp * p / S
    frr = TWO_PI * (snpp * S - problem.H * snp)
    H = D1.T @ ((w * fpp)[:, None] * D1)
    H += D1.T * (w * frp)[None, :]
    H += (w * frp)[:, None] * D1
    H[np.arange(rho.size), np.arange(rho.size)] += w * frr
    # Dirichlet pinning: boundary nodes carry no degrees of freedom; scaled
    # identity keeps the pinned modes far from the kernel threshold.
    scale = np.max(np.abs(H))
    for j in (0, rho.size - 1):
        H[j, :] = 0.0
        H[:, j] = 0.0
        H[j, j] = scale
    return H


# ---------------------------------------------------------------------------
# HarmonicTorus assembly

def _torus_velocity(problem, vals):
    # d phi / ds with s the unit-circumference parameter, theta = 2 pi s
    u, v = _split(vals)
    D1 = problem.grid.diff1
    p, q = problem.homotopy
    return p + TWO_PI * (D1 @ u), q + TWO_PI * (D1 @ v)


def _torus_value(problem, vals, t):
    w = problem.grid.quad / TWO_PI
    Q = problem.ambient(t).Q
    f1, f2 = _torus_velocity(problem, vals)
    dens = Q[0, 0] * f1 * f1 + 2.0 * Q[0, 1] * f1 * f2 + Q[1, 1] * f2 * f2
    return float(0.5 * (w @ dens))


def _torus_grad(problem, vals, t):
    w = problem.grid.quad / TWO_PI
    D1 = problem.grid.diff1
    Q = problem.ambient(t).Q
    f1, f2 = _torus_velocity(problem, vals)
    g1 = TWO_PI * (D1.T @ (w * (Q[0, 0] * f1 + Q[0, 1] * f2)))
    g2 = TWO_PI * (D1.T @ (w * (Q[0, 1] * f1 + Q[1, 1] * f2)))
    return np.concatenate([g1, g2])


def _torus_hess(problem, vals, t):
    w = problem.grid.quad / TWO_PI
    D1 = problem.grid.diff1
    Q = problem.ambient(t).Q
    K = TWO_PI ** 2 * (D1.T @ (w[:, None] * D1))
    return np.kron(Q, K)


# ---------------------------------------------------------------------------
# HarmonicSphere assembly

def _sphere_terms(problem, vals, lam):
    a, b = _split(vals)
    D1 = problem.grid.diff1
    alpha = TWO_PI * (D1 @ a)          # d vartheta / ds
    beta = TWO_PI * (1.0 + D1 @ b)     # d varphi / ds
    return a, b, alpha, beta


def _sphere_value(problem, vals, lam):
    w = problem.grid.quad / TWO_PI
    a, _, alpha, beta = _sphere_terms(problem, vals, lam)
    s = np.sin(a)
    return float(0.5 / lam * (w @ (alpha * alpha + s * s * beta * beta)))


def _sphere_grad(problem, vals, lam):
    w = problem.grid.quad / TWO_PI
    D1 = problem.grid.diff1
    a, _, alpha, beta = _sphere_terms(problem, vals, lam)
    s, co = np.sin(a), np.cos(a)
    ga = w * (s * co * beta * beta / lam) + TWO_PI * (D1.T @ (w * alpha / lam))
    gb = TWO_PI * (D1.T @ (w * s * s * beta / lam))
    return np.concatenate([ga, gb])


def _sphere_hess(problem, vals, lam):
    w = problem.grid.quad / TWO_PI
    D1 = problem.grid.diff1
    n = problem.grid.N
    a, _, alpha, beta = _sphere_terms(problem, vals, lam)
    s, co = np.sin(a), np.cos(a)
    e_aa = (co * co - s * s) * beta * beta / lam
    e_ab = 2.0 * s * co * beta / lam
    e_bb = s * s / lam
    H = np.zeros((2 * n, 2 * n))
    H[:n, :n] = TWO_PI ** 2 * (D1.T @ ((w / lam)[:, None] * D1))
    H[np.arange(n), np.arange(n)] += w * e_aa
    Hab = TWO_PI * ((w * e_ab)[:, None] * D1)
    H[:n, n:] = Hab
    H[n:, :n] = Hab.T
    H[n:, n:] = TWO_PI ** 2 * (D1.T @ ((w * e_bb)[:, None] * D1))
    return H


# ---------------------------------------------------------------------------
# public functional interface

def value(problem, state, lambda_hat):
    """Value of the discrete invariant functional at the state."""
    v = _check_state(problem, state, lambda_hat)
    if isinstance(problem, CmcCircle):
        return _circle_value(problem, v, lambda_hat)
    if isinstance(problem, CmcProfile):
        return _profile_value(problem, v, lambda_hat)
    if isinstance(problem, HarmonicTorus):
        return _torus_value(problem, v, lambda_hat)
    if isinstance(problem, HarmonicSphere):
        return _sphere_value(problem, v, lambda_hat)
    raise UnsupportedError(f"unknown problem instance {problem!r}")


def residual(problem, state, lambda_hat):
    """Gradient-like map: W^-1 times the exact discrete gradient.

    Zero exactly at discrete critical points; for CmcCircle it approximates
    (kappa_g - H) sn, the first-variation density against the background
    weights. CmcProfile boundary entries are identically zero (Dirichlet).
    """
    v = _check_state(problem, state, lambda_hat)
    if isinstance(problem, CmcCircle):
        g = _circle_grad(problem, v, lambda_hat)
    elif isinstance(problem, CmcProfile):
        g = _profile_grad(problem, v, lambda_hat)
    elif isinstance(problem, HarmonicTorus):
        g = _torus_grad(problem, v, lambda_hat)
    elif isinstance(problem, HarmonicSphere):
        g = _sphere_grad(problem, v, lambda_hat)
    else:
        raise UnsupportedError(f"unknown problem instance {problem!r}")
    return g / pairing(problem).weights


def jacobi(problem, state, lambda_hat):
    """Jacobi operator J = W^-1 Hess of the discrete functional.

    W J equals the exact (symmetrized to kill last-bit noise) Hessian, so
    the auxiliary symmetric structure holds by construction.
    """
    v = _check_state(problem, state, lambda_hat)
    if isinstance(problem, CmcCircle):
        H = _circle_hess(problem, v, lambda_hat)
    elif isinstance(problem, CmcProfile):
        H = _profile_hess(problem, v, lambda_hat)
    elif isinstance(problem, HarmonicTorus):
        H = _torus_hess(problem, v, lambda_hat)
    elif isinstance(problem, HarmonicSphere):
        H = _sphere_hess(problem, v, lambda_hat)
    else:
        raise UnsupportedError(f"unknown problem instance {problem!r}")
    H = 0.5 * (H + H.T)
    pr = pairing(problem)
    return JacobiOperator(H / pr.weights[:, None], pr, float(lambda_hat))


def residual_norm(problem, state, lambda_hat):
    return pairing(problem).norm(residual(problem, state, lambda_hat))


# ---------------------------------------------------------------------------
# Killing-Jacobi fields

def killing_jacobi_basis(problem, state, lambda_hat):
    """Node vectors spanning the Killing-induced Jacobi fields.

    CmcCircle: first variation of the graph under the three chart Killing
    flows, delta r = K_r - r' K_theta (the theta-reparametrization term
    matters away from centered circles; the pointwise normal component
    g(K, n) spans the same rays only up to the non-constant factor sn/F and
    is NOT in ker J for off-center graphs). CmcProfile: empty (no ambient
    Killing field preserves the axisymmetric class with fixed horizontal
    boundary circles). Harmonic: target fields K composed with the map plus
    the domain-rotation pushforward. Entries may be linearly dependent; rank
    is decided downstream.
    """
    v = _check_state(problem, state, lambda_hat)
    if isinstance(problem, CmcCircle):
        r = v
        theta = problem.grid.nodes
        p, sn, snp, F = _circle_terms(problem, r, lambda_hat)
        ratio = snp / sn
        fields = [
            (np.zeros_like(r), np.ones_like(r)),
            (np.cos(theta), -ratio * np.sin(theta)),
            (np.sin(theta), ratio * np.cos(theta)),
        ]
        return [kr - p * kth for kr, kth in fields]
    if isinstance(problem, CmcProfile):
        return []
    if isinstance(problem, HarmonicTorus):
        n = problem.grid.N
        D1 = problem.grid.diff1
        u, w = _split(v)
        p, q = problem.homotopy
        one, zero = np.ones(n), np.zeros(n)
        push = np.concatenate([p / TWO_PI + D1 @ u, q / TWO_PI + D1 @ w])
        return [np.concatenate([one, zero]), np.concatenate([zero, one]), push]
    if isinstance(problem, HarmonicSphere):
        D1 = problem.grid.diff1
        a, b = _split(v)
        phi = problem.grid.nodes + b
        s, co = np.sin(phi), np.cos(phi)
        cot = np.cos(a) / np.sin(a)
        kx = np.concatenate([-s, -cot * co])
        ky = np.concatenate([co, -cot * s])
        kz = np.concatenate([np.zeros_like(a), np.ones_like(a)])
        push = np.concatenate([D1 @ a, 1.0 + D1 @ b])
        return [kx, ky, kz, push]
    raise UnsupportedError(f"unknown problem instance {problem!r}")


# ---------------------------------------------------------------------------
# group actions on states

def orbit_generators(problem, lambda_hat):
    """Generators of the identifiable isometry action used for orbit work.

    CmcCircle: the two translation generators of G_lam (the rotation fixes
    every centered radial graph's orbit and is dropped). CmcProfile: empty.
    HarmonicTorus: the two unit translations. HarmonicSphere: the three
    rotation generators of so(3).
    """
    if isinstance(problem, CmcCircle):
        z = np.zeros((2, 2))
        return [algebra_element(lambda_hat, z, np.array([1.0, 0.0])).mat,
                algebra_element(lambda_hat, z, np.array([0.0, 1.0])).mat]
    if isinstance(problem, CmcProfile):
        return []
    if isinstance(problem, HarmonicTorus):
        return [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    if isinstance(problem, HarmonicSphere):
        jx = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
        jy = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
        jz = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        return [jx, jy, jz]
    raise UnsupportedError(f"unknown problem instance {problem!r}")


def _trig_interp(vals):
    # trigonometric interpolant of node values on the uniform [0, 2pi) grid
    n = vals.size
    coef = np.fft.fft(vals) / n
    wave = np.fft.fftfreq(n, d=1.0 / n)

    def ev(theta):
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        out = (np.exp(1j * np.outer(th, wave)) @ coef).real
        return float(out[0]) if np.isscalar(theta) else out

    return ev


def _wrap_pi(x):
    return (x + np.pi) % TWO_PI - np.pi


def _act_circle(problem, state, lambda_hat, t):
    gens = orbit_generators(problem, lambda_hat)
    g = expm(t[0] * gens[0] + t[1] * gens[1])
    interp = _trig_interp(state.values)
    lam = lambda_hat

    def moved(theta):
        r = interp(theta)
        Y = g @ quadric_embed(lam, r, theta)
        return quadric_to_chart(lam, Y)

    # the moved curve must stay a radial graph: its chart angle is checked
    # monotone on a dense sample before node-wise re-extraction
    n = problem.grid.N
    dense = np.linspace(0.0, TWO_PI, 4 * n, endpoint=False)
    _, th_d = moved(dense)
    thu = np.unwrap(th_d)
    if np.any(np.diff(thu) <= 0.0):
        raise DomainError("moved curve is not a radial graph about the origin")
    shift = np.max(np.abs(_wrap_pi(th_d - dense)))
    half = shift + 0.1
    if half + shift >= np.pi:
        raise DomainError("group motion too large for radial re-extraction")

    cap = radial_cap(lam)
    rnew = np.empty(n)
    for j, target in enumerate(problem.grid.nodes):
        def fj(th):
            _, ang = moved(th)
            return _wrap_pi(ang - target)

        root = brentq(fj, target - half, target + half, xtol=1e-14, rtol=8.9e-16)
        rr, _ = moved(root)
        rnew[j] = rr
    if np.min(rnew) < RMIN or np.max(rnew) > cap:
        raise DomainError("moved curve left the radial chart domain")
    return ProblemState(rnew)


def _act_sphere(problem, state, lambda_hat, t):
    gens = orbit_generators(problem, lambda_hat)
    R = expm(t[0] * gens[0] + t[1] * gens[1] + t[2] * gens[2])
    a, b = _split(state.values)
    theta = problem.grid.nodes
    phi = theta + b
    P = np.stack([np.sin(a) * np.cos(phi), np.sin(a) * np.sin(phi), np.cos(a)])
    Y = R @ P
    a_new = np.arccos(np.clip(Y[2], -1.0, 1.0))
    if np.min(np.abs(np.sin(a_new))) < SIN_MIN:
        raise DomainError("rotated state too close to a chart pole")
    phi_new = np.unwrap(np.arctan2(Y[1], Y[0]))
    b_new = phi_new - theta
    # keep the longitude sheet of the input state
    b_new -= TWO_PI * np.round((np.mean(b_new) - np.mean(b)) / TWO_PI)
    return ProblemState(np.concatenate([a_new, b_new]))


def act(problem, state, lambda_hat, t):
    """Apply the isometry exp(sum t_a X_a) to a state through the chart.

    X_a are the orbit_generators; the CmcCircle action moves the curve in
    the quadric model and re-extracts the radial graph over the fixed node
    angles, the harmonic actions are pointwise on chart values.
    """
    t = np.asarray(t, dtype=float).ravel()
    k = len(orbit_generators(problem, lambda_hat))
    if t.size != k:
        raise ShapeError(f"expected {k} group parameters, got {t.size}")
    _check_state(problem, state, lambda_hat)
    if isinstance(problem, CmcProfile):
        return ProblemState(state.values.copy())
    if np.max(np.abs(t), initial=0.0) == 0.0:
        return ProblemState(state.values.copy())
    if isinstance(problem, CmcCircle):
        return _act_circle(problem, state, lambda_hat, t)
    if isinstance(problem, HarmonicTorus):
        u, v = _split(state.values)
        return ProblemState(np.concatenate([u + t[0], v + t[1]]))
    return _act_sphere(problem, state, lambda_hat, t)


# ---------------------------------------------------------------------------
# derived scalars and analytic seeds

def derived_scalars(problem, state, lambda_hat):
    """Instance-specific summary numbers stored with branch records."""
    v = _check_state(problem, state, lambda_hat)
    if isinstance(problem, CmcCircle):
        return {"radius": float(np.mean(v))}
    if isinstance(problem, CmcProfile):
        res = residual(problem, ProblemState(v), lambda_hat)
        sn, _ = sn_lambda(lambda_hat, v)
        err = np.abs(res[1:-1]) / (TWO_PI * sn[1:-1])
        return {"max_H_error": float(np.max(err))}
    if isinstance(problem, HarmonicTorus):
        w = problem.grid.quad / TWO_PI
        Q = problem.ambient(lambda_hat).Q
        f1, f2 = _torus_velocity(problem, v)
        dens = Q[0, 0] * f1 * f1 + 2.0 * Q[0, 1] * f1 * f2 + Q[1, 1] * f2 * f2
        return {"length": float(w @ np.sqrt(dens))}
    w = problem.grid.quad / TWO_PI
    a, _, alpha, beta = _sphere_terms(problem, v, lambda_hat)
    s = np.sin(a)
    length = float(w @ np.sqrt((alpha ** 2 + s ** 2 * beta ** 2) / lambda_hat))
    return {"length": length,
            "length_times_sqrt_lambda": length * float(np.sqrt(lambda_hat))}


def cmc_circle_radius(lam, H):
    """Closed-form geodesic circle radius with curvature H at curvature lam.

    Solves sn'(rho)/sn(rho) = H: arctan(sqrt(lam)/H)/sqrt(lam) for lam > 0,
    1/H at lam = 0, artanh(sqrt(-lam)/H)/sqrt(-lam) for lam < 0. Exists only
    for lam > -H^2 (the horocycle barrier).
    """
    if H <= 0.0:
        raise DomainError("curvature parameter H must be positive")
    if lam <= -H * H:
        raise DomainError(f"no closed circle of curvature {H} at lambda={lam}")
    if lam > 0.0:
        s = np.sqrt(lam)
        return float(np.arctan(s / H) / s)
    if lam == 0.0:
        return 1.0 / H
    s = np.sqrt(-lam)
    return float(np.arctanh(s / H) / s)


def circle_seed(lam, H, grid):
    """Exact geodesic-circle state for a CmcCircle problem on the grid."""
    problem = CmcCircle(H=float(H), grid=grid)
    rho = cmc_circle_radius(lam, H)
    return problem, ProblemState(np.full(grid.N, rho))


def profile_cylinder_seed(H, grid, radius=None):
    """Cylinder profile state; exactly critical at k = 0 when radius = 1/H."""
    rho = 1.0 / H if radius is None else float(radius)
    problem = CmcProfile(H=float(H), grid=grid, boundary_radii=(rho, rho))
    return problem, ProblemState(np.full(grid.N, rho))


def torus_line_seed(homotopy, grid, gram_start, gram_end):
    """Straight-line representative of the class; critical for every flat metric."""
    problem = HarmonicTorus(homotopy=tuple(homotopy), grid=grid,
                            gram_start=gram_start, gram_end=gram_end)
    return problem, ProblemState(np.zeros(2 * grid.N))


def sphere_equator_seed(grid):
    """Equatorial great circle, critical at every sphere scale."""
    problem = HarmonicSphere(grid=grid)
    vals = np.concatenate([np.full(grid.N, 0.5 * np.pi), np.zeros(grid.N)])
    return problem, ProblemState(vals)
