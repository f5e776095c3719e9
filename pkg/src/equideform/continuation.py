"""Predictor-corrector branch continuation on symmetry slices.

The corrector is a bordered Newton iteration: each step solves the
symmetric system

    [ W J   W K ] [ delta ]   [ -W residual ]
    [ K^T W  0  ] [  mu   ] = [      0      ]

where K is a W-orthonormal rank basis of the Killing-Jacobi span evaluated
at the current iterate, so updates stay W-orthogonal to the orbit
directions that foliate the solution set. Quadratic convergence holds near
certified-nondegenerate solutions because the bordered matrix is exactly
the restriction of the Hessian to a transversal slice plus the orbit
bookkeeping.

continue_branch marches the parameter with a secant predictor and adaptive
steps, certifying every accepted record (kernel = Killing span, spectral
gap, transversality margin against the previous record's slice). A
degenerate verdict halts the branch with the offending record flagged at
the end; convergence failure raises NoConvergence carrying the partial
branch.

orbit_project recovers the group motion between nearby solutions by
Gauss-Newton on the Killing components of the difference, and
congruence_check composes it with one corrector polish to decide whether
two states are the same solution modulo the group.
"""

from dataclasses import dataclass

import numpy as np

from .equivariance import (nondegeneracy_report, operator_diagnostics,
                           rank_basis, slice_basis, transversality_margin)
from .errors import (DomainError, IllConditioned, NoConvergence,
                     PreconditionError)
from .variational import (ProblemState, act, derived_scalars, jacobi,
                          killing_jacobi_basis, orbit_generators, pairing,
                          residual, residual_norm)

MARGIN_FLOOR = 0.1
RECORD_CAP = 100000


@dataclass(frozen=True)
class ContinuationConfig:
    start: float
    end: float
    initial_step: float
    min_step: float
    max_step: float
    tol: float = 1e-10
    max_newton: int = 12
    retries: int = 6
    basin_guard: float = 1e-2
    diagnostics_cadence: int = 0
    angle_tol: float = 1e-6
    tol_rel: float = None

    def __post_init__(self):
        if self.min_step <= 0.0 or self.initial_step <= 0.0 or self.max_step <= 0.0:
            raise PreconditionError("continuation steps must be positive")
        if self.min_step > self.initial_step or self.initial_step > self.max_step:
            raise PreconditionError("need min_step <= initial_step <= max_step")
        if self.tol <= 0.0 or self.basin_guard <= 0.0:
            raise PreconditionError("tolerances must be positive")

    @classmethod
    def from_steps(cls, start, end, n_records, **kwargs):
        """Uniform path hitting exactly n_records parameter values."""
        if n_records < 2 or end == start:
            raise PreconditionError("need at least two records and a nontrivial path")
        step = abs(end - start) / (n_records - 1)
        kwargs.setdefault("initial_step", step)
        kwargs.setdefault("max_step", step)
        kwargs.setdefault("min_step", step / 2 ** (kwargs.get("retries", 6) + 1))
        return cls(start=float(start), end=float(end), **kwargs)


@dataclass(frozen=True, eq=False)
class GroupParameters:
    t: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float).ravel())


@dataclass(frozen=True, eq=False)
class BranchRecord:
    lambda_hat: float
    state: ProblemState
    residual_norm: float
    kernel_dim: int
    killing_rank: int
    max_principal_angle: float
    spectral_gap: float
    transversality_margin: float
    newton_iters: int
    derived_scalars: dict
    verdict: str
    diagnostics: dict

    def to_payload(self):
        return {
            "lambda_hat": float(self.lambda_hat),
            "residual_norm": float(self.residual_norm),
            "kernel_dim": int(self.kernel_dim),
            "killing_rank": int(self.killing_rank),
            "max_principal_angle": float(self.max_principal_angle),
            "spectral_gap": float(self.spectral_gap),
            "transversality_margin": float(self.transversality_margin),
            "newton_iters": int(self.newton_iters),
            "derived_scalars": dict(self.derived_scalars),
            "verdict": self.verdict,
            "state": [float(x) for x in self.state.values],
            "diagnostics": self.diagnostics,
        }


def corrector_step(problem, state, lambda_hat, config):
    """Bordered Newton correction at fixed parameter.

    Returns (state, iterations, diagnostics) with diagnostics carrying the
    residual-norm history, the worst bordered condition number, and the
    largest normalized Killing component of any update (the slice leak,
    held at roundoff by an explicit projection after each solve).
    """
    pr = pairing(problem)
    w = pr.weights
    st = ProblemState(state.values.copy())
    res = residual(problem, st, lambda_hat)
    rn = pr.norm(res)
    if not np.isfinite(rn) or rn >= config.basin_guard:
        raise PreconditionError(
            f"initial residual {rn:.3e} outside the basin guard {config.basin_guard:.1e}")
    norms = [float(rn)]
    worst_cond = 0.0
    orbit_inner = 0.0
    iters = 0
    n = st.values.size
    while rn > config.tol:
        if iters >= config.max_newton:
            raise NoConvergence(
                f"corrector stalled at |residual|_W = {rn:.3e} "
                f"after {iters} iterations (lambda_hat={lambda_hat})")
        B = rank_basis(killing_jacobi_basis(problem, st, lambda_hat), w)
        k = B.shape[1]
        WJ = w[:, None] * jacobi(problem, st, lambda_hat).matrix
        if k:
            WB = w[:, None] * B
            M = np.zeros((n + k, n + k))
            M[:n, :n] = WJ
            M[:n, n:] = WB
            M[n:, :n] = WB.T
            rhs = np.concatenate([-(w * res), np.zeros(k)])
        else:
            M = WJ
            rhs = -(w * res)
        cond = np.linalg.cond(M)
        worst_cond = max(worst_cond, float(cond))
        if not np.isfinite(cond) or cond > 1e12:
            raise IllConditioned(
                f"bordered matrix condition {cond:.3e} at lambda_hat={lambda_hat} "
                "signals nondegeneracy loss")
        delta = np.linalg.solve(M, rhs)[:n]
        if k:
            # exact W-orthogonality to the orbit directions
            delta = delta - B @ (B.T @ (w * delta))
            dn = pr.norm(delta)
            if dn > 0.0:
                leak = np.max(np.abs(B.T @ (w * delta))) / dn
                orbit_inner = max(orbit_inner, float(leak))
        st = ProblemState(st.values + delta)
        res = residual(problem, st, lambda_hat)
        rn = pr.norm(res)
        if not np.isfinite(rn):
            raise NoConvergence("corrector residual became non-finite")
        norms.append(float(rn))
        iters += 1
    diagnostics = {"residual_norms": norms, "cond": worst_cond,
                   "orbit_inner": orbit_inner}
    return st, iters, diagnostics


def _certify(problem, state, lam, config, iters, ref_slice, with_diagnostics=False):
    rep = nondegeneracy_report(problem, state, lam, tol_rel=config.tol_rel,
                               angle_tol=config.angle_tol)
    slc = ref_slice if ref_slice is not None else slice_basis(problem, state, lam)
    margin = transversality_margin(problem, state, lam, slc)
    diag = None
    if with_diagnostics:
        J = jacobi(problem, state, lam)
        diag = operator_diagnostics(J, problem, state, lam).to_payload()
    return BranchRecord(
        lambda_hat=float(lam), state=state, residual_norm=rep.residual_norm,
        kernel_dim=rep.kernel_dim, killing_rank=rep.killing_rank,
        max_principal_angle=rep.max_principal_angle, spectral_gap=rep.gap,
        transversality_margin=margin, newton_iters=int(iters),
        derived_scalars=derived_scalars(problem, state, lam),
        verdict=rep.verdict, diagnostics=diag)


def continue_branch(problem, seed_state, config):
    """March the branch from config.start to config.end.

    The polished seed is the first record. Secant predictor after the first
    step; on corrector failure (no convergence, conditioning, chart exit, or
    basin miss on the predicted state) the step halves up to config.retries
    times before the partial branch is raised inside NoConvergence. A
    record whose nondegeneracy verdict is not clean is appended flagged and
    the branch halts there.
    """
    lam = float(config.start)
    st, iters, _ = corrector_step(problem, seed_state, lam, config)
    cadence = int(config.diagnostics_cadence)
    rec = _certify(problem, st, lam, config, iters, None,
                   with_diagnostics=cadence > 0)
    records = [rec]
    if rec.verdict != "nondegenerate":
        return records
    slc = slice_basis(problem, st, lam)
    prev_lam = None
    prev_vals = None
    step = float(config.initial_step)
    direction = 1.0 if config.end >= config.start else -1.0
    fast = 0
    while lam != config.end:
        advanced = False
        target = lam
        st_new = st
        rec = None
        for _ in range(config.retries + 1):
            if step < config.min_step:
                break
            target = lam + direction * step
            # snap to the endpoint through accumulated roundoff, or the last
            # step leaves an ulp-sized gap and the endpoint gets recorded twice
            snap = 1e-9 * (abs(config.end) + step)
            if direction * (target - config.end) >= -snap:
                target = float(config.end)
            if prev_lam is not None and lam != prev_lam:
                scale = (target - lam) / (lam - prev_lam)
                guess = st.values + scale * (st.values - prev_vals)
            else:
                guess = st.values
            try:
                st_new, iters, _ = corrector_step(
                    problem, ProblemState(guess), target, config)
                with_diag = cadence > 0 and len(records) % cadence == 0
                rec = _certify(problem, st_new, target, config, iters, slc,
                               with_diagnostics=with_diag)
            except (NoConvergence, IllConditioned, DomainError,
                    PreconditionError):
                step *= 0.5
                fast = 0
                continue
            if rec.transversality_margin <= MARGIN_FLOOR:
                # stale slice: shrink toward the reference instead of accepting
                rec = None
                step *= 0.5
                fast = 0
                continue
            advanced = True
            break
        if not advanced:
            raise NoConvergence(
                f"continuation stalled at lambda_hat={lam:.12g} "
                f"(step underflow below {config.min_step:.3e})",
                partial_branch=records)
        records.append(rec)
        if rec.verdict != "nondegenerate":
            return records
        prev_lam, prev_vals = lam, st.values
        lam, st = target, st_new
        slc = slice_basis(problem, st, lam)
        if iters <= 3:
            fast += 1
        else:
            fast = 0
        if fast >= 2:
            step = min(step * 1.3, config.max_step)
        if len(records) >= RECORD_CAP:
            raise NoConvergence("record cap reached", partial_branch=records)
    return records


def orbit_project(problem, state, lambda_hat, reference, tol=1e-11,
                  max_iter=30, fd_step=1e-6, trust_radius=0.25):
    """Move a state onto the affine slice through a nearby reference.

    Gauss-Newton over the group parameters t of the Killing components
    F(t) = K^T W (act(state, t) - reference), with K the W-orthonormal
    Killing-Jacobi rank basis at the reference. Returns the parameters of
    the motion carrying the reference's representative onto the input state
    (minus the solve direction), the moved state, and the remaining
    W-distance to the slice.
    """
    pr = pairing(problem)
    w = pr.weights
    B = rank_basis(killing_jacobi_basis(problem, reference, lambda_hat), w)
    k = len(orbit_generators(problem, lambda_hat))
    if k == 0 or B.shape[1] == 0:
        moved = ProblemState(state.values.copy())
        if B.shape[1]:
            dist = float(np.linalg.norm(B.T @ (w * (moved.values - reference.values))))
        else:
            dist = 0.0
        return GroupParameters(np.zeros(k)), moved, dist

    def components(t):
        moved = act(problem, state, lambda_hat, t)
        return B.T @ (w * (moved.values - reference.values)), moved

    t = np.zeros(k)
    F, moved = components(t)
    for _ in range(max_iter):
        if np.linalg.norm(F) < tol:
            break
        cols = []
        for a in range(k):
            ta = t.copy()
            ta[a] += fd_step
            Fa, _ = components(ta)
            cols.append((Fa - F) / fd_step)
        Jt = np.column_stack(cols)
        dt, *_ = np.linalg.lstsq(Jt, -F, rcond=None)
        t = t + dt
        if np.linalg.norm(t) > trust_radius:
            raise NoConvergence("orbit projection left the trust region")
        F, moved = components(t)
    else:
        raise NoConvergence(
            f"orbit projection stalled with |F| = {np.linalg.norm(F):.3e}")
    return GroupParameters(-t), moved, float(np.linalg.norm(F))


def _polish_config(lam):
    return ContinuationConfig(start=lam, end=lam, initial_step=1.0,
                              min_step=1e-12, max_step=1.0)


def congruence_check(problem, state1, state2, lambda_hat, tol=1e-8,
                     config=None):
    """Decide whether two critical states agree modulo the group action.

    Projects state2 onto state1's slice, polishes with the corrector, and
    compares in the W norm. Solver failures from the projection or polish
    propagate; a clean finish returns (within tol?, recovered parameters).
    """
    pr = pairing(problem)
    gp, moved, _ = orbit_project(problem, state2, lambda_hat, state1)
    cfg = config if config is not None else _polish_config(lambda_hat)
    polished, _, _ = corrector_step(problem, moved, lambda_hat, cfg)
    dist = pr.norm(polished.values - state1.values)
    return bool(dist < tol), gp
