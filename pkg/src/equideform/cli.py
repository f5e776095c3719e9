"""Batch front end: verify the group bundle, analyze a critical seed,
continue a branch, or test congruence of two states.

    equideform <command> --config <file.ini> [--out <dir>] [--seed <u64>]

Commands and exit codes:
    verify-bundle   0 all checks pass, 2 a named check fails
    analyze         0 nondegenerate, 2 otherwise, 3 corrector failure
    continue        0 full path, 2 nondegeneracy halt, 3 convergence failure
    congruence      0 congruent, 2 not congruent, 3 solver failure
    any             64 on a malformed or inconsistent config

Configuration is a key = value INI file. Keys are case-insensitive.

    [run]       seed (u64, default 0); out (output directory)
    [problem]   instance = cmc_circle | cmc_profile | harmonic_torus |
                harmonic_sphere; N (grid size, 8..4096); order (spectral or
                an even integer for Dirichlet grids); H (mean curvature);
                lambda_hat (where analyze/congruence work); length and
                radius (profile); homotopy = p,q and gram_start/gram_end =
                Q11,Q12,Q22 (torus)
    [path]      start, end; records (count, uniform steps) or initial_step
                with optional min_step/max_step; tol, max_newton, retries,
                basin_guard, diagnostics_cadence, angle_tol, tol_rel
    [bundle]    lambdas (list), n (list), samples, triples
    [congruence] t = t1,t2,... (group parameters); tol
    [test]      inject_broken_basis (bool); inject_shift (float) -- fault
                injection hooks for exercising the failure exits

Every command writes report.json into the output directory; continue also
writes branch.jsonl (one record per line, with the resolved config and a
git-style content hash of the config bytes + effective seed) and branch.csv.
Report payloads are byte-stable across re-runs with the same config and
seed; timestamps live in a separate meta object. Harmonic instances need an
odd spectral N, so an even configured N is rounded up by one and the
effective value is what the report's config block shows.
"""

import argparse
import configparser
import os
import sys

import numpy as np

from .continuation import (ContinuationConfig, congruence_check,
                           continue_branch, corrector_step)
from .equivariance import nondegeneracy_report, operator_diagnostics
from .errors import (ConfigError, DomainError, EquideformError, IllConditioned,
                     NoConvergence, PreconditionError, ShapeError)
from .lie_bundle import (GroupWord, ReductivePair, algebra_basis,
                         algebra_element, bracket_closure_residual,
                         complement_and_slice_check, deformed_bracket,
                         group_membership_residual, invariance_residual,
                         section)
from .mesh import build_grid
from .serialize import (content_hash, write_branch_csv, write_branch_jsonl,
                        write_report)
from .variational import (JacobiOperator, act, circle_seed, derived_scalars,
                          jacobi, profile_cylinder_seed, sphere_equator_seed,
                          torus_line_seed)

EXIT_OK = 0
EXIT_CHECK = 2
EXIT_SOLVER = 3
EXIT_CONFIG = 64

_SOLVER_ERRORS = (NoConvergence, IllConditioned, PreconditionError, DomainError)


class _Parser(argparse.ArgumentParser):
    # usage problems are config problems for exit-code purposes
    def error(self, message):
        raise ConfigError(message)


def _u64(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise ValueError("seed out of range")
    return value


def _build_parser():
    parser = _Parser(prog="equideform",
                     description="group-bundle verification and "
                                 "equivariant branch continuation")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("verify-bundle", "analyze", "continue", "congruence"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, metavar="FILE")
        sp.add_argument("--out", default=None, metavar="DIR")
        sp.add_argument("--seed", type=_u64, default=None, metavar="U64")
    return parser


def _load_config(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(raw.decode("utf-8"))
    except (UnicodeDecodeError, configparser.Error) as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}")
    return cp, raw


def _get(cp, sec, key, conv, default=None, required=False):
    if not cp.has_option(sec, key):
        if required:
            raise ConfigError(f"[{sec}] {key} is required")
        return default
    text = cp.get(sec, key)
    try:
        return conv(text)
    except (ValueError, TypeError):
        raise ConfigError(f"[{sec}] {key} = {text!r} is not valid")


def _float_list(text):
    return [float(tok) for tok in text.replace(",", " ").split()]


def _int_list(text):
    return [int(tok) for tok in text.replace(",", " ").split()]


def _bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(lowered)


def _positive(name):
    def conv(text):
        value = float(text)
        if not value > 0.0:
            raise ValueError(f"{name} must be positive")
        return value
    return conv


def _gram(text):
    q11, q12, q22 = _float_list(text)
    return np.array([[q11, q12], [q12, q22]])


def _order_value(order, default):
    if order is None:
        return default
    text = order.strip().lower()
    if text == "spectral":
        return "spectral"
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"[problem] order = {order!r} is not valid")


_DEFAULT_LAMBDA = {"cmc_circle": 0.0, "cmc_profile": 0.0,
                   "harmonic_torus": 0.0, "harmonic_sphere": 1.0}


def _build_problem(cp, lam):
    """Construct the configured problem and its built-in analytic seed."""
    instance = _get(cp, "problem", "instance", str, required=True).strip().lower()
    if instance not in _DEFAULT_LAMBDA:
        raise ConfigError(f"[problem] instance = {instance!r} is not one of "
                          "cmc_circle, cmc_profile, harmonic_torus, "
                          "harmonic_sphere")
    N = _get(cp, "problem", "n", int, default=128)
    if not 8 <= N <= 4096:
        raise ConfigError(f"[problem] N = {N} outside [8, 4096]")
    order = _get(cp, "problem", "order", str, default=None)
    resolved = {"instance": instance, "n": N}
    try:
        if instance == "cmc_circle":
            H = _get(cp, "problem", "h", _positive("H"), required=True)
            grid = build_grid("periodic", N, _order_value(order, "spectral"))
            problem, state = circle_seed(lam, H, grid)
            resolved["h"] = H
        elif instance == "cmc_profile":
            H = _get(cp, "problem", "h", _positive("H"), required=True)
            length = _get(cp, "problem", "length", _positive("length"),
                          default=1.0)
            radius = _get(cp, "problem", "radius", _positive("radius"),
                          default=None)
            grid = build_grid("dirichlet", N, _order_value(order, 4),
                              a=0.0, b=length)
            problem, state = profile_cylinder_seed(H, grid, radius)
            resolved.update(h=H, length=length,
                            radius=radius if radius is not None else 1.0 / H)
        elif instance == "harmonic_torus":
            if N % 2 == 0:
                N += 1
                resolved["n"] = N
            pq = _get(cp, "problem", "homotopy", _int_list, default=[1, 0])
            if len(pq) != 2 or pq == [0, 0]:
                raise ConfigError("[problem] homotopy must be two integers, "
                                  "not both zero")
            qs = _get(cp, "problem", "gram_start", _gram,
                      default=np.eye(2))
            qe = _get(cp, "problem", "gram_end", _gram, default=qs)
            grid = build_grid("periodic", N, _order_value(order, "spectral"))
            problem, state = torus_line_seed(tuple(pq), grid, qs, qe)
            resolved.update(homotopy=list(pq),
                            gram_start=[qs[0, 0], qs[0, 1], qs[1, 1]],
                            gram_end=[qe[0, 0], qe[0, 1], qe[1, 1]])
        else:
            if N % 2 == 0:
                N += 1
                resolved["n"] = N
            grid = build_grid("periodic", N, _order_value(order, "spectral"))
            problem, state = sphere_equator_seed(grid)
    except (ValueError, DomainError, ShapeError, EquideformError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot build [problem] seed: {exc}")
    return problem, state, resolved


def _path_config(cp, lam=None):
    """ContinuationConfig from [path]; lam fixes start=end for polish-only use."""
    kwargs = {}
    for key, conv in (("tol", _positive("tol")),
                      ("max_newton", int), ("retries", int),
                      ("basin_guard", _positive("basin_guard")),
                      ("diagnostics_cadence", int),
                      ("angle_tol", _positive("angle_tol")),
                      ("tol_rel", _positive("tol_rel"))):
        value = _get(cp, "path", key, conv)
        if value is not None:
            kwargs[key] = value
    try:
        if lam is not None:
            return ContinuationConfig(start=lam, end=lam, initial_step=1.0,
                                      min_step=1e-12, max_step=1.0, **kwargs)
        start = _get(cp, "path", "start", float, required=True)
        end = _get(cp, "path", "end", float, required=True)
        records = _get(cp, "path", "records", int)
        if records is not None:
            if cp.has_option("path", "initial_step"):
                raise ConfigError("[path] give either records or "
                                  "initial_step, not both")
            return ContinuationConfig.from_steps(start, end, records, **kwargs)
        initial = _get(cp, "path", "initial_step", _positive("initial_step"),
                       required=True)
        retries = kwargs.get("retries", 6)
        min_step = _get(cp, "path", "min_step", _positive("min_step"),
                        default=initial / 2.0**(retries + 1))
        max_step = _get(cp, "path", "max_step", _positive("max_step"),
                        default=initial)
        return ContinuationConfig(start=start, end=end, initial_step=initial,
                                  min_step=min_step, max_step=max_step,
                                  **kwargs)
    except ConfigError:
        raise
    except (ValueError, EquideformError) as exc:
        raise ConfigError(f"invalid [path] section: {exc}")


def _config_payload(ccfg):
    return {"start": ccfg.start, "end": ccfg.end,
            "initial_step": ccfg.initial_step, "min_step": ccfg.min_step,
            "max_step": ccfg.max_step, "tol": ccfg.tol,
            "max_newton": ccfg.max_newton, "retries": ccfg.retries,
            "basin_guard": ccfg.basin_guard,
            "diagnostics_cadence": ccfg.diagnostics_cadence,
            "angle_tol": ccfg.angle_tol, "tol_rel": ccfg.tol_rel}


def _record_summary(rec):
    out = rec.to_payload()
    del out["state"]
    return out


def run_verify_bundle(cp, seed, chash, outdir):
    lambdas = _get(cp, "bundle", "lambdas", _float_list,
                   default=[-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0])
    ns = _get(cp, "bundle", "n", _int_list, default=[2])
    samples = _get(cp, "bundle", "samples", int, default=200)
    triples = _get(cp, "bundle", "triples", int, default=100)
    inject = _get(cp, "test", "inject_broken_basis", _bool, default=False)
    for n in ns:
        if n < 2:
            raise ConfigError("[bundle] n entries must be >= 2")
    rng = np.random.default_rng(seed)
    checks = []

    def add(name, worst, threshold, passed=None, extra=None):
        entry = {"name": name, "worst": float(worst),
                 "threshold": float(threshold),
                 "passed": bool(worst < threshold if passed is None else passed)}
        if extra:
            entry.update(extra)
        checks.append(entry)

    # closure and frame invariance over the whole grid
    worst_cl, worst_inv = 0.0, 0.0
    for n in ns:
        for lam in lambdas:
            basis = algebra_basis(lam, n)
            mats = [e.mat for e in basis.elements]
            if inject:
                bad = np.zeros((n + 1, n + 1))
                bad[0, 0] = 1.0
                bad[1, 1] = -1.0
                mats = [mats[0] + bad] + mats[1:]
            worst_cl = max(worst_cl, bracket_closure_residual(mats))
            worst_inv = max(worst_inv,
                            max(invariance_residual(e.mat, lam)
                                for e in basis.elements))
    add("bracket_closure", worst_cl, 1e-12)
    add("frame_invariance", worst_inv, 1e-12)

    # stacked rank and slice/group intersection margin
    rank_ok, min_margin, worst_ident = True, np.inf, 0.0
    for n in ns:
        for lam in lambdas:
            rep = complement_and_slice_check(lam, n, n_samples=samples,
                                             seed=seed)
            rank_ok = rank_ok and rep.full_rank
            min_margin = min(min_margin, rep.min_off_identity_residual)
            worst_ident = max(worst_ident, rep.identity_residual)
    add("complement_rank", 0.0, 1.0, passed=rank_ok)
    add("slice_margin", min_margin, 1e-3,
        passed=(min_margin > 1e-3) and (worst_ident < 1e-12),
        extra={"identity_residual": float(worst_ident)})

    # two-letter section built at lambda0 = 1, swept over [-1, 1]
    n0 = ns[0]
    letters = []
    for _ in range(2):
        A = rng.standard_normal((n0, n0))
        letters.append((0.3 * (A - A.T), 0.3 * rng.standard_normal(n0)))
    word = GroupWord(letters=tuple(letters), base_lambda=1.0)
    h0 = section(word, 1.0)
    worst_mem = max(group_membership_residual(section(word, lam), lam)
                    for lam in np.linspace(-1.0, 1.0, 21))
    reproduce = float(np.max(np.abs(section(word, 1.0) - h0)))
    add("section_membership", worst_mem, 1e-10,
        extra={"reproduce_at_base": reproduce})

    # deformed bracket: antisymmetry, Jacobi, lambda = 1 recovery
    worst_anti, worst_jac, worst_match = 0.0, 0.0, 0.0
    pair = ReductivePair(n0)

    def rand_elem():
        A = rng.standard_normal((n0, n0))
        return (A - A.T, rng.standard_normal(n0))

    def pair_max(u, v):
        return max(float(np.max(np.abs(u[0] + v[0]))),
                   float(np.max(np.abs(u[1] + v[1]))))

    for lam in (-1.0, 0.0, 0.5, 1.0):
        for _ in range(triples):
            x, y, z = rand_elem(), rand_elem(), rand_elem()
            bxy = deformed_bracket(lam, x, y, pair)
            byx = deformed_bracket(lam, y, x, pair)
            worst_anti = max(worst_anti, pair_max(bxy, byx))
            terms = [deformed_bracket(lam, x, deformed_bracket(lam, y, z, pair), pair),
                     deformed_bracket(lam, y, deformed_bracket(lam, z, x, pair), pair),
                     deformed_bracket(lam, z, deformed_bracket(lam, x, y, pair), pair)]
            cyc_k = terms[0][0] + terms[1][0] + terms[2][0]
            cyc_m = terms[0][1] + terms[1][1] + terms[2][1]
            worst_jac = max(worst_jac, float(np.max(np.abs(cyc_k))),
                            float(np.max(np.abs(cyc_m))))
            if lam == 1.0:
                mx = pair.embed_k(x[0]) + pair.embed_m(x[1])
                my = pair.embed_k(y[0]) + pair.embed_m(y[1])
                dk, um, defect = pair.split(mx @ my - my @ mx)
                worst_match = max(worst_match, defect,
                                  float(np.max(np.abs(bxy[0] - dk))),
                                  float(np.max(np.abs(bxy[1] - um))))
    add("bracket_antisymmetry", worst_anti, 1e-15,
        passed=(worst_anti == 0.0))
    add("bracket_jacobi", worst_jac, 1e-12)
    add("bracket_matches_undeformed", worst_match, 1e-14)

    passed = all(c["passed"] for c in checks)
    for c in checks:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"check {c['name']}: {status} (worst {c['worst']:.3e})")
    payload = {"command": "verify-bundle", "passed": passed,
               "checks": checks,
               "config": {"lambdas": lambdas, "n": ns, "samples": samples,
                          "triples": triples, "seed": seed,
                          "inject_broken_basis": inject},
               "config_hash": chash}
    write_report(os.path.join(outdir, "report.json"), payload)
    return EXIT_OK if passed else EXIT_CHECK


def run_analyze(cp, seed, chash, outdir):
    instance = _get(cp, "problem", "instance", str, default="").strip().lower()
    lam = _get(cp, "problem", "lambda_hat", float,
               default=_DEFAULT_LAMBDA.get(instance, 0.0))
    problem, seed_state, resolved = _build_problem(cp, lam)
    ccfg = _path_config(cp, lam=lam)
    shift = _get(cp, "test", "inject_shift", float)
    resolved.update(lambda_hat=lam, seed=seed)
    base = {"command": "analyze", "config": resolved,
            "path": _config_payload(ccfg), "config_hash": chash}
    try:
        state, iters, _ = corrector_step(problem, seed_state, lam, ccfg)
        operator = None
        if shift is not None:
            J0 = jacobi(problem, state, lam)
            operator = JacobiOperator(
                matrix=J0.matrix + shift * np.eye(J0.matrix.shape[0]),
                pairing=J0.pairing, lambda_hat=lam)
        rep = nondegeneracy_report(problem, state, lam, tol_rel=ccfg.tol_rel,
                                   angle_tol=ccfg.angle_tol, operator=operator)
        diag = operator_diagnostics(jacobi(problem, state, lam), problem,
                                    state, lam, seed=seed)
    except _SOLVER_ERRORS as exc:
        print(f"equideform: analyze failed: {exc}", file=sys.stderr)
        base["error"] = str(exc)
        write_report(os.path.join(outdir, "report.json"), base)
        return EXIT_SOLVER
    payload = dict(base, newton_iters=iters,
                   nondegeneracy=rep.to_payload(),
                   diagnostics=diag.to_payload(),
                   derived_scalars=derived_scalars(problem, state, lam))
    if shift is not None:
        payload["inject_shift"] = shift
    write_report(os.path.join(outdir, "report.json"), payload)
    print(f"verdict: {rep.verdict} (kernel {rep.kernel_dim}/"
          f"{rep.killing_rank}, gap {rep.gap:.3e})")
    return EXIT_OK if rep.verdict == "nondegenerate" else EXIT_CHECK


def run_continue(cp, seed, chash, outdir):
    ccfg = _path_config(cp)
    problem, seed_state, resolved = _build_problem(cp, ccfg.start)
    resolved["seed"] = seed
    config_block = {"problem": resolved, "path": _config_payload(ccfg)}
    error = None
    try:
        records = continue_branch(problem, seed_state, ccfg)
    except NoConvergence as exc:
        records = exc.partial_branch or []
        error = str(exc)
    except (IllConditioned, PreconditionError, DomainError) as exc:
        records = []
        error = str(exc)
    rows = [dict(rec.to_payload(), config=config_block, config_hash=chash)
            for rec in records]
    write_branch_jsonl(os.path.join(outdir, "branch.jsonl"), rows)
    scalar_key = (sorted(records[0].derived_scalars)[0] if records
                  else "value")
    write_branch_csv(os.path.join(outdir, "branch.csv"), records, scalar_key)
    payload = {"command": "continue", "records": len(records),
               "config": config_block, "config_hash": chash,
               "error": error,
               "final": _record_summary(records[-1]) if records else None}
    write_report(os.path.join(outdir, "report.json"), payload)
    if error is not None:
        print(f"equideform: continuation incomplete: {error}", file=sys.stderr)
        print(f"records: {len(records)} (partial)")
        return EXIT_SOLVER
    print(f"records: {len(records)}, final lambda_hat "
          f"{records[-1].lambda_hat:.12g}, verdict {records[-1].verdict}")
    if records[-1].verdict != "nondegenerate":
        return EXIT_CHECK
    return EXIT_OK


def run_congruence(cp, seed, chash, outdir):
    instance = _get(cp, "problem", "instance", str, default="").strip().lower()
    lam = _get(cp, "problem", "lambda_hat", float,
               default=_DEFAULT_LAMBDA.get(instance, 0.0))
    problem, seed_state, resolved = _build_problem(cp, lam)
    t = np.asarray(_get(cp, "congruence", "t", _float_list, required=True))
    tol = _get(cp, "congruence", "tol", _positive("tol"), default=1e-8)
    resolved.update(lambda_hat=lam, seed=seed)
    base = {"command": "congruence", "config": resolved,
            "applied_t": list(t), "tol": tol, "config_hash": chash}
    try:
        moved = act(problem, seed_state, lam, t)
    except ShapeError as exc:
        raise ConfigError(f"[congruence] t: {exc}")
    try:
        congruent, params = congruence_check(problem, seed_state, moved, lam,
                                             tol=tol)
    except _SOLVER_ERRORS as exc:
        print(f"equideform: congruence failed: {exc}", file=sys.stderr)
        base["error"] = str(exc)
        write_report(os.path.join(outdir, "report.json"), base)
        return EXIT_SOLVER
    payload = dict(base, congruent=bool(congruent),
                   recovered_t=list(params.t))
    write_report(os.path.join(outdir, "report.json"), payload)
    print(f"congruent: {congruent}")
    return EXIT_OK if congruent else EXIT_CHECK


def main(argv=None):
    parser = _build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help and friends
            return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
        cp, raw = _load_config(args.config)
        seed = args.seed
        if seed is None:
            seed = _get(cp, "run", "seed", _u64, default=0)
        outdir = args.out or _get(cp, "run", "out", str, default=".")
        try:
            os.makedirs(outdir, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory: {exc}")
        chash = content_hash(raw + b"\nseed=%d\n" % seed)
        runner = {"verify-bundle": run_verify_bundle,
                  "analyze": run_analyze,
                  "continue": run_continue,
                  "congruence": run_congruence}[args.command]
        return runner(cp, seed, chash, outdir)
    except ConfigError as exc:
        print(f"equideform: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
