"""Command-line entry point.

Every command prints one JSON document on stdout.  Exit codes: 0 pass,
1 a checked property failed, 2 usage error, 3 budget refusal.  Indices on
the command line are 1-based.

For ``phase``, values come from ``--config`` first and explicit flags
override them.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__, bounds
from .bounds import BoundConstants
from .ensembles import EnsembleSpec, SensingMatrix, check_h2, generate_matrix
from .harness import ExperimentConfig, run_phase_transition, run_selftest
from .polytope import donoho_cross_check, neighborliness_order
from .randsrc import RngStream
from .recovery import (
    SignedSupport,
    all_sparse_recovery_check,
    decode_l1,
    dual_certificate_value,
    exact_recovery_trial,
)
from .rip import BudgetExceeded, chaos_statistics, isometry_constant_exact, isometry_constant_sampled

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
CONSTANTS_NOTE = "universal constants C, c are user-supplied (default 1); values are shapes, not guarantees"


def _budget(text: str) -> int:
    value = float(text)
    if not value >= 1 or not math.isfinite(value):
        raise argparse.ArgumentTypeError("budget must be a positive number")
    return int(value)


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _floats(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",") if v.strip()])


def _emit(doc) -> None:
    json.dump(doc, sys.stdout, indent=2, default=_json_default)
    sys.stdout.write("\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, SignedSupport):
        return obj.label()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _one_based(support) -> list[int]:
    return [i + 1 for i in support]


# -- commands ------------------------------------------------------------------

def cmd_gen(a) -> int:
    A = generate_matrix(EnsembleSpec.parse(a.ensemble), a.n, a.N, a.seed)
    if a.out:
        A.save(a.out)
        _emit({"written": a.out, **A.metadata(), "h2": check_h2(A).to_dict()})
    else:
        sys.stdout.write(A.to_csv())
    return EXIT_PASS


def cmd_rip(a) -> int:
    A = SensingMatrix.load(a.matrix)
    out = {"matrix": A.metadata(), "entries": {}}
    for m in a.m:
        if a.sampled:
            e = isometry_constant_sampled(A, m, a.trials, RngStream(a.seed, 0))
        else:
            e = isometry_constant_exact(A, m, a.budget)
        out["entries"][str(m)] = {"delta": e.delta, "witness_support": _one_based(e.witness_support),
                                  "witness_side": e.witness_side, "method": e.method,
                                  "supports_examined": e.supports_examined}
    _emit(out)
    return EXIT_PASS


def cmd_chaos(a) -> int:
    A = SensingMatrix.load(a.matrix)
    out = {"matrix": A.metadata(), "entries": {}}
    for m in a.m:
        st = chaos_statistics(A, m, a.budget)
        d = st.to_dict()
        d["witness_A"] = _one_based(st.witness_A)
        d["witness_B"] = _one_based(st.witness_B)
        out["entries"][str(m)] = d
    _emit(out)
    return EXIT_PASS


def cmd_recover(a) -> int:
    A = SensingMatrix.load(a.matrix)
    if a.support:
        S = SignedSupport.parse(a.support)
        mags = _floats(a.magnitudes) if a.magnitudes else None
        z = S.vector(A.N, mags)
        trial = exact_recovery_trial(A, z)
        cert = dual_certificate_value(A, S)
        _emit({"support": S.label(), "success": trial.success, "linf_error": trial.linf_error,
               "l1_objective": trial.l1_objective, "solution": trial.solution, "lp": trial.lp,
               "certificate": {"gamma": cert.gamma, "verdict": cert.verdict.value}})
        return EXIT_PASS if trial.success else EXIT_FAIL
    if a.m is None:
        raise ValueError("give --support or --m")
    rep = all_sparse_recovery_check(A, a.m, a.budget, RngStream(a.seed, 7))
    _emit(rep.to_dict())
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_decode(a) -> int:
    A = SensingMatrix.load(a.matrix)
    y = _floats(a.y)
    t = decode_l1(A, y)
    resid = y - A.entries.T @ t
    _emit({"t": t, "residual_l1": float(np.abs(resid).sum()), "nonzero_residuals": int((np.abs(resid) > 1e-9).sum())})
    return EXIT_PASS


def cmd_neighborly(a) -> int:
    A = SensingMatrix.load(a.matrix)
    rep = neighborliness_order(A, a.mmax, a.budget, a.mode)
    _emit(rep.to_dict())
    return EXIT_BUDGET if rep.budget_exhausted else EXIT_PASS


def cmd_crosscheck(a) -> int:
    A = SensingMatrix.load(a.matrix)
    res = donoho_cross_check(A, a.m, a.budget, RngStream(a.seed, 7))
    _emit(res)
    return EXIT_PASS if res["agree"] else EXIT_FAIL


def cmd_phase(a) -> int:
    doc = json.loads(open(a.config).read()) if a.config else {}
    overrides = {"ensemble": a.ensemble, "n": a.n, "N": a.N, "m_grid": a.m_grid, "trials": a.trials,
                 "seed": a.seed, "delta_trials": a.delta_trials, "magnitudes": a.magnitudes, "output": a.out}
    doc.update({k: v for k, v in overrides.items() if v is not None})
    doc.setdefault("ensemble", "gaussian")
    missing = [k for k in ("n", "N", "m_grid", "trials") if k not in doc]
    if missing:
        raise ValueError(f"missing config fields: {', '.join(missing)}")
    cfg = ExperimentConfig.from_dict(doc)
    diagram = run_phase_transition(cfg)
    if not cfg.output:
        sys.stdout.write(diagram.to_csv())
    else:
        _emit({"written": cfg.output, "rows": len(diagram.rows)})
    return EXIT_PASS


_FORMULAS = {
    "uup": lambda p, c: bounds.uup_bound(p["n"], p["N"], p["m"], c, p.get("p_max_norm", 0.0)),
    "rip": lambda p, c: bounds.rip_bound_rhs(p["n"], p["N"], p["m"], c, p.get("p_max_norm", 0.0),
                                             p.get("p_shell", 0.0)),
    "neighborly": lambda p, c: bounds.neighborliness_threshold(p["n"], p["N"], c, p.get("kind", "psi_r")),
    "bernstein": lambda p, c: {"value": bounds.bernstein_tail(p["t"], p["psi1_norms"], p["psi"])},
    "weibull": lambda p, c: {"value": bounds.weibull_tail_bound(p["t"], p["a"], p.get("r", c.r), p.get("c", c.c_small))},
    "mixed": lambda p, c: {"value": bounds.mixed_tail_bound(p["t"], p["n"], p["b"], p["s"], p.get("c", c.c_small))},
    "thinshell": lambda p, c: bounds.thin_shell_prob(p["n"], p["N"], p.get("theta", c.theta), c,
                                                     p.get("mode", "proven"), p.get("c_theta")),
    "maxnorm": lambda p, c: bounds.max_norm_prob(p["n"], p["N"], p.get("K", c.K), c.C0_max),
    "amlower": lambda p, c: bounds.am_lower_bound(p["n"], p["N"], p["m"], p.get("t", 1.0), p.get("c", c.c_small)),
}


def cmd_bounds(a) -> int:
    params = json.loads(open(a.json).read()) if a.json else {}
    for item in a.param or []:
        key, _, val = item.partition("=")
        params[key] = json.loads(val)
    consts = BoundConstants(**params.pop("constants", {}))
    value = _FORMULAS[a.formula](params, consts)
    _emit({"formula": a.formula, "params": params, "constants": consts.to_dict(), "result": value,
           "note": CONSTANTS_NOTE})
    return EXIT_PASS


def cmd_selftest(a) -> int:
    rep = run_selftest(a.tier, inject_fault=a.inject_fault)
    _emit(rep)
    return EXIT_PASS if rep["passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cspolytope", description="Sparse recovery and neighborliness toolkit.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a sensing matrix")
    g.add_argument("--ensemble", default="gaussian", help="e.g. gaussian, iid_entries(r=1.5), lp_ball(p=1)")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--N", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output file (.csv or .json); CSV to stdout if omitted")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("rip", help="restricted isometry constants")
    r.add_argument("--matrix", required=True)
    r.add_argument("--m", type=_int_list, required=True, help="comma-separated orders")
    r.add_argument("--budget", type=_budget, default=2_000_000)
    r.add_argument("--sampled", action="store_true", help="random-support lower bound instead of exact")
    r.add_argument("--trials", type=int, default=10_000)
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_rip)

    c = sub.add_parser("chaos", help="A_m, B_m, C_m")
    c.add_argument("--matrix", required=True)
    c.add_argument("--m", type=_int_list, required=True)
    c.add_argument("--budget", type=_budget, default=2_000_000)
    c.set_defaults(func=cmd_chaos)

    rc = sub.add_parser("recover", help="basis pursuit on a signed support, or all supports up to m")
    rc.add_argument("--matrix", required=True)
    rc.add_argument("--support", help='signed support such as "3:+,5:-" (1-based)')
    rc.add_argument("--magnitudes", help="comma-separated magnitudes for --support")
    rc.add_argument("--m", type=int)
    rc.add_argument("--budget", type=_budget, default=1_000_000)
    rc.add_argument("--seed", type=int, default=0)
    rc.set_defaults(func=cmd_recover)

    d = sub.add_parser("decode", help="l1 decoding of y in R^N")
    d.add_argument("--matrix", required=True)
    d.add_argument("--y", required=True, help="comma-separated N values")
    d.set_defaults(func=cmd_decode)

    nb = sub.add_parser("neighborly", help="neighborliness order of the polytope")
    nb.add_argument("--matrix", required=True)
    nb.add_argument("--mode", choices=("central", "positive"), default="central")
    nb.add_argument("--mmax", type=int, required=True)
    nb.add_argument("--budget", type=_budget, default=1_000_000)
    nb.set_defaults(func=cmd_neighborly)

    x = sub.add_parser("crosscheck", help="polytope verdict against recovery verdict")
    x.add_argument("--matrix", required=True)
    x.add_argument("--m", type=int, required=True)
    x.add_argument("--budget", type=_budget, default=1_000_000)
    x.add_argument("--seed", type=int, default=0)
    x.set_defaults(func=cmd_crosscheck)

    ph = sub.add_parser("phase", help="phase-transition sweep (CSV)")
    ph.add_argument("--config", help="JSON ExperimentConfig; flags override its fields")
    ph.add_argument("--ensemble")
    ph.add_argument("--n", type=int)
    ph.add_argument("--N", type=int)
    ph.add_argument("--m-grid", dest="m_grid", type=_int_list)
    ph.add_argument("--trials", type=int)
    ph.add_argument("--seed", type=int)
    ph.add_argument("--delta-trials", dest="delta_trials", type=int)
    ph.add_argument("--magnitudes", choices=("sign", "gaussian"))
    ph.add_argument("--out")
    ph.set_defaults(func=cmd_phase)

    b = sub.add_parser("bounds", help="evaluate a bound calculator")
    b.add_argument("--formula", required=True, choices=sorted(_FORMULAS))
    b.add_argument("--json", help="JSON parameter file; may hold a 'constants' object")
    b.add_argument("--param", action="append", help="key=json-value, overrides the file")
    b.set_defaults(func=cmd_bounds)

    s = sub.add_parser("selftest", help="cross-oracle self-test")
    s.add_argument("--tier", choices=("quick", "full"), default="quick")
    s.add_argument("--inject-fault", action="store_true", help="corrupt the face tolerance; must fail")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        _emit({"error": "budget", "message": str(exc), "required": exc.required, "budget": exc.budget})
        return EXIT_BUDGET
    except (ValueError, KeyError, OSError) as exc:
        print(f"cspolytope {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
