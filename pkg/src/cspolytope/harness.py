"""Experiment configuration, phase-transition sweeps and the cross-oracle self-test.

Seeding of a phase sweep: trial ``t`` uses the matrix
``generate_matrix(spec, n, N, seed + t)`` for every ``m`` (common random
matrices across rows), and its sparse vector for sparsity ``m`` is drawn
from ``RngStream(seed + t, 2**32 + m)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, randsrc
from .bounds import BoundConstants
from .ensembles import EnsembleSpec, generate_matrix, sample_lp_ball_point
from .polytope import FACE_TOL, equivalence_verdicts, neighborliness_order
from .randsrc import RngStream
from .recovery import SignedSupport, exact_recovery_trial
from .rip import (
    candes_criterion,
    chaos_statistics,
    chaos_sup_monte_carlo,
    halfsplit_identity_check,
    isometry_constant_exact,
    isometry_constant_sampled,
    rip_decomposition_check,
)

__all__ = [
    "ExperimentConfig",
    "PhaseRow",
    "PhaseDiagram",
    "sparse_test_vector",
    "run_phase_transition",
    "run_selftest",
    "PHASE_COLUMNS",
]

PHASE_COLUMNS = ("m", "trials", "successes", "success_rate", "mean_delta_sampled", "seed")
Z_STREAM_BASE = 2 ** 32


@dataclass
class ExperimentConfig:
    """Phase-sweep configuration; JSON round-trippable."""

    ensemble: EnsembleSpec
    n: int
    N: int
    m_grid: list
    trials: int
    seed: int = 0
    delta_trials: int = 100
    budget: int = 1_000_000
    magnitudes: str = "sign"
    output: str | None = None
    constants: BoundConstants = field(default_factory=BoundConstants)

    def __post_init__(self):
        if isinstance(self.ensemble, str):
            self.ensemble = EnsembleSpec.parse(self.ensemble)
        if isinstance(self.constants, dict):
            c = dict(self.constants)
            c.pop("xi", None)
            self.constants = BoundConstants(**c)
        self.m_grid = [int(m) for m in self.m_grid]
        if not self.m_grid:
            raise ValueError("m_grid must be nonempty")
        if self.n < 1 or self.N < 1:
            raise ValueError("n and N must be positive")
        if any(m < 0 or m > self.N for m in self.m_grid):
            raise ValueError(f"every m must lie in [0, {self.N}]")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.budget < 1 or self.delta_trials < 0:
            raise ValueError("budgets must be positive")
        if self.magnitudes not in ("sign", "gaussian"):
            raise ValueError("magnitudes must be 'sign' or 'gaussian'")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ensemble"] = self.ensemble.token()
        d["constants"] = self.constants.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class PhaseRow:
    m: int
    trials: int
    successes: int
    success_rate: float
    mean_delta_sampled: float
    seed: int


@dataclass
class PhaseDiagram:
    rows: list
    metadata: dict

    def rate(self, m: int) -> float:
        return next(r.success_rate for r in self.rows if r.m == m)

    def monotone_violations(self, sigmas: float = 3.0) -> list:
        """Consecutive rows whose success rate rises by more than ``sigmas`` binomial sd."""
        bad = []
        for a, b in zip(self.rows, self.rows[1:]):
            p = 0.5 * (a.success_rate + b.success_rate)
            sd = math.sqrt(max(p * (1 - p), 1e-12) * (1.0 / a.trials + 1.0 / b.trials))
            if b.success_rate - a.success_rate > sigmas * sd:
                bad.append((a.m, b.m))
        return bad

    def to_csv(self) -> str:
        """Metadata as ``# key: json`` comment lines, then the data columns."""
        buf = io.StringIO()
        for key in sorted(self.metadata):
            buf.write(f"# {key}: {json.dumps(self.metadata[key], sort_keys=True)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(PHASE_COLUMNS)
        for r in self.rows:
            w.writerow([r.m, r.trials, r.successes, repr(r.success_rate), repr(r.mean_delta_sampled), r.seed])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PhaseDiagram":
        meta, body = {}, []
        for line in text.splitlines():
            if line.startswith("# "):
                key, _, val = line[2:].partition(": ")
                meta[key] = json.loads(val)
            else:
                body.append(line)
        reader = csv.DictReader(body)
        rows = [PhaseRow(int(r["m"]), int(r["trials"]), int(r["successes"]), float(r["success_rate"]),
                         float(r["mean_delta_sampled"]), int(r["seed"])) for r in reader]
        return cls(rows, meta)


def sparse_test_vector(stream: RngStream, N: int, m: int, magnitudes: str = "sign") -> np.ndarray:
    """``m``-sparse vector on a uniform random support with random signs."""
    z = np.zeros(N)
    if m == 0:
        return z
    support = stream.generator.permutation(N)[:m]
    signs = np.where(randsrc.uniform01(stream, m) < 0.5, -1.0, 1.0)
    if magnitudes == "gaussian":
        signs = signs * np.abs(randsrc.sample_gaussian(stream, m))
    z[support] = signs
    return z


def run_phase_transition(config: ExperimentConfig) -> PhaseDiagram:
    """Empirical basis-pursuit success frequency for each ``m`` in the grid."""
    rows = []
    for m in config.m_grid:
        successes = 0
        deltas = []
        for t in range(config.trials):
            mseed = config.seed + t
            A = generate_matrix(config.ensemble, config.n, config.N, mseed)
            zs = RngStream(mseed, Z_STREAM_BASE + m)
            z = sparse_test_vector(zs, config.N, m, config.magnitudes)
            successes += bool(exact_recovery_trial(A, z).success)
            if m > 0 and config.delta_trials > 0:
                deltas.append(isometry_constant_sampled(A, m, config.delta_trials, zs.child(Z_STREAM_BASE - 1 - m)).delta)
        mean_delta = float(np.mean(deltas)) if deltas else 0.0
        rows.append(PhaseRow(m, config.trials, successes, successes / config.trials, mean_delta, config.seed))
    # the destination path is not part of the experiment
    recipe = {k: v for k, v in config.to_dict().items() if k != "output"}
    meta = {"config": recipe, "algorithm_id": randsrc.ALGORITHM_ID, "version": __version__,
            "seed": config.seed, "spec": config.ensemble.token(), "constants": config.constants.to_dict()}
    diagram = PhaseDiagram(rows, meta)
    if config.output:
        Path(config.output).write_text(diagram.to_csv())
    return diagram


# -- self-test -----------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict
    seconds: float


def _timed(name, fn):
    t0 = time.perf_counter()
    passed, detail = fn()
    return CheckResult(name, bool(passed), detail, time.perf_counter() - t0)


def equivalence_battery(shapes, seeds, m_max: int, face_tol: float = FACE_TOL):
    """Face, certificate and null-space verdicts agree on every signed support.

    Returns ``(passed, detail)``; on the first disagreement the detail holds
    the smallest disagreeing selection (fewest indices, then colex order).
    """
    checked = 0
    for (n, N) in shapes:
        for seed in seeds:
            A = generate_matrix(EnsembleSpec.gaussian(), n, N, seed)
            table = equivalence_verdicts(A, m_max, face_tol=face_tol)
            for S, (face, cert, nsp) in table.items():
                checked += 1
                if cert is None or nsp is None:
                    continue
                if not face == cert == nsp:
                    return False, {"n": n, "N": N, "seed": seed, "witness": S.label(),
                                   "face": face, "certificate": cert, "nsp": nsp, "checked": checked}
    return True, {"checked": checked}


def hand_example_check():
    A = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    d1 = isometry_constant_exact(A, 1).delta
    d2 = isometry_constant_exact(A, 2).delta
    B2 = chaos_statistics(A, 2).B_m ** 2
    nb = neighborliness_order(A, 2)
    e3 = exact_recovery_trial(A, [0, 0, 1]).success
    e12 = exact_recovery_trial(A, [1, 1, 0]).success
    ok = (abs(d1 - 0.5) <= 1e-10 and abs(d2 - (1 + math.sqrt(5)) / 4) <= 1e-10 and abs(B2 - 1) <= 1e-10
          and nb.order == 1 and SignedSupport((0, 1), (1, 1)) in nb.failures and e3 and not e12)
    return ok, {"delta1": d1, "delta2": d2, "B2": B2, "order": nb.order,
                "recover_e3": e3, "recover_e1_plus_e2": e12}


def rip_identity_battery(instances, m_max=3, shape=(6, 10)):
    n, N = shape
    worst = -np.inf
    for seed in range(instances):
        A = generate_matrix(EnsembleSpec.gaussian(), n, N, 1000 + seed)
        for m in range(1, m_max + 1):
            r = rip_decomposition_check(A, m)
            worst = max(worst, r["delta"] - r["rhs"])
            if not r["holds"]:
                return False, {"seed": 1000 + seed, "m": m, **r}
    return True, {"instances": instances, "max_excess": worst}


def chaos_battery(instances, mc_samples=100_000, m_max=3, shape=(6, 10)):
    n, N = shape
    for seed in range(instances):
        spec = EnsembleSpec.iid_entries(1.0) if seed % 2 else EnsembleSpec.gaussian()
        A = generate_matrix(spec, n, N, 2000 + seed)
        for m in range(1, m_max + 1):
            st = chaos_statistics(A, m)
            if m == 1 and st.B_m > 1e-9:
                return False, {"seed": 2000 + seed, "B_1": st.B_m}
            if abs(st.A_m ** 2 - st.B_m ** 2) > st.C_m ** 2 + 1e-9:
                return False, {"seed": 2000 + seed, "m": m, **st.to_dict()}
            mc = chaos_sup_monte_carlo(A, m, mc_samples, RngStream(2000 + seed, 2 ** 33 + m))
            if mc > st.B_m ** 2 + 1e-9:
                return False, {"seed": 2000 + seed, "m": m, "monte_carlo": mc, "B2": st.B_m ** 2}
    return True, {"instances": instances, "mc_samples": mc_samples}


def halfsplit_battery(families, K_max=8, dim=5):
    worst = 0.0
    for f in range(families):
        s = RngStream(3000 + f, 0)
        K = 1 + f % K_max
        V = randsrc.sample_gaussian(s, (K, dim)) * (1 + 9 * randsrc.uniform01(s))
        r = halfsplit_identity_check(V)
        rel = r["residual"] / max(r["scale"], 1e-300)
        worst = max(worst, rel)
        if r["residual"] > 1e-10 * r["scale"]:
            return False, {"family": f, **r}
    return True, {"families": families, "max_relative_residual": worst}


def candes_battery(shapes, seeds, m_values=(1, 2), recovery_trials=100, specs=None):
    """Whenever the exact ``delta_2m`` meets the criterion, random recovery never fails.

    Fails also when no instance qualifies, since then nothing was tested.
    """
    specs = specs or [EnsembleSpec.sphere(), EnsembleSpec.gaussian()]
    qualifying = 0
    for spec in specs:
        for (n, N) in shapes:
            for seed in seeds:
                A = generate_matrix(spec, n, N, 4000 + seed)
                for m in m_values:
                    if 2 * m > N:
                        continue
                    d = isometry_constant_exact(A, 2 * m).delta
                    if not candes_criterion(d):
                        continue
                    qualifying += 1
                    s = RngStream(4000 + seed, 2 ** 34 + m)
                    for t in range(recovery_trials):
                        z = sparse_test_vector(s, N, m, "gaussian")
                        if not exact_recovery_trial(A, z).success:
                            return False, {"spec": spec.token(), "n": n, "N": N, "seed": 4000 + seed,
                                           "m": m, "delta_2m": d,
                                           "trial": t, "z": z.tolist()}
    return qualifying > 0, {"qualifying_instances": qualifying}


def sampler_battery(samples=20_000):
    """Kolmogorov-Smirnov tests of the scalar samplers against their laws."""
    from scipy import stats

    s = RngStream(5000, 0)
    tests = {
        "gaussian": stats.kstest(randsrc.sample_gaussian(s, samples), "norm"),
        "weibull_r1": stats.kstest(np.abs(randsrc.sample_symmetric_weibull(s, 1.0, samples)), "expon"),
        "weibull_r1.5": stats.kstest(np.abs(randsrc.sample_symmetric_weibull(s, 1.5, samples)),
                                     stats.weibull_min(1.5).cdf),
        "exponential": stats.kstest(randsrc.sample_exponential(s, 2.0, samples), stats.expon(scale=0.5).cdf),
        "uniform": stats.kstest(randsrc.uniform01(s, samples), "uniform"),
    }
    # l_p ball radius: |x|_p^p is Beta(n/p, 1) for the uniform law
    x = sample_lp_ball_point(s, 1.5, 4, samples)
    tests["lp_ball_radius"] = stats.kstest(np.sum(np.abs(x) ** 1.5, axis=1), stats.beta(4 / 1.5, 1).cdf)
    pvals = {k: float(v.pvalue) for k, v in tests.items()}
    # Bonferroni over the family at overall level 1e-3
    return min(pvals.values()) > 1e-3 / len(pvals), {"pvalues": pvals}


def positive_face_check():
    A = generate_matrix(EnsembleSpec.gaussian(), 6, 9, 6000)
    rep = neighborliness_order(A, 2, mode="positive")
    cent = neighborliness_order(A, 2, mode="central")
    # central neighborliness implies the positive kind
    return rep.order >= cent.order, {"positive": rep.order, "central": cent.order}


def run_selftest(tier: str = "quick", inject_fault: bool = False) -> dict:
    """Run the cross-oracle battery.

    ``tier="quick"`` uses small instances; ``tier="full"`` runs the
    equivalence battery on ``n = 8..12``, ``N = n + 4``, ``m <= 3`` over 50
    seeds.  ``inject_fault`` corrupts the face tolerance to 0.5 so that the
    equivalence check must fail and report a witness.
    """
    if tier not in ("quick", "full"):
        raise ValueError("tier must be 'quick' or 'full'")
    face_tol = 0.5 if inject_fault else FACE_TOL
    if tier == "quick":
        eq = lambda: equivalence_battery([(5, 8)], range(3), 2, face_tol)
        checks = [
            ("hand_example", hand_example_check),
            ("equivalence", eq),
            ("rip_decomposition", lambda: rip_identity_battery(5)),
            ("chaos", lambda: chaos_battery(3, 10_000)),
            ("halfsplit", lambda: halfsplit_battery(10)),
            ("candes", lambda: candes_battery([(40, 16)], range(2), (1,), 20, [EnsembleSpec.sphere()])),
            ("samplers", lambda: sampler_battery(5_000)),
            ("positive_faces", positive_face_check),
        ]
    else:
        shapes = [(n, n + 4) for n in range(8, 13)]
        seeds_per_shape = range(10)
        checks = [
            ("hand_example", hand_example_check),
            ("equivalence", lambda: equivalence_battery(shapes, seeds_per_shape, 3, face_tol)),
            ("rip_decomposition", lambda: rip_identity_battery(100)),
            ("chaos", lambda: chaos_battery(100)),
            ("halfsplit", lambda: halfsplit_battery(50)),
            ("candes", lambda: candes_battery([(100, 20), (200, 30)], range(10), (1, 2), 100)),
            ("samplers", lambda: sampler_battery()),
            ("positive_faces", positive_face_check),
        ]
    if inject_fault:
        checks = [c for c in checks if c[0] == "equivalence"]
    results = [_timed(name, fn) for name, fn in checks]
    return {"tier": tier, "fault_injected": inject_fault, "passed": all(r.passed for r in results),
            "version": __version__, "algorithm_id": randsrc.ALGORITHM_ID,
            "checks": [asdict(r) for r in results]}
