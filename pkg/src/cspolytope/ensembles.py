"""Sensing-matrix ensembles and empirical checks of their column conditions.

All ensembles except the masked Bernoulli one are normalized so that every
column satisfies ``E|X_i|^2 = n``.  Column ``j`` of a generated matrix is
drawn from ``RngStream(seed, j)``, so a matrix is a pure function of
``(spec, n, N, seed)`` and columns can be produced in any order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import randsrc
from .randsrc import RngStream

H2_THRESHOLD = (math.sqrt(2.0) - 1.0) / 2.0
PSI_MOMENTS = (1, 2, 4, 6, 8)
SCALE_SEED = 0x5CA1E
SCALE_SAMPLES = 100_000

__all__ = [
    "H2_THRESHOLD",
    "EnsembleSpec",
    "SensingMatrix",
    "ConditionReport",
    "register_custom",
    "generate_matrix",
    "sample_lp_ball_point",
    "isotropic_scale_factor",
    "estimate_psi_r_norm",
    "check_h1",
    "check_h2",
]

VARIANTS = ("iid_entries", "gaussian", "rademacher", "lp_ball", "sphere", "masked_bernoulli", "custom")

_CUSTOM: dict[str, Callable[[RngStream, int], np.ndarray]] = {}


def register_custom(name: str, sampler: Callable[[RngStream, int], np.ndarray]) -> None:
    """Register a column sampler ``sampler(stream, n) -> (n,) array`` under ``name``.

    The sampler is responsible for its own normalization.
    """
    if not re.fullmatch(r"[A-Za-z0-9_.-]+", name):
        raise ValueError(f"invalid custom ensemble name {name!r}")
    _CUSTOM[name] = sampler


@dataclass(frozen=True)
class EnsembleSpec:
    """Column distribution of a sensing matrix.

    Use the class-method constructors; ``variant`` is one of
    ``iid_entries`` (symmetric Weibull entries with shape ``r`` in [1, 2]),
    ``gaussian``, ``rademacher``, ``lp_ball`` (uniform on the ``p`` ball,
    rescaled to isotropic), ``sphere`` (uniform on the radius ``sqrt(n)``
    sphere), ``masked_bernoulli`` or ``custom``.
    """

    variant: str
    r: float | None = None
    p: float | None = None
    name: str | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown ensemble variant {self.variant!r}")
        if self.variant == "iid_entries":
            if self.r is None or not (1.0 <= self.r <= 2.0):
                raise ValueError(f"iid_entries needs r in [1, 2], got {self.r}")
        if self.variant == "lp_ball":
            if self.p is None or not self.p >= 1.0 or math.isinf(self.p):
                raise ValueError(f"lp_ball needs finite p >= 1, got {self.p}")
        if self.variant == "custom" and not self.name:
            raise ValueError("custom ensemble needs a name")

    @classmethod
    def iid_entries(cls, r: float) -> "EnsembleSpec":
        return cls("iid_entries", r=float(r))

    @classmethod
    def gaussian(cls) -> "EnsembleSpec":
        return cls("gaussian")

    @classmethod
    def rademacher(cls) -> "EnsembleSpec":
        return cls("rademacher")

    @classmethod
    def lp_ball(cls, p: float) -> "EnsembleSpec":
        return cls("lp_ball", p=float(p))

    @classmethod
    def sphere(cls) -> "EnsembleSpec":
        return cls("sphere")

    @classmethod
    def masked_bernoulli(cls) -> "EnsembleSpec":
        return cls("masked_bernoulli")

    @classmethod
    def custom(cls, name: str) -> "EnsembleSpec":
        return cls("custom", name=name)

    @property
    def isotropic(self) -> bool:
        return self.variant != "masked_bernoulli"

    def token(self) -> str:
        """Comma-free text form, e.g. ``iid_entries(r=1.5)``."""
        if self.variant == "iid_entries":
            return f"iid_entries(r={self.r!r})"
        if self.variant == "lp_ball":
            return f"lp_ball(p={self.p!r})"
        if self.variant == "custom":
            return f"custom(name={self.name})"
        return self.variant

    @classmethod
    def parse(cls, token: str) -> "EnsembleSpec":
        m = re.fullmatch(r"\s*([a-z_]+)\s*(?:\(\s*(\w+)\s*=\s*([^)]+?)\s*\))?\s*", token)
        if not m:
            raise ValueError(f"cannot parse ensemble {token!r}")
        variant, key, val = m.groups()
        if key is None:
            return cls(variant)
        if key in ("r", "p"):
            return cls(variant, **{key: float(val)})
        if key == "name":
            return cls(variant, name=val)
        raise ValueError(f"unknown ensemble parameter {key!r}")


@dataclass
class SensingMatrix:
    """Dense ``n x N`` matrix whose columns are the sensing vectors."""

    entries: np.ndarray
    spec: EnsembleSpec | None = None
    seed: int | None = None
    algorithm_id: str = randsrc.ALGORITHM_ID

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        if self.entries.ndim != 2 or min(self.entries.shape) < 1:
            raise ValueError(f"need a nonempty 2-d matrix, got shape {self.entries.shape}")
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("matrix entries must be finite")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def N(self) -> int:
        return self.entries.shape[1]

    def column(self, i: int) -> np.ndarray:
        return self.entries[:, i]

    def column_norms(self) -> np.ndarray:
        return np.sqrt(np.einsum("ij,ij->j", self.entries, self.entries))

    def metadata(self) -> dict:
        return {
            "n": self.n,
            "N": self.N,
            "spec": self.spec.token() if self.spec else "none",
            "seed": self.seed,
            "algorithm_id": self.algorithm_id,
        }

    # -- serialization -------------------------------------------------
    def to_csv(self) -> str:
        """Header row ``n,N,spec,seed,algorithm_id`` followed by ``n`` data rows.

        Floats are written with the shortest decimal string that round-trips.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        meta = self.metadata()
        w.writerow([meta["n"], meta["N"], meta["spec"],
                    "" if self.seed is None else self.seed, self.algorithm_id])
        for row in self.entries:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SensingMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        n, N, spec, seed, alg = rows[0]
        n, N = int(n), int(N)
        data = np.array([[float(v) for v in row] for row in rows[1:1 + n]])
        if data.shape != (n, N):
            raise ValueError(f"CSV body has shape {data.shape}, header says {(n, N)}")
        return cls(data, None if spec == "none" else EnsembleSpec.parse(spec),
                   int(seed) if seed else None, alg)

    def to_json(self) -> str:
        doc = dict(self.metadata())
        doc["entries"] = self.entries.tolist()
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "SensingMatrix":
        doc = json.loads(text)
        spec = None if doc.get("spec") in (None, "none") else EnsembleSpec.parse(doc["spec"])
        data = np.array(doc["entries"], dtype=float).reshape(doc["n"], doc["N"])
        return cls(data, spec, doc.get("seed"), doc.get("algorithm_id", randsrc.ALGORITHM_ID))

    def save(self, path) -> None:
        path = Path(path)
        text = self.to_json() if path.suffix == ".json" else self.to_csv()
        path.write_text(text)

    @classmethod
    def load(cls, path) -> "SensingMatrix":
        path = Path(path)
        text = path.read_text()
        return cls.from_json(text) if path.suffix == ".json" else cls.from_csv(text)


@dataclass
class ConditionReport:
    h1_psi_estimate: float | None = None
    h1_mode: str | None = None
    h1_directions: int = 0
    h1_samples: int = 0
    h2_max_deviation: float | None = None
    h2_pass: bool | None = None
    h2_threshold: float = H2_THRESHOLD
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


# -- l_p balls -------------------------------------------------------------

def sample_lp_ball_point(stream: RngStream, p: float, n: int, size: int | None = None) -> np.ndarray:
    """Uniform point(s) in ``{x : sum |x_i|^p <= 1}``.

    Uses ``g / (sum |g_i|^p + Z)^(1/p)`` with ``g_i`` of density
    proportional to ``exp(-|t|^p)`` and ``Z`` standard exponential.
    Returns shape ``(n,)`` or ``(size, n)``.
    """
    if not p >= 1.0 or math.isinf(p):
        raise ValueError(f"p must be finite and >= 1, got {p}")
    if n < 1:
        raise ValueError("dimension must be positive")
    count = 1 if size is None else int(size)
    mag = randsrc.sample_gamma(stream, 1.0 / p, (count, n)) ** (1.0 / p)
    g = mag * randsrc.sample_rademacher(stream, (count, n))
    z = randsrc.sample_exponential(stream, 1.0, count)
    radius = (np.sum(np.abs(g) ** p, axis=1) + z) ** (1.0 / p)
    pts = g / radius[:, None]
    return pts[0] if size is None else pts


_SCALE_CACHE: dict[tuple, float] = {}


def _cache_file() -> Path:
    root = os.environ.get("CSPOLYTOPE_CACHE_DIR") or os.path.join(
        os.environ.get("XDG_CACHE_HOME", os.path.expanduser("~/.cache")), "cspolytope")
    return Path(root) / "lp_scale.json"


def _load_persisted() -> dict:
    try:
        return json.loads(_cache_file().read_text())
    except (OSError, ValueError):
        return {}


def _persist(key: str, value: float) -> None:
    try:
        path = _cache_file()
        data = _load_persisted()
        data[key] = value
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(data, indent=1, sort_keys=True))
    except OSError:
        pass


def isotropic_scale_factor(p: float, n: int, stream: RngStream | None = None,
                           samples: int = SCALE_SAMPLES, persist: bool = True) -> float:
    """``1 / sigma`` where ``sigma^2`` is the per-coordinate variance on the ``p`` ball.

    The variance is a Monte Carlo estimate pooled over all coordinates.
    Results for the default stream are cached in memory and on disk
    (``$CSPOLYTOPE_CACHE_DIR/lp_scale.json``) keyed by ``(p, n, samples)``.
    """
    if samples < 10_000:
        raise ValueError("need at least 10^4 samples for the scale estimate")
    default = stream is None
    key = (float(p), int(n), int(samples))
    if default:
        if key in _SCALE_CACHE:
            return _SCALE_CACHE[key]
        skey = f"p={p!r},n={n},samples={samples},seed={SCALE_SEED}"
        if persist:
            stored = _load_persisted().get(skey)
            if stored is not None:
                _SCALE_CACHE[key] = float(stored)
                return float(stored)
        stream = RngStream(SCALE_SEED, 0)
    pts = sample_lp_ball_point(stream, p, n, samples)
    var = float(np.mean(pts * pts))
    factor = 1.0 / math.sqrt(var)
    if default:
        _SCALE_CACHE[key] = factor
        if persist:
            _persist(skey, factor)
    return factor


# -- column draws ------------------------------------------------------------

def _draw_columns(spec: EnsembleSpec, stream: RngStream, n: int, count: int) -> np.ndarray:
    """``count`` independent columns from one stream, shape ``(n, count)``."""
    v = spec.variant
    if v == "gaussian":
        return randsrc.sample_gaussian(stream, (count, n)).T
    if v == "rademacher":
        return randsrc.sample_rademacher(stream, (count, n)).T
    if v == "iid_entries":
        scale = 1.0 / math.sqrt(randsrc.weibull_variance(spec.r))
        return scale * randsrc.sample_symmetric_weibull(stream, spec.r, (count, n)).T
    if v == "lp_ball":
        return isotropic_scale_factor(spec.p, n) * sample_lp_ball_point(stream, spec.p, n, count).T
    if v == "sphere":
        g = randsrc.sample_gaussian(stream, (count, n))
        norms = np.sqrt(np.sum(g * g, axis=1))
        return (math.sqrt(n) * g / norms[:, None]).T
    if v == "masked_bernoulli":
        eps = randsrc.sample_rademacher(stream, (count, n))
        keep = randsrc.uniform01(stream, count) < 0.5
        return (math.sqrt(2.0) * eps * keep[:, None]).T
    if v == "custom":
        try:
            sampler = _CUSTOM[spec.name]
        except KeyError:
            raise ValueError(f"custom ensemble {spec.name!r} is not registered") from None
        return np.column_stack([np.asarray(sampler(stream, n), dtype=float) for _ in range(count)])
    raise ValueError(f"unknown variant {v!r}")


def generate_matrix(spec: EnsembleSpec, n: int, N: int, seed: int) -> SensingMatrix:
    """Draw an ``n x N`` sensing matrix; column ``j`` uses ``RngStream(seed, j)``."""
    if n < 1 or N < 1:
        raise ValueError("n and N must be positive")
    cols = np.empty((n, N))
    for j in range(N):
        cols[:, j] = _draw_columns(spec, RngStream(seed, j), n, 1)[:, 0]
    return SensingMatrix(cols, spec, seed)


# -- condition checks ----------------------------------------------------------

def estimate_psi_r_norm(samples, r: float) -> float:
    """Moment-growth proxy for the ``psi_r`` norm.

    Returns ``max_p (E|Y|^p)^(1/p) / p^(1/r)`` over ``p in {1, 2, 4, 6, 8}``.
    This is within universal constant factors of the true norm; it is not
    the Orlicz norm itself.
    """
    y = np.abs(np.asarray(samples, dtype=float).ravel())
    if y.size == 0:
        raise ValueError("no samples")
    if not 0 < r <= 2:
        raise ValueError(f"r must lie in (0, 2], got {r}")
    scale = y.max()
    if scale == 0.0:
        return 0.0
    u = y / scale
    best = 0.0
    for p in PSI_MOMENTS:
        mom = np.mean(u ** p) ** (1.0 / p) * scale
        best = max(best, mom / p ** (1.0 / r))
    return float(best)


def _unit_directions(stream: RngStream, n: int, count: int) -> np.ndarray:
    g = randsrc.sample_gaussian(stream, (count, n))
    return g / np.sqrt(np.sum(g * g, axis=1))[:, None]


def check_h1(A: SensingMatrix, r: float, directions: int = 10, stream: RngStream | None = None,
             samples: int = 2000) -> ConditionReport:
    """Empirical uniform ``psi_r`` bound on linear forms of the columns.

    With an ensemble spec attached, columns are re-drawn under that law
    (``samples`` per direction) and the maximum psi proxy over directions
    is reported as an ensemble-level estimate.  Without one, each
    direction uses the ``N`` columns of this instance as its sample, and
    the report is flagged instance-level.
    """
    if directions < 10:
        raise ValueError("need at least 10 directions")
    stream = stream or RngStream(0 if A.seed is None else A.seed, 2 ** 40)
    dirs = _unit_directions(stream, A.n, directions)
    rep = ConditionReport(h1_directions=directions)
    redrawable = A.spec is not None and (A.spec.variant != "custom" or A.spec.name in _CUSTOM)
    if redrawable:
        best = 0.0
        for k, y in enumerate(dirs):
            cols = _draw_columns(A.spec, stream.child(2 ** 40 + 1 + k), A.n, samples)
            best = max(best, estimate_psi_r_norm(y @ cols, r))
        rep.h1_psi_estimate = best
        rep.h1_mode = "ensemble"
        rep.h1_samples = samples
    else:
        vals = dirs @ A.entries
        rep.h1_psi_estimate = max(estimate_psi_r_norm(v, r) for v in vals)
        rep.h1_mode = "instance"
        rep.h1_samples = A.N
        rep.notes.append("single fixed instance: one sample per column, proxy only")
    return rep


def check_h2(A) -> ConditionReport:
    """Exact ``max_i | |X_i|^2/n - 1 |`` for this instance against ``(sqrt2-1)/2``."""
    X = np.asarray(getattr(A, "entries", A), dtype=float)
    n = X.shape[0]
    dev = float(np.abs(np.einsum("ij,ij->j", X, X) / n - 1.0).max())
    return ConditionReport(h2_max_deviation=dev, h2_pass=dev < H2_THRESHOLD)
