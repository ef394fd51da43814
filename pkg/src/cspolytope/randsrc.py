"""Seeded random streams and the scalar laws behind every ensemble.

Every stream wraps numpy's ``SFC64`` bit generator (a 64-bit
add/shift/rotate "small fast chaotic" generator) keyed by a
``(seed, stream_id)`` pair through ``SeedSequence``.  All samplers are
written on top of :func:`uniform01` so that the transforms are visible and
identical across builds; only the gamma sampler used by the l_p ball code
defers to numpy.

Samplers return canonical-parameter variates.  Rescaling to unit variance
is left to :mod:`cspolytope.ensembles`.
"""

from __future__ import annotations

import math

import numpy as np

ALGORITHM_ID = "sfc64-seedseq"

__all__ = [
    "ALGORITHM_ID",
    "RngStream",
    "uniform01",
    "sample_gaussian",
    "sample_symmetric_weibull",
    "weibull_variance",
    "sample_rademacher",
    "sample_exponential",
    "sample_symmetric_exponential",
    "sample_gamma",
]


class RngStream:
    """A single-owner deterministic random stream.

    Parameters
    ----------
    seed : int
        64-bit seed.  Negative seeds are rejected.
    stream_id : int
        Independent sub-stream index; ``(seed, stream_id)`` pairs map to
        statistically independent sequences via ``SeedSequence`` spawning.
    """

    algorithm_id = ALGORITHM_ID

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self._gen = np.random.Generator(np.random.SFC64(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, algorithm_id={self.algorithm_id!r})"

    def child(self, stream_id: int) -> "RngStream":
        """Stream with the same seed and a different id."""
        return RngStream(self.seed, stream_id)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def metadata(self) -> dict:
        return {"seed": self.seed, "stream_id": self.stream_id, "algorithm_id": self.algorithm_id}


def uniform01(stream: RngStream, size=None):
    """Uniform variates on [0, 1) (53-bit resolution)."""
    return stream.generator.random(size)


def _open_uniform(stream, size):
    # (0, 1]; keeps logs finite
    return 1.0 - uniform01(stream, size)


def sample_gaussian(stream: RngStream, size=None):
    """Standard normal variates by the Marsaglia polar method.

    Pairs ``(u, v)`` uniform on the square are rejected outside the unit
    disc; each accepted pair yields two normals
    ``u * sqrt(-2 ln s / s)`` and ``v * sqrt(-2 ln s / s)``.
    """
    count = 1 if size is None else int(np.prod(size))
    out = np.empty(count)
    filled = 0
    while filled < count:
        need = count - filled
        # acceptance rate is pi/4; ask for a few extra pairs
        pairs = max(4, int(need / 2 / 0.78) + 4)
        uv = 2.0 * uniform01(stream, (pairs, 2)) - 1.0
        s = uv[:, 0] ** 2 + uv[:, 1] ** 2
        ok = (s > 0.0) & (s < 1.0)
        uv, s = uv[ok], s[ok]
        factor = np.sqrt(-2.0 * np.log(s) / s)
        vals = (uv * factor[:, None]).ravel()
        take = min(need, vals.size)
        out[filled:filled + take] = vals[:take]
        filled += take
    if size is None:
        return float(out[0])
    return out.reshape(size)


def sample_symmetric_weibull(stream: RngStream, r: float, size=None):
    """Symmetric variates with ``P(|Y| >= t) = exp(-t**r)``.

    The magnitude is ``(-ln U) ** (1/r)`` and the sign comes from an
    independent fair coin.  Not normalized: ``E Y**2 = Gamma(1 + 2/r)``.
    """
    if not r > 0:
        raise ValueError(f"Weibull shape must be positive, got {r}")
    count = 1 if size is None else int(np.prod(size))
    mag = (-np.log(_open_uniform(stream, count))) ** (1.0 / r)
    signs = np.where(uniform01(stream, count) < 0.5, -1.0, 1.0)
    out = mag * signs
    if size is None:
        return float(out[0])
    return out.reshape(size)


def weibull_variance(r: float) -> float:
    """Second moment ``Gamma(1 + 2/r)`` of the unnormalized symmetric Weibull."""
    if not r > 0:
        raise ValueError(f"Weibull shape must be positive, got {r}")
    return math.gamma(1.0 + 2.0 / r)


def sample_rademacher(stream: RngStream, size=None):
    count = 1 if size is None else int(np.prod(size))
    out = np.where(uniform01(stream, count) < 0.5, -1.0, 1.0)
    if size is None:
        return float(out[0])
    return out.reshape(size)


def sample_exponential(stream: RngStream, rate: float = 1.0, size=None):
    """Exponential variates with mean ``1/rate`` by inversion."""
    if not rate > 0:
        raise ValueError(f"rate must be positive, got {rate}")
    count = 1 if size is None else int(np.prod(size))
    out = -np.log(_open_uniform(stream, count)) / rate
    if size is None:
        return float(out[0])
    return out.reshape(size)


def sample_symmetric_exponential(stream: RngStream, size=None):
    """Symmetric exponential (Laplace) scaled to variance one."""
    return sample_symmetric_weibull(stream, 1.0, size) / math.sqrt(2.0)


def sample_gamma(stream: RngStream, shape: float, size=None):
    """Gamma(shape, 1) variates; delegated to numpy's generator."""
    if not shape > 0:
        raise ValueError(f"gamma shape must be positive, got {shape}")
    return stream.generator.standard_gamma(shape, size)
