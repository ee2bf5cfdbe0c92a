"""Domain types shared by every module: sample-space boxes, configurations,
statistics, finite function classes and deterministic seeded randomness.

All containers are immutable after construction and safe to share across
threads.  Indices are 0-based throughout the public API.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Domain",
    "Configuration",
    "Statistic",
    "RawSpace",
    "FunctionClass",
    "SeededRng",
    "DomainViolationError",
    "evaluate_class",
    "linear_class",
    "uniform_raw_space",
    "unit_interval",
    "symmetric_interval",
    "box",
    "worker_count",
    "parallel_map",
]

_MASK64 = (1 << 64) - 1


class DomainViolationError(ValueError):
    """A function-class member produced a point outside the domain box."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box in R^d.

    The box is the sample space of every statistic: each configuration row
    must lie inside it.  Ball-shaped spaces are represented by their
    bounding box with any projection handled inside class members.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _readonly(np.atleast_1d(self.lower))
        hi = _readonly(np.atleast_1d(self.upper))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError(f"bounds must be equal-length vectors, got {lo.shape} and {hi.shape}")
        if not np.all(lo <= hi):
            raise ValueError("lower bound exceeds upper bound in some coordinate")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ValueError("box bounds must be finite")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def diameter(self) -> float:
        """Euclidean diameter of the box."""
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, points: np.ndarray, atol: float = 1e-12) -> bool:
        p = np.atleast_2d(points)
        return bool(np.all(p >= self.lower - atol) and np.all(p <= self.upper + atol))

    def clip(self, points: np.ndarray) -> np.ndarray:
        return np.clip(points, self.lower, self.upper)

    def uniform(self, gen: np.random.Generator, n: int) -> np.ndarray:
        """Draw n points uniformly from the box, shape (n, d)."""
        return gen.uniform(self.lower, self.upper, size=(n, self.d))


def unit_interval() -> Domain:
    return Domain(np.array([0.0]), np.array([1.0]))


def symmetric_interval(radius: float = 1.0) -> Domain:
    return Domain(np.array([-radius]), np.array([radius]))


def box(lower: Sequence[float], upper: Sequence[float]) -> Domain:
    return Domain(np.asarray(lower, dtype=float), np.asarray(upper, dtype=float))


@dataclass(frozen=True)
class Configuration:
    """A point of the sample space U^n: an (n, d) array whose rows lie in U."""

    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        if p.ndim != 2 or p.shape[0] < 1:
            raise ValueError(f"points must be an (n, d) array with n >= 1, got shape {p.shape}")
        object.__setattr__(self, "points", _readonly(p))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @classmethod
    def in_domain(cls, points: np.ndarray, domain: Domain) -> "Configuration":
        cfg = cls(points)
        if cfg.d != domain.d:
            raise ValueError(f"point dimension {cfg.d} does not match domain dimension {domain.d}")
        if not domain.contains(cfg.points):
            raise DomainViolationError("configuration has rows outside the domain box")
        return cfg


def as_points(x) -> np.ndarray:
    """Accept a Configuration, array, or sequence and return an (n, d) float array."""
    p = x.points if isinstance(x, Configuration) else np.asarray(x, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    return p


@dataclass(frozen=True)
class Statistic:
    """An evaluable map f: U^n -> R with its domain metadata.

    ``evaluator`` receives the raw (n, d) points array and must be
    deterministic: the same array always yields the bit-identical float.
    """

    evaluator: Callable[[np.ndarray], float]
    domain: Domain
    n: int
    label: str = ""

    def value(self, points: np.ndarray) -> float:
        return float(self.evaluator(points))

    def __call__(self, x) -> float:
        return self.value(as_points(x))


@dataclass(frozen=True)
class RawSpace:
    """Opaque raw-data space X, carried as a sampler plus a label.

    ``sampler(gen, n)`` returns a sequence of n raw data (any datum type a
    class member can consume; an (n, p) array works, iterated by rows).
    """

    sampler: Callable[[np.random.Generator, int], Sequence]
    label: str = ""


@dataclass(frozen=True)
class FunctionClass:
    """A finite ordered class of maps h: raw datum -> point of the domain box."""

    members: tuple
    raw_space: RawSpace
    domain: Domain
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if len(self.members) < 1:
            raise ValueError("function class must have at least one member")

    @property
    def size(self) -> int:
        return len(self.members)


def evaluate_class(fclass: FunctionClass, raw_sample: Sequence) -> list[Configuration]:
    """Apply every member to the raw sample: entry j is (h_j(x_1), ..., h_j(x_n)).

    Raises DomainViolationError naming the member and coordinate if any
    output leaves the domain box.
    """
    dom = fclass.domain
    out = []
    for j, h in enumerate(fclass.members):
        rows = np.array([np.atleast_1d(np.asarray(h(r), dtype=float)) for r in raw_sample])
        if rows.ndim != 2 or rows.shape[1] != dom.d:
            raise ValueError(
                f"member {j} returned points of dimension {rows.shape[-1]}, expected {dom.d}"
            )
        low_bad = rows < dom.lower - 1e-12
        high_bad = rows > dom.upper + 1e-12
        if low_bad.any() or high_bad.any():
            i, c = np.argwhere(low_bad | high_bad)[0]
            raise DomainViolationError(
                f"member {j} maps datum {i} outside the domain box at coordinate {c}: "
                f"value {rows[i, c]!r} not in [{dom.lower[c]!r}, {dom.upper[c]!r}]"
            )
        out.append(Configuration(rows))
    return out


def uniform_raw_space(low: float = 0.0, high: float = 1.0) -> RawSpace:
    """Scalar raw data drawn iid uniform on [low, high]."""

    def sampler(gen: np.random.Generator, n: int):
        return gen.uniform(low, high, size=n)

    return RawSpace(sampler, label=f"uniform[{low},{high}]")


def linear_class(weights: Sequence[float], raw_space: RawSpace, domain: Domain,
                 label: str = "linear") -> FunctionClass:
    """Scalar linear members h_w(x) = w * x, one per weight."""

    def make(w: float):
        return lambda x: np.array([w * float(x)])

    members = tuple(make(float(w)) for w in weights)
    return FunctionClass(members, raw_space, domain, label=label)


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class SeededRng:
    """Counter-based random stream identified by (seed, stream_id).

    Streams are backed by the Philox bit generator keyed on the pair, so the
    same pair reproduces the same draws on every platform and distinct
    stream ids give statistically independent streams.  Derived streams from
    :meth:`split` mix the child index into the stream id with a SplitMix64
    finalizer, so per-replicate streams are indexed rather than sequential
    and safe to consume in any order.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def split(self, index: int) -> "SeededRng":
        """Child stream for task ``index``; deterministic in (seed, stream_id, index)."""
        child = _splitmix64((self.stream_id ^ _splitmix64(index & _MASK64)) & _MASK64)
        return SeededRng(self.seed, child)


def worker_count() -> int:
    """Worker cap from the WEAKSTAT_THREADS environment variable (default 1)."""
    raw = os.environ.get("WEAKSTAT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Map preserving order; uses threads only when WEAKSTAT_THREADS > 1.

    Tasks must be independent (indexed RNG streams, no shared mutable
    state), so results do not depend on the worker count.
    """
    items = list(items)
    w = worker_count()
    if w <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(w, len(items))) as ex:
        return list(ex.map(fn, items))
