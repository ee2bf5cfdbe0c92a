"""Concrete statistic families: means, V/U-statistics, the smoothed
two-sample ranking statistic, rank-weighted L-statistics, K-means losses
and the ridge-regression error functional.

Every operation is a pure function of its arguments.  Functions accept a
Configuration, an (n, d) array, or a plain sequence (treated as d=1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product
from typing import Callable, Mapping, Union

import numpy as np

from .core import Domain, Statistic, as_points, box, unit_interval

__all__ = [
    "Kernel",
    "WeightFunction",
    "LossFunction",
    "RidgeProblem",
    "sample_mean",
    "v_statistic",
    "u_statistic",
    "smoothed_auc",
    "l_statistic",
    "f_zeta",
    "kmeans_loss",
    "ridge_solution",
    "ridge_error",
    "product_kernel",
    "f_zeta_weight",
    "constant_weight",
    "ramp_loss",
    "indicator_loss",
    "mean_statistic",
    "v_stat_statistic",
    "u_stat_statistic",
    "auc_statistic",
    "lstat_statistic",
    "ridge_error_statistic",
    "probe_kernel_lipschitz",
    "probe_weight_function",
    "probe_loss_function",
]


@dataclass(frozen=True)
class Kernel:
    """An m-ary kernel on U^m with certified Lipschitz and range constants.

    ``evaluator`` takes m arguments, each shaped (..., d), and returns a
    (...)-shaped array (numpy broadcasting), so tuple enumeration can be
    batched.  ``lipschitz_L`` bounds the change under moving one argument
    (per unit Euclidean distance); ``range_B`` bounds the change itself.
    """

    m: int
    evaluator: Callable
    lipschitz_L: float
    range_B: float
    label: str = ""

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("kernel arity must be >= 1")
        if self.lipschitz_L < 0 or self.range_B < 0:
            raise ValueError("kernel constants must be nonnegative")


@dataclass(frozen=True)
class WeightFunction:
    """Rank weight F: [0,1] -> R with certified sup and Lipschitz norms."""

    evaluator: Callable
    sup_norm: float
    lip_norm: float
    label: str = ""

    def __call__(self, t):
        return self.evaluator(t)


@dataclass(frozen=True)
class LossFunction:
    """Pairwise loss l: R -> [0,1]; ``below_indicator`` certifies l <= 1_(0,inf)."""

    evaluator: Callable
    lipschitz_L: float
    below_indicator: bool = False
    label: str = ""

    def __call__(self, t):
        return self.evaluator(t)


@dataclass(frozen=True)
class RidgeProblem:
    """Regularized least squares on rows (z, y) with |z| in the unit ball."""

    lam: float
    d: int

    def __post_init__(self):
        if not (0.0 < self.lam < 1.0):
            raise ValueError(f"regularization weight must lie in (0, 1), got {self.lam}")
        if self.d < 1:
            raise ValueError("feature dimension must be >= 1")


KernelSpec = Union[Kernel, Mapping[tuple, Kernel]]


def _scalar_column(x, op: str) -> np.ndarray:
    pts = as_points(x)
    if pts.shape[1] != 1:
        raise ValueError(f"{op} requires d=1 configurations, got d={pts.shape[1]}")
    return pts[:, 0]


def sample_mean(x) -> float:
    """Arithmetic mean of a scalar configuration."""
    return float(np.mean(_scalar_column(x, "sample_mean")))


def _shared_kernel(kernels: KernelSpec) -> Kernel | None:
    return kernels if isinstance(kernels, Kernel) else None


def _kernel_arity(kernels: KernelSpec) -> int:
    k = _shared_kernel(kernels)
    if k is not None:
        return k.m
    arities = {kk.m for kk in kernels.values()}
    if len(arities) != 1:
        raise ValueError(f"all kernels must share one arity, got {sorted(arities)}")
    return arities.pop()


def _check_arity(m: int, n: int) -> None:
    if m > n:
        raise ValueError(f"kernel arity m={m} exceeds sample size n={n}")


def v_statistic(kernels: KernelSpec, x) -> float:
    """V-statistic: n^-m average of the kernel over all ordered index tuples.

    A single Kernel is accepted as shorthand for a family that is constant
    in the multi-index; a mapping from index tuples to kernels supports
    per-index families such as two-sample layouts.
    """
    pts = as_points(x)
    n = pts.shape[0]
    m = _kernel_arity(kernels)
    _check_arity(m, n)
    shared = _shared_kernel(kernels)
    if shared is not None:
        idx = np.stack(np.meshgrid(*([np.arange(n)] * m), indexing="ij")).reshape(m, -1)
        vals = shared.evaluator(*(pts[idx[i]] for i in range(m)))
        return float(np.sum(vals) / n**m)
    total = 0.0
    for j in product(range(n), repeat=m):
        total += float(kernels[j].evaluator(*(pts[i] for i in j)))
    return total / n**m


def u_statistic(kernels: KernelSpec, x) -> float:
    """U-statistic: average of the kernel over strictly increasing index tuples."""
    pts = as_points(x)
    n = pts.shape[0]
    m = _kernel_arity(kernels)
    _check_arity(m, n)
    shared = _shared_kernel(kernels)
    if shared is not None:
        idx = np.array(list(combinations(range(n), m))).T
        vals = shared.evaluator(*(pts[idx[i]] for i in range(m)))
        return float(np.sum(vals) / math.comb(n, m))
    total = 0.0
    for j in combinations(range(n), m):
        total += float(kernels[j].evaluator(*(pts[i] for i in j)))
    return total / math.comb(n, m)


def smoothed_auc(loss: LossFunction, x) -> float:
    """Two-block pairwise-loss average (4/n^2) sum_{i<=n/2, j>n/2} l(x_i - x_j).

    With the indicator loss this is the balanced Wilcoxon two-sample
    statistic; with a Lipschitz surrogate it is the smoothed variant.
    """
    s = _scalar_column(x, "smoothed_auc")
    n = s.shape[0]
    if n % 2 != 0:
        raise ValueError(f"smoothed_auc requires an even sample size, got n={n}")
    half = n // 2
    diffs = s[:half, None] - s[None, half:]
    return float(np.mean(np.asarray(loss.evaluator(diffs), dtype=float)))


def l_statistic(F: WeightFunction, x) -> float:
    """Rank-weighted average of order statistics: (1/n) sum F(i/n) x_(i).

    Values are sorted ascending with a stable sort, so tied values keep
    their input order (tied values contribute identically either way).
    """
    s = _scalar_column(x, "l_statistic")
    n = s.shape[0]
    order = np.sort(s, kind="stable")
    w = np.asarray(F.evaluator(np.arange(1, n + 1) / n), dtype=float)
    return float(order @ w / n)


def f_zeta(t, zeta: float):
    """Ramp-smoothed 75%-quantile trimming weight.

    Equals 4/3 on [0, 3/4 - zeta], ramps linearly down to 0 on
    (3/4 - zeta, 3/4 + zeta], and is 0 above.  At zeta=0 the ramp is empty
    and the weight drops from 4/3 to 0 immediately after t=3/4.
    """
    if not (0.0 <= zeta <= 0.25):
        raise ValueError(f"zeta must lie in [0, 1/4], got {zeta}")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or np.any(t_arr > 1.0):
        raise ValueError("weight argument must lie in [0, 1]")
    if zeta == 0.0:
        out = np.where(t_arr <= 0.75, 4.0 / 3.0, 0.0)
    else:
        ramp = -(2.0 / (3.0 * zeta)) * (t_arr - 0.75 - zeta)
        out = np.where(t_arr <= 0.75 - zeta, 4.0 / 3.0, np.where(t_arr <= 0.75 + zeta, ramp, 0.0))
    return out if isinstance(t, np.ndarray) else float(out)


def kmeans_loss(centers: np.ndarray, point: np.ndarray) -> float:
    """Squared Euclidean distance to the nearest center."""
    c = np.atleast_2d(np.asarray(centers, dtype=float))
    p = np.asarray(point, dtype=float)
    if p.shape != (c.shape[1],):
        raise ValueError(f"point shape {p.shape} does not match centers of dimension {c.shape[1]}")
    return float(np.min(np.sum((c - p) ** 2, axis=1)))


def _ridge_split(x, problem: RidgeProblem):
    pts = as_points(x)
    if pts.shape[1] != problem.d + 1:
        raise ValueError(
            f"ridge rows must be (z, y) of length {problem.d + 1}, got d={pts.shape[1]}"
        )
    return pts[:, : problem.d], pts[:, problem.d]


def ridge_solution(x, problem: RidgeProblem) -> np.ndarray:
    """Closed-form regularized least-squares weights.

    Solves ((1/n) sum z_i z_i^T + lam I) w = (1/n) sum y_i z_i; the matrix
    is positive definite for lam > 0, so the solve cannot fail.
    """
    Z, y = _ridge_split(x, problem)
    n = Z.shape[0]
    A = Z.T @ Z / n + problem.lam * np.eye(problem.d)
    b = Z.T @ y / n
    return np.linalg.solve(A, b)


def ridge_error(x, problem: RidgeProblem) -> float:
    """Mean squared residual of the closed-form ridge fit on its own sample."""
    Z, y = _ridge_split(x, problem)
    w = ridge_solution(x, problem)
    r = Z @ w - y
    return float(np.mean(r * r))


# ---------------------------------------------------------------------------
# Ready-made kernels, weights and losses

def product_kernel() -> Kernel:
    """kappa(a, b) = <a, b>; on the unit box both constants equal 1."""
    return Kernel(
        m=2,
        evaluator=lambda a, b: np.sum(np.asarray(a) * np.asarray(b), axis=-1),
        lipschitz_L=1.0,
        range_B=1.0,
        label="product",
    )


def f_zeta_weight(zeta: float) -> WeightFunction:
    """WeightFunction wrapper for f_zeta; the step weight (zeta=0) has an
    infinite Lipschitz norm."""
    if not (0.0 <= zeta <= 0.25):
        raise ValueError(f"zeta must lie in [0, 1/4], got {zeta}")
    lip = math.inf if zeta == 0.0 else 2.0 / (3.0 * zeta)
    return WeightFunction(
        evaluator=lambda t: f_zeta(t, zeta),
        sup_norm=4.0 / 3.0,
        lip_norm=lip,
        label=f"f_zeta({zeta})",
    )


def constant_weight(c: float = 1.0) -> WeightFunction:
    return WeightFunction(
        evaluator=lambda t: np.full_like(np.asarray(t, dtype=float), c),
        sup_norm=abs(c),
        lip_norm=0.0,
        label=f"const({c})",
    )


def ramp_loss(width: float = 1.0) -> LossFunction:
    """clamp(t/width, 0, 1); vanishes for t <= 0, so it sits below the
    indicator of the positive reals."""
    if width <= 0:
        raise ValueError("ramp width must be positive")
    return LossFunction(
        evaluator=lambda t: np.clip(np.asarray(t, dtype=float) / width, 0.0, 1.0),
        lipschitz_L=1.0 / width,
        below_indicator=True,
        label=f"ramp({width})",
    )


def indicator_loss() -> LossFunction:
    """Exact indicator of the positive reals (not Lipschitz)."""
    return LossFunction(
        evaluator=lambda t: (np.asarray(t, dtype=float) > 0).astype(float),
        lipschitz_L=math.inf,
        below_indicator=True,
        label="indicator",
    )


# ---------------------------------------------------------------------------
# Statistic builders used by the seminorm search, oracle and applications

def mean_statistic(n: int, domain: Domain | None = None) -> Statistic:
    dom = domain if domain is not None else unit_interval()
    if dom.d != 1:
        raise ValueError("mean_statistic requires a d=1 domain")
    return Statistic(lambda pts: float(np.mean(pts[:, 0])), dom, n, label="mean")


def v_stat_statistic(kernel: Kernel, n: int, domain: Domain) -> Statistic:
    _check_arity(kernel.m, n)
    return Statistic(
        lambda pts: v_statistic(kernel, pts), domain, n,
        label=f"vstat[{kernel.label},m={kernel.m}]",
    )


def u_stat_statistic(kernel: Kernel, n: int, domain: Domain) -> Statistic:
    _check_arity(kernel.m, n)
    return Statistic(
        lambda pts: u_statistic(kernel, pts), domain, n,
        label=f"ustat[{kernel.label},m={kernel.m}]",
    )


def auc_statistic(loss: LossFunction, n: int, domain: Domain | None = None) -> Statistic:
    if n % 2 != 0:
        raise ValueError(f"smoothed ranking statistic requires even n, got {n}")
    dom = domain if domain is not None else unit_interval()
    return Statistic(
        lambda pts: smoothed_auc(loss, pts), dom, n, label=f"auc[{loss.label}]"
    )


def lstat_statistic(F: WeightFunction, n: int, domain: Domain | None = None) -> Statistic:
    dom = domain if domain is not None else unit_interval()
    if dom.d != 1:
        raise ValueError("lstat_statistic requires a d=1 domain")
    return Statistic(lambda pts: l_statistic(F, pts), dom, n, label=f"lstat[{F.label}]")


def ridge_error_statistic(problem: RidgeProblem, n: int) -> Statistic:
    dom = box([-1.0] * (problem.d + 1), [1.0] * (problem.d + 1))
    return Statistic(
        lambda pts: ridge_error(pts, problem), dom, n,
        label=f"ridge_error[lam={problem.lam},d={problem.d}]",
    )


# ---------------------------------------------------------------------------
# Random spot checks of the certified constants

def probe_kernel_lipschitz(kernel: Kernel, domain: Domain, rng, probes: int = 200) -> float:
    """Largest observed one-argument difference quotient; should stay at or
    below kernel.lipschitz_L up to float noise."""
    gen = rng.generator()
    worst = 0.0
    for _ in range(probes):
        args = [domain.uniform(gen, 1)[0] for _ in range(kernel.m)]
        slot = int(gen.integers(kernel.m))
        alt = domain.uniform(gen, 1)[0]
        dist = float(np.linalg.norm(args[slot] - alt))
        if dist < 1e-9:
            continue
        base = float(kernel.evaluator(*args))
        moved = list(args)
        moved[slot] = alt
        ratio = abs(base - float(kernel.evaluator(*moved))) / dist
        worst = max(worst, ratio)
    return worst


def probe_weight_function(F: WeightFunction, rng, probes: int = 500) -> tuple[float, float]:
    """(max |F|, max difference quotient) over a grid plus random pairs."""
    gen = rng.generator()
    grid = np.linspace(0.0, 1.0, 101)
    sup = float(np.max(np.abs(np.asarray(F.evaluator(grid), dtype=float))))
    worst = 0.0
    for _ in range(probes):
        t, s = gen.uniform(0.0, 1.0, size=2)
        if abs(t - s) < 1e-9:
            continue
        quot = abs(float(F.evaluator(t)) - float(F.evaluator(s))) / abs(t - s)
        worst = max(worst, quot)
    return sup, worst


def probe_loss_function(loss: LossFunction, rng, probes: int = 500,
                        span: float = 3.0) -> tuple[float, float, bool]:
    """(range excess beyond [0,1], max difference quotient, below-indicator ok)."""
    gen = rng.generator()
    ts = gen.uniform(-span, span, size=probes)
    vals = np.asarray(loss.evaluator(ts), dtype=float)
    excess = float(max(np.max(vals - 1.0, initial=0.0), np.max(-vals, initial=0.0)))
    worst = 0.0
    for _ in range(probes):
        t, s = gen.uniform(-span, span, size=2)
        if abs(t - s) < 1e-9:
            continue
        quot = abs(float(loss.evaluator(t)) - float(loss.evaluator(s))) / abs(t - s)
        worst = max(worst, quot)
    below = bool(np.all(vals <= (ts > 0).astype(float) + 1e-12))
    return excess, worst, below
