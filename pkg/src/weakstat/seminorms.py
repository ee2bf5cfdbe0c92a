"""Partial difference operators and the four interaction seminorms.

Two routes are provided for every statistic:

* randomized empirical search (certified LOWER bounds: every candidate is a
  realized difference quotient, so the running maximum never exceeds the
  true supremum), and
* closed-form analytic bounds for the known families plus a
  finite-difference route for smooth statistics (certified UPPER bounds).

Reports carry a ``method`` tag so that bound certificates only ever consume
upper bounds.  The sandwich empirical <= analytic is the primary
correctness check of both routes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import SeededRng, Statistic, as_points, parallel_map
from .statistics import WeightFunction

__all__ = [
    "ANALYTIC_BOUND",
    "EMPIRICAL_SEARCH",
    "DERIVATIVE_BOUND",
    "SeminormReport",
    "BudgetError",
    "StepError",
    "partial_difference",
    "double_difference",
    "empirical_seminorms",
    "analytic_seminorms_ustat",
    "analytic_seminorms_auc",
    "analytic_seminorms_lstat",
    "derivative_seminorms",
]

ANALYTIC_BOUND = "analytic_bound"
EMPIRICAL_SEARCH = "empirical_search"
DERIVATIVE_BOUND = "derivative_bound"

# Pairs closer than this fraction of the box diameter are resampled before
# entering a difference quotient: tiny denominators turn float cancellation
# in the numerator into unbounded noise in the ratio.
PAIR_SEPARATION_FRACTION = 1e-2

_EXPLORE_FRACTION = 0.8
_RESTARTS = 8


class BudgetError(ValueError):
    """Raised when an evaluation budget is missing or exhausted."""


class StepError(ValueError):
    """Raised when a finite-difference stencil cannot fit inside the box."""


@dataclass(frozen=True)
class SeminormReport:
    """Values of the four seminorms with their provenance.

    ``m_lip`` and ``j_lip`` are the Lipschitz first- and (n-scaled)
    second-order interaction seminorms; ``m_plain`` and ``j_plain`` are the
    range-based counterparts.  ``method`` records whether the values are
    search lower bounds or certified upper bounds.
    """

    m_lip: float
    j_lip: float
    m_plain: float
    j_plain: float
    method: str
    search_evals: int = 0
    argmax_witness: Optional[tuple] = None

    def __post_init__(self):
        for name in ("m_lip", "j_lip", "m_plain", "j_plain"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.method not in (ANALYTIC_BOUND, EMPIRICAL_SEARCH, DERIVATIVE_BOUND):
            raise ValueError(f"unknown seminorm method {self.method!r}")

    def to_dict(self) -> dict:
        return {
            "m_lip": self.m_lip,
            "j_lip": self.j_lip,
            "m_plain": self.m_plain,
            "j_plain": self.j_plain,
            "method": self.method,
            "search_evals": self.search_evals,
        }


def _row(point) -> np.ndarray:
    return np.atleast_1d(np.asarray(point, dtype=float))


def partial_difference(f: Statistic, x, k: int, y, y_prime) -> float:
    """f with row k set to y, minus f with row k set to y_prime."""
    pts = as_points(x)
    n = pts.shape[0]
    if not 0 <= k < n:
        raise IndexError(f"coordinate index k={k} out of range for n={n}")
    a = pts.copy()
    a[k] = _row(y)
    b = pts.copy()
    b[k] = _row(y_prime)
    return f.value(a) - f.value(b)


def double_difference(f: Statistic, x, k: int, l: int, y, y_prime, z, z_prime) -> float:
    """Second-order difference: swap row l between z and z_prime inside the
    k-th partial difference.  Expands to the symmetric four-term sum."""
    pts = as_points(x)
    n = pts.shape[0]
    if k == l:
        raise IndexError(f"second-order difference needs distinct indices, got k=l={k}")
    for idx in (k, l):
        if not 0 <= idx < n:
            raise IndexError(f"coordinate index {idx} out of range for n={n}")
    y, y_prime, z, z_prime = _row(y), _row(y_prime), _row(z), _row(z_prime)
    vals = []
    for rk, rl in ((y, z), (y_prime, z), (y, z_prime), (y_prime, z_prime)):
        a = pts.copy()
        a[k] = rk
        a[l] = rl
        vals.append(f.value(a))
    # grouped so the result is bit-identical under exchanging the two
    # difference operators (the middle terms just swap places)
    return (vals[0] + vals[3]) - (vals[1] + vals[2])


def _sample_pair(gen: np.random.Generator, lower, upper, floor: float,
                 max_tries: int = 64) -> tuple[np.ndarray, np.ndarray]:
    y = gen.uniform(lower, upper)
    for _ in range(max_tries):
        yp = gen.uniform(lower, upper)
        if float(np.linalg.norm(y - yp)) >= floor:
            return y, yp
    # Boxes wider than the floor always admit a separated second point.
    yp = np.where(y - lower >= upper - y, lower, upper)
    return y, yp


def _perturb(gen, value, lower, upper, sigma):
    return np.clip(value + gen.normal(0.0, sigma, size=value.shape), lower, upper)


def _first_order_search(f: Statistic, evals: int, rng: SeededRng, floor: float,
                        explore_frac: float):
    """Shared probe stream scoring both the ratio (m_lip) and the absolute
    difference (m_plain).  Sharing guarantees m_plain <= m_lip * diameter
    pointwise, since every absolute candidate also enters the ratio race."""
    gen = rng.generator()
    dom = f.domain
    lo, hi, widths = dom.lower, dom.upper, dom.widths
    n = f.n
    probes = max(evals // 2, 1)
    explore = max(int(round(probes * explore_frac)), 1)
    refine = max(probes - explore, 0)

    best_ratio, best_abs = 0.0, 0.0
    wit_ratio = wit_abs = None
    used = 0
    value = f.value

    def consider(k, x, y, yp):
        nonlocal best_ratio, best_abs, wit_ratio, wit_abs, used
        dist = float(np.linalg.norm(y - yp))
        if dist < floor:
            return
        a = x.copy()
        a[k] = y
        b = x.copy()
        b[k] = yp
        diff = abs(value(a) - value(b))
        used += 2
        if diff / dist > best_ratio:
            best_ratio = diff / dist
            wit_ratio = (k, x, y, yp)
        if diff > best_abs:
            best_abs = diff
            wit_abs = (k, x, y, yp)

    # exploration draws are batched; pairs under the separation floor are
    # redrawn individually (rare for floors well below the box widths)
    xs = gen.uniform(lo, hi, size=(explore, n, dom.d))
    ys = gen.uniform(lo, hi, size=(explore, dom.d))
    yps = gen.uniform(lo, hi, size=(explore, dom.d))
    for t in range(explore):
        y, yp = ys[t], yps[t]
        if float(np.linalg.norm(y - yp)) < floor:
            y, yp = _sample_pair(gen, lo, hi, floor)
        consider(t % n, xs[t], y, yp)

    for t in range(refine):
        wit = wit_ratio if t % 2 == 0 else wit_abs
        if wit is None:
            continue
        k, x, y, yp = wit
        frac = 0.25 * (1.0 - t / max(refine, 1)) + 0.01
        sigma = frac * widths
        xc = np.clip(x + gen.normal(0.0, 1.0, size=x.shape) * sigma, lo, hi)
        yc = _perturb(gen, y, lo, hi, sigma)
        ypc = _perturb(gen, yp, lo, hi, sigma)
        consider(k, xc, yc, ypc)

    return best_ratio, best_abs, wit_ratio, used


def _second_order_search(f: Statistic, evals: int, rng: SeededRng, floor: float,
                         explore_frac: float):
    """As the first-order search, for n * |double difference| / dist and
    n * |double difference|."""
    gen = rng.generator()
    dom = f.domain
    lo, hi, widths = dom.lower, dom.upper, dom.widths
    n = f.n
    if n < 2:
        return 0.0, 0.0, None, 0
    probes = max(evals // 4, 1)
    explore = max(int(round(probes * explore_frac)), 1)
    refine = max(probes - explore, 0)

    best_ratio, best_abs = 0.0, 0.0
    wit_ratio = wit_abs = None
    used = 0
    value = f.value

    def consider(k, l, x, y, yp, z, zp):
        nonlocal best_ratio, best_abs, wit_ratio, wit_abs, used
        dist = float(np.linalg.norm(y - yp))
        if dist < floor:
            return
        vals = []
        for rk, rl in ((y, z), (yp, z), (y, zp), (yp, zp)):
            a = x.copy()
            a[k] = rk
            a[l] = rl
            vals.append(value(a))
        used += 4
        dd = n * abs((vals[0] + vals[3]) - (vals[1] + vals[2]))
        if dd / dist > best_ratio:
            best_ratio = dd / dist
            wit_ratio = (k, l, x, y, yp, z, zp)
        if dd > best_abs:
            best_abs = dd
            wit_abs = (k, l, x, y, yp, z, zp)

    xs = gen.uniform(lo, hi, size=(explore, n, dom.d))
    ys = gen.uniform(lo, hi, size=(explore, dom.d))
    yps = gen.uniform(lo, hi, size=(explore, dom.d))
    zs = gen.uniform(lo, hi, size=(explore, dom.d))
    zps = gen.uniform(lo, hi, size=(explore, dom.d))
    ks = gen.integers(n, size=explore)
    ls = gen.integers(n - 1, size=explore)
    for t in range(explore):
        k = int(ks[t])
        l = int(ls[t])
        if l >= k:
            l += 1
        y, yp = ys[t], yps[t]
        if float(np.linalg.norm(y - yp)) < floor:
            y, yp = _sample_pair(gen, lo, hi, floor)
        consider(k, l, xs[t], y, yp, zs[t], zps[t])

    for t in range(refine):
        wit = wit_ratio if t % 2 == 0 else wit_abs
        if wit is None:
            continue
        k, l, x, y, yp, z, zp = wit
        frac = 0.25 * (1.0 - t / max(refine, 1)) + 0.01
        sigma = frac * widths
        xc = np.clip(x + gen.normal(0.0, 1.0, size=x.shape) * sigma, lo, hi)
        consider(k, l, xc, _perturb(gen, y, lo, hi, sigma), _perturb(gen, yp, lo, hi, sigma),
                 _perturb(gen, z, lo, hi, sigma), _perturb(gen, zp, lo, hi, sigma))

    return best_ratio, best_abs, wit_ratio, used


def empirical_seminorms(f: Statistic, budget: int, rng: SeededRng, *,
                        min_separation: float | None = None,
                        explore_frac: float = _EXPLORE_FRACTION,
                        restarts: int = _RESTARTS) -> SeminormReport:
    """Randomized maximization of the four seminorm objectives.

    ``budget`` counts statistic evaluations and is split half/half between
    the first- and second-order searches (each of which serves its ratio
    and range objective from shared probes).  The schedule is 80% uniform
    exploration, 20% Gaussian refinement around the incumbent with a
    shrinking radius, repeated over independent restart streams and reduced
    by max.  Returned values are lower bounds of the true seminorms.
    """
    if budget < 1:
        raise BudgetError("empirical_seminorms needs a positive evaluation budget")
    floor = (PAIR_SEPARATION_FRACTION * f.domain.diameter
             if min_separation is None else float(min_separation))
    restarts = max(1, int(restarts))
    per_first = max(budget // 2 // restarts, 2)
    per_second = max(budget // 2 // restarts, 4)

    def run_first(r: int):
        return _first_order_search(f, per_first, rng.split(r), floor, explore_frac)

    def run_second(r: int):
        return _second_order_search(f, per_second, rng.split(restarts + r), floor, explore_frac)

    first = parallel_map(run_first, range(restarts))
    second = parallel_map(run_second, range(restarts))

    m_lip, m_plain, witness, evals = 0.0, 0.0, None, 0
    for ratio, absval, wit, used in first:
        evals += used
        if ratio > m_lip:
            m_lip, witness = ratio, wit
        m_plain = max(m_plain, absval)
    j_lip, j_plain = 0.0, 0.0
    for ratio, absval, _, used in second:
        evals += used
        j_lip = max(j_lip, ratio)
        j_plain = max(j_plain, absval)

    return SeminormReport(
        m_lip=m_lip, j_lip=j_lip, m_plain=m_plain, j_plain=j_plain,
        method=EMPIRICAL_SEARCH, search_evals=evals, argmax_witness=witness,
    )


def analytic_seminorms_ustat(L: float, B: float, m: int, n: int,
                             kind: str = "U") -> SeminormReport:
    """Seminorm bounds for U- and V-statistics built from kernels with
    Lipschitz constant at most L and range constant at most B: the statistic
    inherits the worst kernel's constants scaled by m/n (first order) and
    m^2/n (second order)."""
    if kind not in ("U", "V"):
        raise ValueError(f"kind must be 'U' or 'V', got {kind!r}")
    if m > n:
        raise ValueError(f"kernel arity m={m} exceeds sample size n={n}")
    if L < 0 or B < 0:
        raise ValueError("kernel constants must be nonnegative")
    return SeminormReport(
        m_lip=L * m / n,
        j_lip=L * m * m / n,
        m_plain=B * m / n,
        j_plain=B * m * m / n,
        method=ANALYTIC_BOUND,
    )


def analytic_seminorms_auc(L: float, n: int) -> SeminormReport:
    """Seminorm bounds for the smoothed two-sample ranking statistic with an
    L-Lipschitz, [0,1]-valued loss: 2L/n, 8L/n, and range bounds 2/n, 8/n."""
    if n % 2 != 0:
        raise ValueError(f"the two-sample statistic requires even n, got {n}")
    if L < 0:
        raise ValueError("Lipschitz constant must be nonnegative")
    return SeminormReport(
        m_lip=2.0 * L / n,
        j_lip=8.0 * L / n,
        m_plain=2.0 / n,
        # range analog of the second-order bound: the four-term sum of
        # [0,1]-valued losses is at most 2 in absolute value, repeated over
        # the n/2 opposite-block indices and scaled by 4n/n^2.
        j_plain=8.0 / n,
        method=ANALYTIC_BOUND,
    )


def analytic_seminorms_lstat(F: WeightFunction, diameter: float, n: int) -> SeminormReport:
    """Seminorm bounds for the rank-weighted L-statistic on a bounded
    interval of the given diameter."""
    if diameter < 0:
        raise ValueError("diameter must be nonnegative")
    return SeminormReport(
        m_lip=F.sup_norm / n,
        j_lip=diameter * F.lip_norm / n if F.lip_norm != math.inf else math.inf,
        m_plain=diameter * F.sup_norm / n,
        # second-order differences are bounded by lip_norm * diameter / n^2,
        # so the n-scaled range seminorm shares the j_lip value.
        j_plain=diameter * F.lip_norm / n if F.lip_norm != math.inf else math.inf,
        method=ANALYTIC_BOUND,
    )


def _interior_probe(gen, dom, n, margin):
    lo = dom.lower + margin
    hi = dom.upper - margin
    if np.any(lo >= hi):
        raise StepError(
            f"finite-difference step {margin} leaves no interior in a box of widths {dom.widths}"
        )
    return gen.uniform(lo, hi, size=(n, dom.d))


def derivative_seminorms(f: Statistic, diameter: float, probes: int, rng: SeededRng,
                         step: float | None = None, step2: float | None = None,
                         pairs_per_probe: int = 4) -> SeminormReport:
    """Seminorm estimates for smooth statistics via central finite differences.

    At each of ``probes`` random interior points the full per-coordinate
    gradient blocks are evaluated (all k) along with mixed second-derivative
    blocks for ``pairs_per_probe`` sampled index pairs (k, l).  The report
    carries max_k |grad_k f| as m_lip and n * diameter * max |d2_kl f|_op as
    j_lip; the range values use the generic box bounds m_lip * diameter and
    j_lip * diameter.  The caller asserts smoothness on a neighborhood of
    the box.
    """
    if probes < 1:
        raise BudgetError("derivative_seminorms needs at least one probe point")
    dom = f.domain
    d = dom.d
    n = f.n
    h1 = step if step is not None else 1e-4 * diameter
    h2 = step2 if step2 is not None else 1e-3 * diameter
    if h1 <= 0 or h2 <= 0:
        raise StepError("finite-difference steps must be positive")
    gen = rng.generator()
    margin = max(h1, 2 * h2)

    grad_max = 0.0
    hess_max = 0.0
    evals = 0
    for _ in range(probes):
        x = _interior_probe(gen, dom, n, margin)
        for k in range(n):
            g = np.empty(d)
            for i in range(d):
                a = x.copy()
                a[k, i] += h1
                b = x.copy()
                b[k, i] -= h1
                g[i] = (f.value(a) - f.value(b)) / (2 * h1)
                evals += 2
            grad_max = max(grad_max, float(np.linalg.norm(g)))
        for _ in range(pairs_per_probe):
            if n < 2:
                break
            k = int(gen.integers(n))
            l = int(gen.integers(n - 1))
            if l >= k:
                l += 1
            H = np.empty((d, d))
            for i in range(d):
                for j in range(d):
                    acc = 0.0
                    for sk, sl, sign in ((h2, h2, 1.0), (h2, -h2, -1.0),
                                         (-h2, h2, -1.0), (-h2, -h2, 1.0)):
                        a = x.copy()
                        a[k, i] += sk
                        a[l, j] += sl
                        acc += sign * f.value(a)
                        evals += 1
                    H[i, j] = acc / (4 * h2 * h2)
            hess_max = max(hess_max, float(np.linalg.norm(H, 2)))

    m_lip = grad_max
    j_lip = n * diameter * hess_max
    return SeminormReport(
        m_lip=m_lip, j_lip=j_lip,
        m_plain=m_lip * diameter, j_plain=j_lip * diameter,
        method=DERIVATIVE_BOUND, search_evals=evals,
    )
