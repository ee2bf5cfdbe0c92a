"""Brute-force and identity checks of the machinery behind the bounds, at
sample sizes where exhaustive subset enumeration is feasible.

The telescoping decomposition f(x) - f(x') = sum_k F_k(x, x') is evaluated
by enumerating all 2^k interpolating configurations per coordinate, with
compensated summation so that residuals stay at the 1e-9 scale the identity
checks assert.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
import numpy as np

from .core import FunctionClass, SeededRng, Statistic, as_points, evaluate_class
from .seminorms import BudgetError, partial_difference

__all__ = [
    "MAX_EXHAUSTIVE_N",
    "FkDecomposition",
    "VkVector",
    "CheckResult",
    "DeviationEstimate",
    "fk_decompose",
    "fk_term",
    "vk_vector",
    "jlip_lemma_check",
    "fk_difference_check",
    "sup_deviation_estimate",
    "lstat_condition_check",
]

MAX_EXHAUSTIVE_N = 14

IDENTITY_RTOL = 1e-9
INEQUALITY_SLACK = 1e-7


@dataclass(frozen=True)
class FkDecomposition:
    """Per-coordinate telescoping terms with the reconstruction residual."""

    n: int
    terms: tuple
    lhs: float
    residual: float

    def ok(self, rtol: float = IDENTITY_RTOL) -> bool:
        return self.residual <= rtol * max(1.0, abs(self.lhs))


@dataclass(frozen=True)
class VkVector:
    """Comparison vector in R^{2n}: two entries scaled by 2M at the active
    coordinate, the rest by J/sqrt(n)."""

    k: int
    values: np.ndarray


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one numerical inequality or identity check."""

    name: str
    passed: bool
    slack: float
    lhs: float
    rhs: float
    inputs_digest: str

    def to_record(self) -> dict:
        return {
            "check": self.name,
            "inputs": self.inputs_digest,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class DeviationEstimate:
    """Monte-Carlo estimate of the expected supremum deviation."""

    mean: float
    std_error: float
    replicates: int


def _digest(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(np.asarray(a, dtype=float)).tobytes())
    return h.hexdigest()[:16]


def _kahan_add(total: float, comp: float, value: float) -> tuple[float, float]:
    y = value - comp
    t = total + y
    comp = (t - total) - y
    return t, comp


class _SwapTable:
    """Caches f on configurations that take rows from x' on a bitmask and
    from x elsewhere."""

    def __init__(self, f: Statistic, x: np.ndarray, xp: np.ndarray):
        self.f = f
        self.x = x
        self.xp = xp
        self.n = x.shape[0]
        self._bits = np.arange(self.n)
        self._cache: dict[int, float] = {}

    def value(self, mask: int) -> float:
        v = self._cache.get(mask)
        if v is None:
            take = ((mask >> self._bits) & 1).astype(bool)
            pts = np.where(take[:, None], self.xp, self.x)
            v = self.f.value(pts)
            self._cache[mask] = v
        return v

    @property
    def evals(self) -> int:
        return len(self._cache)


def _check_pair(f: Statistic, x, xp) -> tuple[np.ndarray, np.ndarray]:
    a, b = as_points(x), as_points(xp)
    if a.shape != b.shape:
        raise ValueError(f"configuration shapes differ: {a.shape} vs {b.shape}")
    n = a.shape[0]
    if n > MAX_EXHAUSTIVE_N:
        raise BudgetError(
            f"exhaustive decomposition needs n <= {MAX_EXHAUSTIVE_N} "
            f"(cost grows as 2^n), got n={n}"
        )
    return a, b


def _fk_from_table(table: _SwapTable, k: int, tail_form: bool) -> float:
    """F_k via subset enumeration over the first k coordinates.

    ``tail_form`` switches the second summand from the full complement mask
    to the prefix-plus-tail mask; the two sums agree because complementation
    permutes the subsets of the prefix.
    """
    n = table.n
    full = (1 << n) - 1
    bit = 1 << k
    tail = (full >> k) << k  # bits k..n-1
    total, comp = 0.0, 0.0
    for A in range(1 << k):  # masks over bits 0..k-1
        second = (A | tail) if tail_form else (full ^ A)
        term = (
            table.value(A)
            - table.value(A | bit)
            + table.value(second & ~bit)
            - table.value(second)
        )
        total, comp = _kahan_add(total, comp, term)
    return total / float(2 ** (k + 1))


def fk_decompose(f: Statistic, x, xp, *, tail_form: bool = False) -> FkDecomposition:
    """Exact telescoping decomposition of f(x) - f(x') into n per-coordinate
    terms, each a 2^k-subset average of partial differences.

    The residual |f(x) - f(x') - sum terms| is zero in exact arithmetic for
    every f; it is reported so callers can assert float-level smallness.
    """
    a, b = _check_pair(f, x, xp)
    table = _SwapTable(f, a, b)
    n = table.n
    terms = []
    for k in range(n):
        terms.append(_fk_from_table(table, k, tail_form))
    lhs = table.value(0) - table.value((1 << n) - 1)
    total, comp = 0.0, 0.0
    for t in terms:
        total, comp = _kahan_add(total, comp, t)
    return FkDecomposition(n=n, terms=tuple(terms), lhs=lhs, residual=abs(lhs - total))


def fk_term(f: Statistic, x, xp, k: int, *, tail_form: bool = False) -> float:
    """Single telescoping term F_k(x, x')."""
    a, b = _check_pair(f, x, xp)
    if not 0 <= k < a.shape[0]:
        raise IndexError(f"coordinate index k={k} out of range for n={a.shape[0]}")
    return _fk_from_table(_SwapTable(f, a, b), k, tail_form)


def vk_vector(x, xp, k: int, m_lip: float, j_lip: float) -> VkVector:
    """Comparison vector whose Gaussian inner products dominate differences
    of the telescoping terms (scalar configurations only)."""
    a, b = as_points(x), as_points(xp)
    if a.shape[1] != 1 or b.shape[1] != 1:
        raise ValueError("the comparison vector is defined for d=1 configurations")
    n = a.shape[0]
    if not 0 <= k < n:
        raise IndexError(f"coordinate index k={k} out of range for n={n}")
    scale = j_lip / math.sqrt(n)
    v = np.empty(2 * n)
    v[:n] = scale * a[:, 0]
    v[n:] = scale * b[:, 0]
    v[k] = 2.0 * m_lip * a[k, 0]
    v[n + k] = 2.0 * m_lip * b[k, 0]
    return VkVector(k=k, values=v)


def jlip_lemma_check(f: Statistic, x, xp, k: int, a, b, j_lip_bound: float,
                     tol: float = INEQUALITY_SLACK) -> CheckResult:
    """Check that moving the off-k rows from x to x' changes the k-th partial
    difference by at most (J/n) * sum of off-k row distances."""
    pa, pb = as_points(x), as_points(xp)
    if pa.shape != pb.shape:
        raise ValueError("configurations must share a shape")
    n = pa.shape[0]
    lhs = partial_difference(f, pa, k, a, b) - partial_difference(f, pb, k, a, b)
    dists = np.linalg.norm(pa - pb, axis=1)
    dists[k] = 0.0
    rhs = j_lip_bound / n * float(np.sum(dists))
    return CheckResult(
        name="jlip_lemma",
        passed=lhs <= rhs + tol,
        slack=rhs + tol - lhs,
        lhs=lhs,
        rhs=rhs,
        inputs_digest=_digest(pa, pb, [k], np.atleast_1d(a), np.atleast_1d(b)),
    )


def fk_difference_check(f: Statistic, x, xp, y, yp, k: int, m_lip: float,
                        j_lip: float, tol: float = INEQUALITY_SLACK) -> CheckResult:
    """Check F_k(x, x') - F_k(y, y') <= |v^k(x, x') - v^k(y, y')| using the
    closed form of the expected absolute Gaussian inner product."""
    lhs = fk_term(f, x, xp, k) - fk_term(f, y, yp, k)
    diff = vk_vector(x, xp, k, m_lip, j_lip).values - vk_vector(y, yp, k, m_lip, j_lip).values
    rhs = float(np.linalg.norm(diff))
    return CheckResult(
        name="fk_difference",
        passed=lhs <= rhs + tol,
        slack=rhs + tol - lhs,
        lhs=lhs,
        rhs=rhs,
        inputs_digest=_digest(as_points(x), as_points(xp), as_points(y), as_points(yp), [k]),
    )


def sup_deviation_estimate(f: Statistic, fclass: FunctionClass, raw_sampler,
                           outer_reps: int, pop_reps: int,
                           rng: SeededRng) -> DeviationEstimate:
    """Monte-Carlo estimate of E sup_h [ E f(h(X')) - f(h(X)) ].

    Each outer replicate draws one sample X, estimates the population value
    per member from ``pop_reps`` fresh samples (shared across members), and
    records the supremum gap.  With outer_reps=1 the estimate is a single
    draw of the supremum deviation and the standard error is reported as 0.
    """
    if outer_reps < 1 or pop_reps < 1:
        raise ValueError("replicate counts must be positive")
    sampler = raw_sampler if raw_sampler is not None else fclass.raw_space.sampler
    n = f.n

    def one(r: int) -> float:
        stream = rng.split(r)
        gen_data = stream.split(0).generator()
        emp = np.array([f(c) for c in evaluate_class(fclass, sampler(gen_data, n))])
        gen_pop = stream.split(1).generator()
        pop = np.zeros(fclass.size)
        for _ in range(pop_reps):
            fresh = sampler(gen_pop, n)
            pop += np.array([f(c) for c in evaluate_class(fclass, fresh)])
        pop /= pop_reps
        return float(np.max(pop - emp))

    vals = np.array([one(r) for r in range(outer_reps)])
    se = float(vals.std(ddof=1) / math.sqrt(outer_reps)) if outer_reps > 1 else 0.0
    return DeviationEstimate(mean=float(vals.mean()), std_error=se, replicates=outer_reps)


def _interval_diam(a: float, b: float) -> float:
    return abs(a - b)


def _intersection_diam(a: float, b: float, c: float, d: float) -> float:
    lo = max(min(a, b), min(c, d))
    hi = min(max(a, b), max(c, d))
    return max(0.0, hi - lo)


def lstat_condition_check(F, x, k: int, l: int, y: float, yp: float,
                          z: float, zp: float,
                          tol: float = INEQUALITY_SLACK) -> tuple[CheckResult, CheckResult]:
    """Check the two response conditions of the rank-weighted L-statistic on
    scalar data: the first-order difference against sup-norm times the pair
    interval, and the second-order difference against the Lipschitz norm
    times the diameter of the interval intersection."""
    from .statistics import l_statistic

    pts = as_points(x)
    if pts.shape[1] != 1:
        raise ValueError("the L-statistic conditions are stated for scalar data")
    n = pts.shape[0]

    def lf(p: np.ndarray) -> float:
        return l_statistic(F, p)

    a = pts.copy()
    a[k, 0] = y
    b = pts.copy()
    b[k, 0] = yp
    d1 = lf(a) - lf(b)
    rhs1 = F.sup_norm * _interval_diam(y, yp) / n
    first = CheckResult(
        name="lstat_first_order",
        passed=abs(d1) <= rhs1 + tol,
        slack=rhs1 + tol - abs(d1),
        lhs=abs(d1),
        rhs=rhs1,
        inputs_digest=_digest(pts, [k, l], [y, yp, z, zp]),
    )

    vals = []
    for rk, rl in ((y, z), (yp, z), (y, zp), (yp, zp)):
        c = pts.copy()
        c[k, 0] = rk
        c[l, 0] = rl
        vals.append(lf(c))
    d2 = vals[0] - vals[1] - vals[2] + vals[3]
    rhs2 = F.lip_norm * _intersection_diam(z, zp, y, yp) / (n * n)
    second = CheckResult(
        name="lstat_second_order",
        passed=abs(d2) <= rhs2 + tol,
        slack=rhs2 + tol - abs(d2),
        lhs=abs(d2),
        rhs=rhs2,
        inputs_digest=_digest(pts, [k, l], [y, yp, z, zp]),
    )
    return first, second
