"""Assembly of bound certificates: the symmetrization inequality for weakly
interactive statistics, the high-probability uniform bound, the ranking
surrogate certificate, and the bounded-difference tail."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .complexity import ComplexityEstimate
from .seminorms import ANALYTIC_BOUND, DERIVATIVE_BOUND, EMPIRICAL_SEARCH, SeminormReport

__all__ = [
    "POP_MINUS_EMP",
    "EMP_MINUS_POP",
    "SQRT_2PI",
    "BoundCertificate",
    "CertifiedBoundError",
    "InapplicableCertificateError",
    "symmetrization_bound",
    "uniform_bound",
    "auc_certificate",
    "mcdiarmid_tail",
]

POP_MINUS_EMP = "pop_minus_emp"
EMP_MINUS_POP = "emp_minus_pop"

SQRT_2PI = math.sqrt(2.0 * math.pi)

_UPPER_BOUND_METHODS = (ANALYTIC_BOUND, DERIVATIVE_BOUND)


class CertifiedBoundError(ValueError):
    """Raised when search lower bounds are offered where a certificate needs
    certified upper bounds."""


class InapplicableCertificateError(ValueError):
    """Raised when a certificate's preconditions on the loss are not met."""


@dataclass(frozen=True)
class BoundCertificate:
    """Fully assembled right-hand side of a uniform deviation bound.

    ``total = symmetrization_term + tail_term``; the tail term is zero for
    the in-expectation certificate.  ``g_effective`` is the complexity value
    actually used (the estimate inflated by ``se_z`` standard errors to
    absorb Monte-Carlo error).
    """

    symmetrization_term: float
    tail_term: float
    delta: float
    total: float
    seminorms: SeminormReport
    complexity: ComplexityEstimate
    n: int
    direction: str = POP_MINUS_EMP
    g_effective: float = 0.0
    se_z: float = 0.0

    def __post_init__(self):
        if self.symmetrization_term < 0 or self.tail_term < 0:
            raise ValueError("certificate terms must be nonnegative")
        if abs(self.total - (self.symmetrization_term + self.tail_term)) > 1e-12 * max(
            1.0, abs(self.total)
        ):
            raise ValueError("total must equal the sum of its terms")
        if self.direction not in (POP_MINUS_EMP, EMP_MINUS_POP):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.seminorms.method not in _UPPER_BOUND_METHODS:
            raise CertifiedBoundError(
                "certificates require upper-bound seminorms "
                f"(analytic or derivative), got {self.seminorms.method!r}"
            )

    def to_dict(self) -> dict:
        return {
            "kind": "bound_certificate",
            "symmetrization_term": self.symmetrization_term,
            "tail_term": self.tail_term,
            "delta": self.delta,
            "total": self.total,
            "n": self.n,
            "direction": self.direction,
            "g_effective": self.g_effective,
            "se_z": self.se_z,
            "seminorms": self.seminorms.to_dict(),
            "complexity": self.complexity.to_dict(),
        }


def _require_upper_bound(report: SeminormReport) -> None:
    if report.method == EMPIRICAL_SEARCH:
        raise CertifiedBoundError(
            "search results are lower bounds and may not enter a certificate; "
            "use analytic or derivative seminorms"
        )


def symmetrization_bound(report: SeminormReport, g: ComplexityEstimate) -> float:
    """In-expectation bound sqrt(2 pi) (2 m_lip + j_lip) * g.mean.

    The complexity estimate is used as given; inflate it first (see
    ComplexityEstimate.inflated) when conservatism against Monte-Carlo error
    is wanted.
    """
    _require_upper_bound(report)
    return SQRT_2PI * (2.0 * report.m_lip + report.j_lip) * g.mean


def uniform_bound(report: SeminormReport, g: ComplexityEstimate, n: int, delta: float,
                  *, se_z: float = 3.0, direction: str = POP_MINUS_EMP) -> BoundCertificate:
    """High-probability uniform bound: symmetrization term plus the
    bounded-difference tail m_plain * sqrt(n ln(1/delta)), holding with
    probability at least 1 - delta."""
    _require_upper_bound(report)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    g_eff = g.mean + se_z * g.std_error
    sym = SQRT_2PI * (2.0 * report.m_lip + report.j_lip) * g_eff
    tail = report.m_plain * math.sqrt(n * math.log(1.0 / delta))
    return BoundCertificate(
        symmetrization_term=sym,
        tail_term=tail,
        delta=delta,
        total=sym + tail,
        seminorms=report,
        complexity=g,
        n=n,
        direction=direction,
        g_effective=g_eff,
        se_z=se_z,
    )


def auc_certificate(auc_emp: float, L: float, n: int, g: ComplexityEstimate,
                    delta: float, *, below_indicator: bool, se_z: float = 3.0) -> float:
    """High-probability lower bound on the population AUC of a ranker chosen
    by maximizing the smoothed surrogate.

    Requires a surrogate loss dominated by the indicator of the positive
    reals; the penalty combines the surrogate's symmetrization term with the
    two-sample tail.
    """
    if not below_indicator:
        raise InapplicableCertificateError(
            "the AUC certificate needs a surrogate loss below the indicator of (0, inf)"
        )
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if L < 0:
        raise ValueError("Lipschitz constant must be nonnegative")
    g_eff = g.mean + se_z * g.std_error
    return auc_emp - 12.0 * SQRT_2PI * L * g_eff / n - 2.0 * math.sqrt(math.log(1.0 / delta) / n)


def mcdiarmid_tail(coordinate_ranges, t: float) -> float:
    """Bounded-difference tail exp(-2 t^2 / sum_k c_k^2) for a statistic whose
    k-th coordinate response is bounded by c_k."""
    c = np.asarray(coordinate_ranges, dtype=float)
    if np.any(c < 0):
        raise ValueError("coordinate ranges must be nonnegative")
    if t < 0:
        raise ValueError("the tail is defined for t >= 0")
    denom = float(np.sum(c * c))
    if t == 0.0:
        return 1.0
    if denom == 0.0:
        return 0.0
    return math.exp(-2.0 * t * t / denom)
