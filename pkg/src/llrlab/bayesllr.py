"""Bayes decision machinery: log-likelihood-ratio scoring, the optimal
threshold from priors and costs, and the decision rule itself.

Scores are in nats.  Class labels are the integers 1 and 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import smallmat
from .errors import ContractError
from .gaussmodel import GaussianParams

CLASS1 = 1
CLASS2 = 2

#: Symmetric 0-1 loss: no cost for correct decisions, unit cost for errors.
ZERO_ONE_COSTS = ((0.0, 1.0), (1.0, 0.0))


@dataclass(frozen=True, eq=False)
class TwoClassProblem:
    """A fully specified two-class Gaussian classification problem.

    costs[i][j] is the price of deciding class j+1 when class i+1 is true;
    misclassification must cost more than a correct decision on each row.
    """

    class1: GaussianParams
    class2: GaussianParams
    prior1: float = 0.5
    prior2: float = 0.5
    costs: tuple = ZERO_ONE_COSTS

    def __post_init__(self):
        if self.class1.dim != self.class2.dim:
            raise ContractError(
                f"class models disagree in dimension: {self.class1.dim} vs {self.class2.dim}"
            )
        p1, p2 = float(self.prior1), float(self.prior2)
        if not (0.0 < p1 < 1.0 and 0.0 < p2 < 1.0):
            raise ContractError(f"priors must lie strictly in (0, 1), got {p1}, {p2}")
        if abs(p1 + p2 - 1.0) > 1e-12:
            raise ContractError(f"priors must sum to 1, got {p1} + {p2} = {p1 + p2}")
        c = np.asarray(self.costs, dtype=float)
        if c.shape != (2, 2) or not np.all(np.isfinite(c)):
            raise ContractError("costs must be a finite 2x2 matrix")
        if not (c[0, 1] > c[0, 0] and c[1, 0] > c[1, 1]):
            raise ContractError(
                "misclassification costs must exceed correct-decision costs "
                f"(need c12 > c11 and c21 > c22, got {c.tolist()})"
            )
        object.__setattr__(self, "prior1", p1)
        object.__setattr__(self, "prior2", p2)
        object.__setattr__(self, "costs", tuple(map(tuple, c.tolist())))

    @property
    def dim(self) -> int:
        return self.class1.dim


def llr_scores(x, problem: TwoClassProblem) -> np.ndarray:
    """Log-likelihood-ratio scores for a batch of points (rows of x).

    value = -1/2 [ (x-mu1)' S1^-1 (x-mu1) - (x-mu2)' S2^-1 (x-mu2) ]
            - 1/2 ln(|S1| / |S2|)
    """
    X = np.atleast_2d(np.asarray(x, dtype=float))
    if X.shape[1] != problem.dim:
        raise ContractError(f"points have dimension {X.shape[1]}, problem has {problem.dim}")
    c1, c2 = problem.class1, problem.class2
    d1 = X - c1.mu
    d2 = X - c2.mu
    q1 = np.einsum("ij,jk,ik->i", d1, c1.sigma_inv, d1)
    q2 = np.einsum("ij,jk,ik->i", d2, c2.sigma_inv, d2)
    return -0.5 * (q1 - q2) - 0.5 * (c1.log_det - c2.log_det)


def llr_score(x, problem: TwoClassProblem) -> float:
    """Log-likelihood-ratio score of a single point, in nats."""
    v = smallmat.as_vector(x, "x")
    return float(llr_scores(v[None, :], problem)[0])


def bayes_threshold(problem: TwoClassProblem) -> float:
    """Risk-minimizing decision threshold from priors and costs.

    th = ln[ P2 (c22 - c21) / (P1 (c11 - c12)) ]; with equal priors and
    symmetric 0-1 costs this is 0.
    """
    c = np.asarray(problem.costs, dtype=float)
    if c[0, 0] == c[0, 1] or c[1, 1] == c[1, 0]:
        raise ContractError("degenerate costs: c11 == c12 or c21 == c22 leaves no threshold")
    num = problem.prior2 * (c[1, 1] - c[1, 0])
    den = problem.prior1 * (c[0, 0] - c[0, 1])
    return float(np.log(num / den))


def classify(score: float, th: float) -> int:
    """Decide class 1 when score > th; ties go to class 2."""
    return CLASS1 if score > th else CLASS2


def classify_scores(scores, th: float) -> np.ndarray:
    """Vectorized decision rule with the same tie convention as classify."""
    s = np.asarray(scores, dtype=float)
    return np.where(s > th, CLASS1, CLASS2)
