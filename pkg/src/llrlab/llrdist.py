"""Exact distribution of the log-likelihood-ratio score for 2-D problems.

For a two-feature problem the score is a quadratic in x2 at fixed x1,

    h(x1, x2) = A x2^2 + B(x1) x2 + C(x1),

with B linear and C quadratic in x1.  Solving for x2 makes (x2 -> h) a
one-to-two change of variables whose Jacobian is sqrt of the discriminant

    D(h, x1) = B(x1)^2 - 4 A (C(x1) - h),

so the joint density of (h, x1) is the branch sum  sum pdf(x1, x2_root) /
sqrt(D), supported on the conic region D >= 0.  Marginal densities f(h|class)
follow by adaptive quadrature over x1; the integrand's 1/sqrt singularity at
the support boundary is removed exactly by the substitution
x1 = center + halfwidth * sin(theta).

Degenerate geometries (equal x2^2 coefficients, or scores that depend on x1
alone) are dispatched to the linear single-branch and closed-form pushforward
paths instead.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from . import smallmat
from .bayesllr import CLASS1, CLASS2, TwoClassProblem
from .csvio import csv_text, fmt17
from .errors import ContractError, SingularityError
from .gaussmodel import GaussianParams, mvn_logpdf_array
from .rocauc import RocCurve


def _require_class(label: int) -> int:
    if label not in (CLASS1, CLASS2):
        raise ContractError(f"class label must be {CLASS1} or {CLASS2}, got {label!r}")
    return int(label)


def _class_params(problem: TwoClassProblem, label: int) -> GaussianParams:
    return problem.class1 if _require_class(label) == CLASS1 else problem.class2


# ---------------------------------------------------------------------------
# Score geometry: coefficients of h as a polynomial in (x1, x2)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoreGeometry:
    """Polynomial structure of the 2-D score.

    h(x1, x2) = a2 x2^2 + (b0 + b1 x1) x2 + (c0 + c1 x1 + c2 x1^2)

    ``kind`` is "quadratic" when a2 != 0, "linear" when a2 == 0 but the x2
    coefficient is not identically zero, and "x1_only" when the score does
    not involve x2 at all.
    """

    a2: float
    b0: float
    b1: float
    c0: float
    c1: float
    c2: float
    kind: str

    def b_at(self, x1):
        return self.b0 + self.b1 * np.asarray(x1, dtype=float)

    def c_at(self, x1):
        x1 = np.asarray(x1, dtype=float)
        return self.c0 + x1 * (self.c1 + x1 * self.c2)

    def discriminant_coeffs(self, h: float) -> tuple[float, float, float]:
        """(d2, d1, d0) of D(h, x1) = d2 x1^2 + d1 x1 + d0 at fixed h."""
        d2 = self.b1 * self.b1 - 4.0 * self.a2 * self.c2
        d1 = 2.0 * self.b0 * self.b1 - 4.0 * self.a2 * self.c1
        d0 = self.b0 * self.b0 - 4.0 * self.a2 * (self.c0 - h)
        return d2, d1, d0

    def discriminant_at(self, h, x1):
        h = np.asarray(h, dtype=float)
        x1 = np.asarray(x1, dtype=float)
        b = self.b_at(x1)
        return b * b - 4.0 * self.a2 * (self.c_at(x1) - h)


def score_geometry(problem: TwoClassProblem) -> ScoreGeometry:
    """Expand the score into its (x1, x2) polynomial coefficients."""
    if problem.dim != 2:
        raise ContractError(f"the analytic path handles 2-D problems only, got dim {problem.dim}")
    p1, p2 = problem.class1, problem.class2
    (a1, b1_), (_, c1_) = p1.sigma_inv
    (a2_, b2_), (_, c2_) = p2.sigma_inv
    m11, m12 = p1.mu
    m21, m22 = p2.mu

    a2 = -0.5 * (c1_ - c2_)
    b1 = -(b1_ - b2_)
    b0 = (b1_ * m11 + c1_ * m12) - (b2_ * m21 + c2_ * m22)
    c2 = -0.5 * (a1 - a2_)
    c1 = (a1 * m11 + b1_ * m12) - (a2_ * m21 + b2_ * m22)
    c0 = (
        -0.5 * (a1 * m11 * m11 + 2.0 * b1_ * m11 * m12 + c1_ * m12 * m12)
        + 0.5 * (a2_ * m21 * m21 + 2.0 * b2_ * m21 * m22 + c2_ * m22 * m22)
        - 0.5 * (p1.log_det - p2.log_det)
    )

    scale_a = max(abs(c1_), abs(c2_))
    scale_b = max(abs(b0), abs(b1), scale_a, 1e-300)
    if abs(a2) > 1e-12 * scale_a:
        kind = "quadratic"
    elif abs(b0) > 1e-12 * scale_b or abs(b1) > 1e-12 * scale_b:
        kind = "linear"
    else:
        kind = "x1_only"
    return ScoreGeometry(a2=a2, b0=b0, b1=b1, c0=c0, c1=c1, c2=c2, kind=kind)


# ---------------------------------------------------------------------------
# Branch inversion and the joint density of (h, x1)
# ---------------------------------------------------------------------------


def invert_llr(h: float, x1: float, problem: TwoClassProblem) -> list[float]:
    """All x2 with score(x1, x2) = h; length 0, 1, or 2 by discriminant sign."""
    geom = score_geometry(problem)
    h = float(h)
    x1 = float(x1)
    b = float(geom.b_at(x1))
    c_minus_h = float(geom.c_at(x1)) - h
    if geom.kind == "quadratic":
        disc = b * b - 4.0 * geom.a2 * c_minus_h
        if disc < 0.0:
            return []
        if disc == 0.0:
            return [-b / (2.0 * geom.a2)]
        sq = np.sqrt(disc)
        q = -0.5 * (b + np.copysign(sq, b if b != 0.0 else 1.0))
        roots = [q / geom.a2, c_minus_h / q]
        return sorted(float(r) for r in roots)
    if geom.kind == "linear":
        if b == 0.0:
            raise ContractError(
                "degenerate geometry: the score does not depend on x2 at this x1"
            )
        return [float(-c_minus_h / b)]
    raise ContractError("degenerate geometry: the score depends on x1 only")


def _joint_values(h, x1, params: GaussianParams, geom: ScoreGeometry) -> np.ndarray:
    """Vectorized branch-sum joint density of (h, x1); 0 outside the support.

    Points exactly on the fold (zero Jacobian) come out as +inf.
    """
    h = np.asarray(h, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    h, x1 = np.broadcast_arrays(h, x1)
    out = np.zeros(h.shape)
    b = geom.b_at(x1)
    c_minus_h = geom.c_at(x1) - h

    if geom.kind == "quadratic":
        disc = b * b - 4.0 * geom.a2 * c_minus_h
        inside = disc > 0.0
        if np.any(inside):
            bi = b[inside]
            ci = c_minus_h[inside]
            sq = np.sqrt(disc[inside])
            q = -0.5 * (bi + np.where(bi >= 0.0, sq, -sq))
            with np.errstate(divide="ignore", invalid="ignore"):
                r_big = q / geom.a2
                r_small = np.where(q != 0.0, ci / q, -bi / (2.0 * geom.a2))
            pts1 = np.stack([x1[inside], r_big], axis=-1)
            pts2 = np.stack([x1[inside], r_small], axis=-1)
            dens = np.exp(mvn_logpdf_array(pts1, params)) + np.exp(
                mvn_logpdf_array(pts2, params)
            )
            out[inside] = dens / sq
        on_fold = disc == 0.0
        if np.any(on_fold):
            out[on_fold] = np.inf
        return out

    if geom.kind == "linear":
        with np.errstate(divide="ignore", invalid="ignore"):
            root = -c_minus_h / b
        ok = np.isfinite(root)
        if np.any(ok):
            pts = np.stack([x1[ok], root[ok]], axis=-1)
            out[ok] = np.exp(mvn_logpdf_array(pts, params)) / np.abs(b[ok])
        out[~ok] = np.inf
        return out

    raise ContractError("degenerate geometry: the score depends on x1 only")


def joint_density(h: float, x1: float, label: int, problem: TwoClassProblem) -> float:
    """Joint density of (score, x1) under one class at a single point.

    Zero outside the support region; evaluation on the fold itself (Jacobian
    below 1e-12) raises :class:`SingularityError`.
    """
    geom = score_geometry(problem)
    params = _class_params(problem, label)
    h = float(h)
    x1 = float(x1)
    if geom.kind == "quadratic":
        disc = float(geom.discriminant_at(h, x1))
        if disc < 0.0:
            return 0.0
        if np.sqrt(disc) < 1e-12:
            raise SingularityError(
                f"point (h={h:g}, x1={x1:g}) lies on the fold of the score transformation"
            )
    elif geom.kind == "linear":
        if abs(float(geom.b_at(x1))) < 1e-12:
            raise SingularityError(
                f"the score transformation is singular at x1={x1:g}"
            )
    value = _joint_values(np.array([h]), np.array([x1]), params, geom)[0]
    return float(value)


# ---------------------------------------------------------------------------
# Support region
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SupportSlice:
    """Feasible x1 interval(s) of the support region at a fixed score value.

    ``coeffs`` are (d2, d1, d0) of the x1-quadratic discriminant at this h;
    intervals are closed and may extend to +-inf for non-parabolic conics.
    """

    h: float
    intervals: tuple
    coeffs: tuple

    @property
    def is_empty(self) -> bool:
        return len(self.intervals) == 0


def _quadratic_nonneg_intervals(d2: float, d1: float, d0: float) -> tuple:
    """Closed intervals where d2 x^2 + d1 x + d0 >= 0."""
    if d2 == 0.0:
        if d1 == 0.0:
            return ((-np.inf, np.inf),) if d0 >= 0.0 else ()
        x0 = -d0 / d1
        return ((x0, np.inf),) if d1 > 0.0 else ((-np.inf, x0),)
    disc = d1 * d1 - 4.0 * d2 * d0
    if disc < 0.0:
        return ((-np.inf, np.inf),) if d2 > 0.0 else ()
    sq = np.sqrt(disc)
    r1 = (-d1 - sq) / (2.0 * d2)
    r2 = (-d1 + sq) / (2.0 * d2)
    lo, hi = min(r1, r2), max(r1, r2)
    if d2 < 0.0:
        return ((lo, hi),)
    if lo == hi:
        return ((-np.inf, np.inf),)
    return ((-np.inf, lo), (hi, np.inf))


def support_region(h: float, problem: TwoClassProblem) -> SupportSlice:
    """x1 interval(s) on which the joint density of (h, x1) is positive."""
    geom = score_geometry(problem)
    h = float(h)
    if geom.kind == "quadratic":
        d2, d1, d0 = geom.discriminant_coeffs(h)
        return SupportSlice(h=h, intervals=_quadratic_nonneg_intervals(d2, d1, d0), coeffs=(d2, d1, d0))
    if geom.kind == "linear":
        # Every x1 with a nonzero x2 coefficient carries one branch.
        if geom.b1 == 0.0:
            intervals = ((-np.inf, np.inf),)
        else:
            x_star = -geom.b0 / geom.b1
            intervals = ((-np.inf, x_star), (x_star, np.inf))
        return SupportSlice(h=h, intervals=intervals, coeffs=(0.0, 0.0, 0.0))
    raise ContractError("degenerate geometry: the score depends on x1 only")


def support_h_range(problem: TwoClassProblem) -> tuple[float, float]:
    """Range of scores with non-empty support ((-inf, inf) when unbounded)."""
    geom = score_geometry(problem)
    if geom.kind == "quadratic":
        d2, d1, _ = geom.discriminant_coeffs(0.0)
        if d2 < 0.0:
            # max over x1 of D is d0(h) - d1^2/(4 d2); the support exists
            # where it is >= 0, a half line in h.
            shift = d1 * d1 / (4.0 * d2)
            # d0(h) = b0^2 - 4 a2 c0 + 4 a2 h
            h_critical = (shift - (geom.b0 * geom.b0 - 4.0 * geom.a2 * geom.c0)) / (4.0 * geom.a2)
            if geom.a2 > 0.0:
                return (h_critical, np.inf)
            return (-np.inf, h_critical)
        return (-np.inf, np.inf)
    if geom.kind == "linear":
        return (-np.inf, np.inf)
    # x1_only: range of the x1 polynomial c(x1)
    if geom.c2 > 0.0:
        return (float(geom.c_at(-geom.c1 / (2.0 * geom.c2))), np.inf)
    if geom.c2 < 0.0:
        return (-np.inf, float(geom.c_at(-geom.c1 / (2.0 * geom.c2))))
    if geom.c1 != 0.0:
        return (-np.inf, np.inf)
    raise ContractError("degenerate geometry: the score is constant")


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod quadrature (7-15 pair)
# ---------------------------------------------------------------------------

_XGK = np.array(
    [
        -0.9914553711208126,
        -0.9491079123427585,
        -0.8648644233597691,
        -0.7415311855993944,
        -0.5860872354676911,
        -0.4058451513773972,
        -0.2077849550078985,
        0.0,
        0.2077849550078985,
        0.4058451513773972,
        0.5860872354676911,
        0.7415311855993944,
        0.8648644233597691,
        0.9491079123427585,
        0.9914553711208126,
    ]
)
_WGK = np.array(
    [
        0.02293532201052922,
        0.06309209262997855,
        0.1047900103222502,
        0.1406532597155259,
        0.1690047266392679,
        0.1903505780647854,
        0.2044329400752989,
        0.2094821410847278,
        0.2044329400752989,
        0.1903505780647854,
        0.1690047266392679,
        0.1406532597155259,
        0.1047900103222502,
        0.06309209262997855,
        0.02293532201052922,
    ]
)
_WG = np.array(
    [
        0.1294849661688697,
        0.2797053914892767,
        0.3818300505051189,
        0.4179591836734694,
        0.3818300505051189,
        0.2797053914892767,
        0.1294849661688697,
    ]
)


def _gk15(f, a: float, b: float) -> tuple[float, float]:
    """One Gauss-Kronrod 7-15 panel: (integral, error estimate)."""
    hw = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fv = f(mid + hw * _XGK)
    resk = float(_WGK @ fv)
    resg = float(_WG @ fv[1::2])
    reskh = 0.5 * resk
    resasc = float(_WGK @ np.abs(fv - reskh)) * abs(hw)
    integral = resk * hw
    err = abs((resk - resg) * hw)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    return integral, err


def adaptive_gk(f, a: float, b: float, abs_tol: float = 1e-15, rel_tol: float = 1e-9,
                max_evals: int = 2**15) -> tuple[float, float, bool]:
    """Adaptive bisection on Gauss-Kronrod panels.

    Returns (integral, error_estimate, converged); never raises on slow
    convergence — the caller decides what a flagged point means.
    """
    if a == b:
        return 0.0, 0.0, True
    integral, err = _gk15(f, a, b)
    evals = 15
    heap = [(-err, 0, a, b, integral, err)]
    total, total_err = integral, err
    tiebreak = 1
    while True:
        if total_err <= max(abs_tol, rel_tol * abs(total)):
            return total, total_err, True
        if evals + 30 > max_evals:
            return total, total_err, False
        _, _, lo, hi, i_old, e_old = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        i1, e1 = _gk15(f, lo, mid)
        i2, e2 = _gk15(f, mid, hi)
        evals += 30
        total += i1 + i2 - i_old
        total_err += e1 + e2 - e_old
        heapq.heappush(heap, (-e1, tiebreak, lo, mid, i1, e1))
        heapq.heappush(heap, (-e2, tiebreak + 1, mid, hi, i2, e2))
        tiebreak += 2


# ---------------------------------------------------------------------------
# Marginal density of the score
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Tabulated f(h | class) with per-point quadrature error bounds."""

    h_values: np.ndarray
    density: np.ndarray
    est_error: np.ndarray
    label: int

    def __post_init__(self):
        h = np.asarray(self.h_values, dtype=float)
        d = np.asarray(self.density, dtype=float)
        e = np.asarray(self.est_error, dtype=float)
        if not (h.shape == d.shape == e.shape) or h.ndim != 1 or h.size < 2:
            raise ContractError("density grid needs matching 1-D arrays of length >= 2")
        if np.any(np.diff(h) <= 0.0):
            raise ContractError("h_values must be strictly increasing")
        if np.any(d < 0.0):
            raise ContractError("densities must be non-negative")
        _require_class(self.label)
        for name, arr in (("h_values", h), ("density", d), ("est_error", e)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def integral(self) -> float:
        """Trapezoid integral of the density over the grid."""
        return float(np.trapezoid(self.density, self.h_values))

    def cdf_values(self) -> np.ndarray:
        """Cumulative trapezoid integral at each grid point (not renormalized)."""
        seg = 0.5 * (self.density[:-1] + self.density[1:]) * np.diff(self.h_values)
        return np.concatenate([[0.0], np.cumsum(seg)])

    def survival_values(self) -> np.ndarray:
        """Upper-tail trapezoid integral at each grid point.

        Accumulated from the right end, so small survival values keep full
        relative accuracy instead of being differences of order-one CDFs.
        """
        seg = 0.5 * (self.density[:-1] + self.density[1:]) * np.diff(self.h_values)
        return np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])

    def to_csv(self) -> str:
        """Schema: h,density,est_error,class."""
        rows = [
            (fmt17(h), fmt17(d), fmt17(e), str(self.label))
            for h, d, e in zip(self.h_values, self.density, self.est_error)
        ]
        return csv_text(("h", "density", "est_error", "class"), rows)


def _truncation_window(params: GaussianParams, n_sigmas: float = 14.0) -> tuple[float, float]:
    m = float(params.mu[0])
    s = float(np.sqrt(params.sigma[0, 0]))
    return m - n_sigmas * s, m + n_sigmas * s


def _branch_sum(x1, sqrt_disc, geom: ScoreGeometry, params: GaussianParams) -> np.ndarray:
    """pdf(x1, r+) + pdf(x1, r-) with roots from a precomputed sqrt discriminant.

    Taking sqrt(D) from its factored form keeps the integrand finite and
    smooth right up to the support boundary, where the direct evaluation of
    B^2 - 4A(C - h) is pure cancellation noise.
    """
    b = geom.b_at(x1)
    denom = 2.0 * geom.a2
    r_plus = (-b + sqrt_disc) / denom
    r_minus = (-b - sqrt_disc) / denom
    pts_p = np.stack([x1, r_plus], axis=-1)
    pts_m = np.stack([x1, r_minus], axis=-1)
    return np.exp(mvn_logpdf_array(pts_p, params)) + np.exp(mvn_logpdf_array(pts_m, params))


def _integrate_slice(geom, params, h, lo, hi, abs_tol, rel_tol, max_evals):
    """Integrate the branch-sum over one x1 interval of the support slice.

    Bounded intervals (both endpoints are discriminant roots) get the sine
    substitution, under which the 1/sqrt(D) factor cancels exactly against
    the Jacobian; half-infinite ones get the analogous square-root
    substitution at the finite root and a Gaussian-tail truncation at the
    open end.
    """
    win_lo, win_hi = _truncation_window(params)

    if geom.kind == "linear":

        def integrand(x1):
            return _joint_values(h, x1, params, geom)

        a = max(lo, win_lo)
        b = min(hi, win_hi)
        if a >= b:
            return 0.0, 0.0, True
        return adaptive_gk(integrand, a, b, abs_tol, rel_tol, max_evals)

    d2, d1, _d0 = geom.discriminant_coeffs(h)

    if np.isfinite(lo) and np.isfinite(hi):
        # Between the two roots of D; requires d2 < 0.
        center = 0.5 * (lo + hi)
        halfwidth = 0.5 * (hi - lo)
        if halfwidth <= 0.0:
            return 0.0, 0.0, True
        sqrt_neg_d2 = np.sqrt(-d2)

        def g(theta):
            x1 = center + halfwidth * np.sin(theta)
            sqrt_disc = sqrt_neg_d2 * halfwidth * np.cos(theta)
            return _branch_sum(x1, sqrt_disc, geom, params) / sqrt_neg_d2

        return adaptive_gk(g, -0.5 * np.pi, 0.5 * np.pi, abs_tol, rel_tol, max_evals)

    if np.isfinite(lo) or np.isfinite(hi):
        # Half line ending at a root: x1 = root +- u^2.  In factored form
        # sqrt(D) = u * sqrt(q(x1)) with q smooth and positive inside, so the
        # substituted integrand 2*branch/sqrt(q) is regular at the root.
        root = lo if np.isfinite(lo) else hi
        sign = 1.0 if np.isfinite(lo) else -1.0
        far = max(win_hi, root + 1.0) if sign > 0 else min(win_lo, root - 1.0)
        u_max = np.sqrt(abs(far - root))
        if d2 != 0.0:
            other = (-d1 / d2) - root  # sum of roots = -d1/d2

            def q_at(x1):
                return np.abs(d2) * np.abs(x1 - other)

        else:

            def q_at(x1):
                return np.full_like(np.asarray(x1, dtype=float), abs(d1))

        def g(u):
            x1 = root + sign * u * u
            q = q_at(x1)
            sqrt_q = np.sqrt(q)
            sqrt_disc = u * sqrt_q
            return 2.0 * _branch_sum(x1, sqrt_disc, geom, params) / sqrt_q

        return adaptive_gk(g, 0.0, u_max, abs_tol, rel_tol, max_evals)

    # Whole line: D is bounded away from zero, direct evaluation is stable.
    def integrand(x1):
        return _joint_values(h, x1, params, geom)

    return adaptive_gk(integrand, win_lo, win_hi, abs_tol, rel_tol, max_evals)


def _x1_only_density(geom: ScoreGeometry, params: GaussianParams, h_values: np.ndarray):
    """Closed-form pushforward when the score is a function of x1 alone."""
    m = float(params.mu[0])
    s = float(np.sqrt(params.sigma[0, 0]))

    def normal_pdf(x):
        return np.exp(-0.5 * ((x - m) / s) ** 2) / (s * np.sqrt(2.0 * np.pi))

    out = np.zeros_like(h_values)
    if geom.c2 == 0.0:
        if geom.c1 == 0.0:
            raise ContractError("degenerate geometry: the score is constant")
        roots = (h_values - geom.c0) / geom.c1
        out = normal_pdf(roots) / abs(geom.c1)
        return out
    disc = geom.c1 * geom.c1 - 4.0 * geom.c2 * (geom.c0 - h_values)
    inside = disc > 0.0
    sq = np.sqrt(disc[inside])
    r_plus = (-geom.c1 + sq) / (2.0 * geom.c2)
    r_minus = (-geom.c1 - sq) / (2.0 * geom.c2)
    out[inside] = (normal_pdf(r_plus) + normal_pdf(r_minus)) / sq
    return out


def marginal_density(
    h_values,
    label: int,
    problem: TwoClassProblem,
    abs_tol: float = 1e-15,
    rel_tol: float = 1e-9,
    max_evals: int = 2**15,
) -> DensityGrid:
    """f(h | class) on a grid of score values, by quadrature over x1.

    Each grid point carries its own error estimate; points whose adaptive
    refinement exhausted the evaluation budget keep their best value and a
    correspondingly large est_error rather than a fabricated tight bound.
    """
    h_arr = np.asarray(h_values, dtype=float)
    geom = score_geometry(problem)
    params = _class_params(problem, label)

    if geom.kind == "x1_only":
        dens = _x1_only_density(geom, params, h_arr)
        return DensityGrid(h_arr, dens, np.zeros_like(dens), label)

    density = np.zeros_like(h_arr)
    est_error = np.zeros_like(h_arr)
    for i, h in enumerate(h_arr):
        slc = support_region(h, problem)
        total = 0.0
        err = 0.0
        for lo, hi in slc.intervals:
            v, e, _ = _integrate_slice(geom, params, float(h), lo, hi, abs_tol, rel_tol, max_evals)
            total += v
            err += e
        density[i] = max(total, 0.0)
        est_error[i] = err
    return DensityGrid(h_arr, density, est_error, label)


def score_moments(problem: TwoClassProblem, label: int) -> tuple[float, float]:
    """Exact mean and variance of the score under one class model.

    With x = mu + L z the score is a quadratic form in standard normal z,
    whose first two moments are available in closed form.
    """
    params = _class_params(problem, label)
    p1, p2 = problem.class1, problem.class2
    L = params.chol
    M = L.T @ (p2.sigma_inv - p1.sigma_inv) @ L
    d1 = params.mu - p1.mu
    d2 = params.mu - p2.mu
    b = L.T @ (p2.sigma_inv @ d2 - p1.sigma_inv @ d1)
    c = -0.5 * (d1 @ p1.sigma_inv @ d1 - d2 @ p2.sigma_inv @ d2) - 0.5 * (
        p1.log_det - p2.log_det
    )
    mean = 0.5 * np.trace(M) + c
    var = 0.5 * np.sum(M * M) + b @ b
    return float(mean), float(var)


def default_h_grid(
    problem: TwoClassProblem,
    n_points: int = 801,
    n_sigmas: float = 16.0,
    stretch: float = 1.5,
) -> np.ndarray:
    """A score grid covering both class distributions and the exact support.

    Points are packed more densely toward a finite support edge, where the
    marginal density jumps; the far end is set n_sigmas score deviations
    beyond both class means.
    """
    lo_sup, hi_sup = support_h_range(problem)
    bounds = []
    for label in (CLASS1, CLASS2):
        mean, var = score_moments(problem, label)
        sd = np.sqrt(var)
        bounds.append((mean - n_sigmas * sd, mean + n_sigmas * sd))
    lo = max(min(b[0] for b in bounds), lo_sup)
    hi = min(max(b[1] for b in bounds), hi_sup)
    span = hi - lo
    t = np.linspace(0.0, 1.0, int(n_points))
    if np.isfinite(lo_sup) and not np.isfinite(hi_sup):
        grid = lo + span * t**stretch
        grid[0] = lo + 1e-7 * span
    elif np.isfinite(hi_sup) and not np.isfinite(lo_sup):
        grid = hi - span * (1.0 - t) ** stretch
        grid[-1] = hi - 1e-7 * span
    else:
        grid = lo + span * t
    return grid


# ---------------------------------------------------------------------------
# Simultaneous diagonalization
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiagonalizedProblem:
    """A problem re-expressed in coordinates y = W' x where the first class
    covariance is the identity and the second is diag(lam)."""

    transform: np.ndarray
    problem: TwoClassProblem
    lam: np.ndarray

    def map_points(self, x) -> np.ndarray:
        """Map feature rows into the diagonalized coordinates."""
        return np.atleast_2d(np.asarray(x, dtype=float)) @ self.transform


def simdiag(sigma1, sigma2) -> tuple[np.ndarray, np.ndarray]:
    """W with W' sigma1 W = I and W' sigma2 W = diag(lam), lam descending."""
    s1 = smallmat.require_symmetric(sigma1, "sigma1")
    s2 = smallmat.require_symmetric(sigma2, "sigma2")
    if s1.shape != s2.shape:
        raise ContractError("covariances must share a dimension")
    L = smallmat.cholesky(s1)
    Linv = smallmat.triangular_inverse(L)
    M = Linv @ s2 @ Linv.T
    M = 0.5 * (M + M.T)
    lam, Q = np.linalg.eigh(M)
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    Q = Q[:, order]
    if lam[-1] <= 0.0:
        raise ContractError("second covariance is not positive definite in the whitened basis")
    W = Linv.T @ Q
    return W, lam


def transform_problem(problem: TwoClassProblem) -> DiagonalizedProblem:
    """Rotate/scale features so the covariances are I and diag(lam).

    The score of a point and of its image agree exactly (the two Jacobian
    factors cancel in the likelihood ratio), so classification decisions and
    score distributions are unchanged.
    """
    W, lam = simdiag(problem.class1.sigma, problem.class2.sigma)
    mu1 = W.T @ problem.class1.mu
    mu2 = W.T @ problem.class2.mu
    new_problem = TwoClassProblem(
        class1=GaussianParams(mu1, np.eye(len(mu1))),
        class2=GaussianParams(mu2, np.diag(lam)),
        prior1=problem.prior1,
        prior2=problem.prior2,
        costs=problem.costs,
    )
    return DiagonalizedProblem(transform=W, problem=new_problem, lam=lam)


# ---------------------------------------------------------------------------
# Consistency against simulated scores; ROC from tabulated densities
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HistogramTable:
    """Histogram of scores with the bin rule used for density overlays."""

    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def densities(self) -> np.ndarray:
        widths = np.diff(self.bin_edges)
        total = self.counts.sum()
        return self.counts / (total * widths)


def freedman_diaconis_bins(scores: np.ndarray, min_bins: int = 20, max_bins: int = 200) -> int:
    """Freedman-Diaconis bin count, clamped to [min_bins, max_bins]."""
    scores = np.asarray(scores, dtype=float)
    q75, q25 = np.percentile(scores, [75.0, 25.0])
    iqr = q75 - q25
    span = scores.max() - scores.min()
    if iqr <= 0.0 or span <= 0.0:
        return min_bins
    width = 2.0 * iqr / scores.size ** (1.0 / 3.0)
    return int(np.clip(np.ceil(span / width), min_bins, max_bins))


def histogram_vs_analytic(scores, grid: DensityGrid) -> tuple[float, HistogramTable]:
    """Kolmogorov-Smirnov distance between scores and a tabulated density.

    The analytic CDF is the grid's cumulative trapezoid integral; the grid
    must span the empirical score range.
    """
    s = np.sort(np.asarray(scores, dtype=float).ravel())
    if s.size == 0:
        raise ContractError("need at least one score")
    if s[0] < grid.h_values[0] - 1e-12 or s[-1] > grid.h_values[-1] + 1e-12:
        raise ContractError(
            f"grid [{grid.h_values[0]:g}, {grid.h_values[-1]:g}] does not cover "
            f"the score range [{s[0]:g}, {s[-1]:g}]"
        )
    cdf = np.interp(s, grid.h_values, grid.cdf_values())
    n = s.size
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    ks = float(np.max(np.maximum(np.abs(cdf - upper), np.abs(cdf - lower))))
    nbins = freedman_diaconis_bins(s)
    counts, edges = np.histogram(s, bins=nbins)
    return ks, HistogramTable(bin_edges=edges, counts=counts)


def density_roc(grid1: DensityGrid, grid2: DensityGrid, band: tuple | None = None) -> RocCurve:
    """ROC of the score distributions tabulated on a shared grid.

    Sweeps the threshold over the grid: TPF(t) and FPF(t) are the upper-tail
    integrals of the class densities, accumulated from the right so the
    operating points near (0, 0) stay relatively accurate.  The grid must
    cover the distributions; ``band`` optionally restricts the *emitted*
    thresholds to (t_lo, t_hi), dropping extreme operating points whose
    complements fall below the grid's integration accuracy.
    """
    if not np.array_equal(grid1.h_values, grid2.h_values):
        raise ContractError("density grids must share the same h grid")
    if grid1.label == grid2.label:
        raise ContractError("need one grid per class")
    g1 = grid1 if grid1.label == CLASS1 else grid2
    g2 = grid2 if grid1.label == CLASS1 else grid1
    keep = np.ones(g1.h_values.size, dtype=bool)
    if band is not None:
        keep = (g1.h_values >= band[0]) & (g1.h_values <= band[1])
        if not np.any(keep):
            raise ContractError("threshold band excludes every grid point")
    tpf = np.clip(g1.survival_values(), 0.0, 1.0)[::-1][keep[::-1]]
    fpf = np.clip(g2.survival_values(), 0.0, 1.0)[::-1][keep[::-1]]
    thresholds = g1.h_values[::-1][keep[::-1]]
    return RocCurve(
        fpf=np.concatenate([[0.0], fpf, [1.0]]),
        tpf=np.concatenate([[0.0], tpf, [1.0]]),
        thresholds=np.concatenate([[np.inf], thresholds, [-np.inf]]),
    )
