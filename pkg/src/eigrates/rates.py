"""Cumulant generating functions of directional quadratic forms and their
Legendre transforms.

For a unit direction x and one column of entries, S = sum_m x_m C_m.  The
exponential decay constant of P(<x, W x> beyond alpha) is the transform
sup_t (t*alpha - log E[exp(t S^2)]), and the decay constant for the extreme
eigenvalues is the infimum of that transform over the unit sphere.  This
module evaluates the CGF exactly (sign enumeration for +/-1 entries, a
closed form for normal entries, Gaussian-mixture quadrature for symmetric
uniform entries), runs the transform by bisection on the CGF derivative,
and minimizes over the sphere by multi-start projected gradient descent.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .core import SQRT3, EntryDistribution, UnitVector, derive_rng
from .errors import DomainError, UnsupportedDomainError

LOG2 = math.log(2.0)

# Sign-pattern enumeration is exact but costs 2^(k-1) per CGF evaluation.
ENUMERATION_MAX_K = 24

# |t| cap for the transform search; reaching it means the derivative never
# straddled the target level inside the numerically safe window.
T_EDGE = 50.0

# Gauss-Hermite rule size for the symmetric-uniform CGF.
_QUAD_NODES = 201

_ATOL = 1e-12


class CgfMethod(enum.Enum):
    EXACT_ENUMERATION = "exact_enumeration"
    CLOSED_FORM_NORMAL = "closed_form_normal"
    GAUSSIAN_MIXTURE_QUADRATURE = "gaussian_mixture_quadrature"


@functools.lru_cache(maxsize=4)
def _hermgauss(nodes: int):
    x, w = np.polynomial.hermite.hermgauss(nodes)
    # E[g(Z)] for standard normal Z: sum w_i g(sqrt(2) x_i) / sqrt(pi)
    return np.sqrt(2.0) * x, np.log(w) - 0.5 * math.log(math.pi)


@dataclass
class CgfSpec:
    """Evaluation recipe for Lambda(t) = log E[exp(t S^2)] along a direction.

    domain is the half-open interval of admissible t.  The enumerated S^2
    support is cached on the spec, so repeated t-evaluations inside one
    transform solve reuse it.
    """

    dist: EntryDistribution
    x: UnitVector
    method: CgfMethod
    domain: tuple[float, float]
    _s2: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def for_direction(cls, dist: EntryDistribution, x: UnitVector) -> "CgfSpec":
        if dist is EntryDistribution.RADEMACHER:
            if x.k > ENUMERATION_MAX_K:
                raise DomainError(
                    f"exact enumeration supports k <= {ENUMERATION_MAX_K}, got k={x.k}"
                )
            return cls(dist, x, CgfMethod.EXACT_ENUMERATION, (-math.inf, math.inf))
        if dist is EntryDistribution.STD_NORMAL:
            return cls(dist, x, CgfMethod.CLOSED_FORM_NORMAL, (-math.inf, 0.5))
        return cls(dist, x, CgfMethod.GAUSSIAN_MIXTURE_QUADRATURE, (0.0, math.inf))

    # -- exact enumeration ---------------------------------------------------

    def squared_support(self) -> np.ndarray:
        """All values of S^2 over sign patterns with the first sign fixed.

        Global sign flips leave S^2 invariant, so the 2^(k-1) half-space
        patterns carry the full distribution with uniform weight.
        """
        if self._s2 is None:
            coords = self.x.coords
            values = np.array([coords[0]])
            for xj in coords[1:]:
                values = np.concatenate([values + xj, values - xj])
            self._s2 = values * values
        return self._s2

    def ess_sup_s2(self) -> float:
        if self.method is CgfMethod.EXACT_ENUMERATION:
            return float(np.max(self.squared_support()))
        if self.dist is EntryDistribution.UNIFORM_SYM:
            s = float(np.sum(np.abs(self.x.coords)))
            return 3.0 * s * s
        return math.inf

    def ess_inf_s2(self) -> float:
        if self.method is CgfMethod.EXACT_ENUMERATION:
            return float(np.min(self.squared_support()))
        return 0.0

    def atom_log_prob(self, value: float) -> float:
        """log P(S^2 = value) from the enumerated support."""
        s2 = self.squared_support()
        hits = int(np.count_nonzero(np.isclose(s2, value, rtol=1e-12, atol=1e-12)))
        if hits == 0:
            return -math.inf
        return math.log(hits) - (self.x.k - 1) * LOG2


def cgf(spec: CgfSpec, t: float) -> float:
    """Exact log E[exp(t S^2)] for admissible t."""
    lo, hi = spec.domain
    if not (lo <= t < hi):
        if spec.method is CgfMethod.GAUSSIAN_MIXTURE_QUADRATURE and t < 0:
            raise UnsupportedDomainError(
                "symmetric-uniform CGF needs t >= 0 (sqrt(2t) must be real)"
            )
        raise DomainError(f"t={t} outside the admissible domain {spec.domain}")
    if spec.method is CgfMethod.EXACT_ENUMERATION:
        s2 = spec.squared_support()
        return float(logsumexp(t * s2)) - (spec.x.k - 1) * LOG2
    if spec.method is CgfMethod.CLOSED_FORM_NORMAL:
        return -0.5 * math.log1p(-2.0 * t)
    return _cgf_uniform_quadrature(spec, t)


def _cgf_uniform_quadrature(spec: CgfSpec, t: float) -> float:
    # E[exp(t S^2)] = E_Z[ prod_j phi(sqrt(2t) Z x_j) ] for standard normal Z.
    if t == 0.0:
        return 0.0
    z, log_w = _hermgauss(_QUAD_NODES)
    v = math.sqrt(2.0 * t) * np.outer(z, spec.x.coords) * SQRT3
    log_phi = _log_sinhc(v)
    log_g = np.sum(log_phi, axis=1)
    return float(logsumexp(log_w + log_g))


def _log_sinhc(v: np.ndarray) -> np.ndarray:
    """log(sinh(v)/v), even in v, stable at 0 and for large |v|."""
    a = np.abs(v)
    small = a < 1e-6
    safe = np.where(small, 1.0, a)
    big = safe + np.log1p(-np.exp(-2.0 * safe)) - LOG2 - np.log(safe)
    return np.where(small, a * a / 6.0, big)


def cgf_derivative(spec: CgfSpec, t: float) -> float:
    """d/dt log E[exp(t S^2)]: the tilted mean of S^2."""
    if spec.method is CgfMethod.EXACT_ENUMERATION:
        s2 = spec.squared_support()
        shifted = t * s2
        shifted -= np.max(shifted)
        w = np.exp(shifted)
        return float(np.dot(w, s2) / np.sum(w))
    if spec.method is CgfMethod.CLOSED_FORM_NORMAL:
        return 1.0 / (1.0 - 2.0 * t)
    # step large enough that quadrature round-off (~1e-12) stays below the
    # O(h^2) truncation error instead of being amplified by 1/h
    h = 1e-4 * max(1.0, abs(t))
    if t - h < 0.0:
        # second-order one-sided stencil at the t = 0 quadrature edge
        return (
            -3.0 * cgf(spec, t) + 4.0 * cgf(spec, t + h) - cgf(spec, t + 2.0 * h)
        ) / (2.0 * h)
    return (cgf(spec, t + h) - cgf(spec, t - h)) / (2.0 * h)


# ---------------------------------------------------------------------------
# Legendre-Fenchel transform
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LegendreSolve:
    """One transform solve: the rate, the optimal tilt, and how it ended."""

    rate: float
    t_star: float
    boundary: bool
    converged: bool


def legendre(spec: CgfSpec, alpha: float) -> tuple[float, float]:
    """sup_t (t*alpha - Lambda(t)) with t restricted by the sign of alpha - 1.

    Returns (rate, t_star); t_star is +/-inf when the optimum sits at the
    support boundary (alpha at or beyond the essential range of S^2).
    """
    sol = legendre_solve(spec, alpha)
    return sol.rate, sol.t_star


def legendre_solve(spec: CgfSpec, alpha: float) -> LegendreSolve:
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if spec.method is CgfMethod.GAUSSIAN_MIXTURE_QUADRATURE and alpha < 1.0:
        raise UnsupportedDomainError(
            "lower-tail transforms need t < 0, unsupported for symmetric-uniform entries"
        )

    ess_sup = spec.ess_sup_s2()
    ess_inf = spec.ess_inf_s2()
    if alpha >= 1.0:
        # upper tail, t >= 0
        if math.isfinite(ess_sup):
            if alpha > ess_sup * (1.0 + 1e-12) + _ATOL:
                return LegendreSolve(math.inf, math.inf, True, True)
            if alpha >= ess_sup * (1.0 - 1e-12) - _ATOL:
                if spec.method is CgfMethod.EXACT_ENUMERATION:
                    rate = -spec.atom_log_prob(ess_sup)
                else:
                    rate = math.inf  # continuous law: no atom at the ess sup
                return LegendreSolve(rate, math.inf, True, True)
        return _bisect_transform(spec, alpha, side=+1)
    # lower tail, t <= 0
    if alpha < ess_inf * (1.0 - 1e-12) - _ATOL:
        return LegendreSolve(math.inf, -math.inf, True, True)
    if alpha <= ess_inf * (1.0 + 1e-12) + _ATOL and ess_inf > 0.0:
        rate = -spec.atom_log_prob(ess_inf)
        return LegendreSolve(rate, -math.inf, True, True)
    return _bisect_transform(spec, alpha, side=-1)


def _tilted_stats(spec: CgfSpec, t: float):
    """(Lambda(t), Lambda'(t), Lambda''(t) or None) sharing one exp pass.

    The derivative pair is the mean and variance of S^2 under the
    exponentially tilted law; for the quadrature method the curvature is
    not available cheaply and comes back None.
    """
    if spec.method is CgfMethod.EXACT_ENUMERATION:
        s2 = spec.squared_support()
        z = t * s2
        m = float(np.max(z))
        w = np.exp(z - m)
        tot = float(np.sum(w))
        lam = m + math.log(tot) - (spec.x.k - 1) * LOG2
        mean = float(np.dot(w, s2)) / tot
        centered = s2 - mean
        var = float(np.dot(w, centered * centered)) / tot
        return lam, mean, var
    if spec.method is CgfMethod.CLOSED_FORM_NORMAL:
        d = 1.0 / (1.0 - 2.0 * t)
        return -0.5 * math.log1p(-2.0 * t), d, 2.0 * d * d
    return _cgf_uniform_quadrature(spec, t), cgf_derivative(spec, t), None


def _bisect_transform(spec: CgfSpec, alpha: float, side: int) -> LegendreSolve:
    """Solve Lambda'(t) = alpha over t >= 0 (side=+1) or t <= 0 (-1).

    Lambda is convex, so the derivative is monotone and the bracket is
    certified once the endpoint derivatives straddle alpha; inside it,
    Newton steps (falling back to the midpoint whenever they leave the
    bracket or stall) finish the solve.
    """
    dom_lo, dom_hi = spec.domain
    if side > 0:
        hi_edge = min(T_EDGE, dom_hi)
        bracket = _expand_up(spec, alpha, hi_edge)
        if bracket is None:
            # derivative never straddled alpha inside the safe window
            t_at = math.nextafter(hi_edge, 0.0)
            val = t_at * alpha - cgf(spec, t_at)
            return LegendreSolve(_clip_rate(val), t_at, True, False)
    else:
        lo_edge = max(-T_EDGE, dom_lo)
        bracket = _expand_down(spec, alpha, lo_edge)
        if bracket is None:
            t_at = math.nextafter(lo_edge, 0.0)
            val = t_at * alpha - cgf(spec, t_at)
            return LegendreSolve(_clip_rate(val), t_at, True, False)

    lo, hi = bracket
    t = 0.5 * (lo + hi)
    lam = None
    t_prev = f_prev = None
    for it in range(120):
        lam, deriv, curv = _tilted_stats(spec, t)
        f = deriv - alpha
        if f < 0.0:
            lo = t
        else:
            hi = t
        width = hi - lo
        if width <= 1e-14 * max(1.0, abs(lo), abs(hi)) or abs(f) <= 1e-13 * max(1.0, alpha):
            break
        if curv is None and t_prev is not None and t != t_prev:
            slope = (f - f_prev) / (t - t_prev)
            curv = slope if slope > 0.0 else None
        t_prev, f_prev = t, f
        if curv is not None and curv > 0.0 and it % 3 != 2:
            t_new = t - f / curv
            if not (lo < t_new < hi):
                t_new = 0.5 * (lo + hi)
        else:
            t_new = 0.5 * (lo + hi)
        if t_new == t:
            t_new = 0.5 * (lo + hi)
            if t_new == t:
                break
        t = t_new
    rate = t * alpha - (lam if lam is not None else cgf(spec, t))
    return LegendreSolve(_clip_rate(rate), t, False, True)


def _clip_rate(rate: float) -> float:
    # t = 0 is always admissible and gives 0, so the sup is never negative.
    return max(rate, 0.0)


def _expand_up(spec: CgfSpec, alpha: float, edge: float):
    """Grow [0, hi] until Lambda'(hi) >= alpha; None if the edge blocks it."""
    lo = 0.0
    if cgf_derivative(spec, lo) >= alpha:
        return lo, lo
    finite_edge = math.isfinite(spec.domain[1])
    hi = min(1.0, edge / 2) if finite_edge else min(1.0, edge)
    while True:
        if cgf_derivative(spec, hi) >= alpha:
            return lo, hi
        lo = hi
        if finite_edge:
            gap = spec.domain[1] - hi
            hi = spec.domain[1] - gap / 2.0
            if gap < 1e-15:
                return None
        else:
            hi *= 2.0
            if hi > edge:
                return None


def _expand_down(spec: CgfSpec, alpha: float, edge: float):
    """Grow [lo, 0] until Lambda'(lo) <= alpha; None if the edge blocks it."""
    hi = 0.0
    if cgf_derivative(spec, hi) <= alpha:
        return hi, hi
    lo = -1.0
    while True:
        if lo < edge:
            return None
        if cgf_derivative(spec, lo) <= alpha:
            return lo, hi
        hi = lo
        lo *= 2.0


# ---------------------------------------------------------------------------
# Closed forms and bounds
# ---------------------------------------------------------------------------

def rate_wishart(alpha: float) -> float:
    """(alpha - 1 - log alpha)/2: the k-independent normal-entry rate."""
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    return 0.5 * (alpha - 1.0 - math.log(alpha))


def wishart_t_star(alpha: float) -> float:
    """Optimal tilt 1/2 - 1/(2 alpha) for the normal-entry transform."""
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    return 0.5 - 0.5 / alpha


def rate_two_sparse(alpha: float) -> float:
    """(alpha/2) log alpha + ((2-alpha)/2) log(2-alpha), with 0 log 0 = 0.

    The transform along the two-coordinate direction for +/-1 entries.
    """
    if alpha < 0 or alpha > 2:
        raise DomainError(f"two-sparse rate needs 0 <= alpha <= 2, got {alpha}")

    def xlogx(v: float) -> float:
        return 0.0 if v == 0.0 else v * math.log(v)

    return 0.5 * (xlogx(alpha) + xlogx(2.0 - alpha))


def rate_joint_wishart(alpha: float, beta: float) -> float:
    """Joint top/bottom deviation rate for normal entries: the rates add."""
    if not (0 < beta <= 1 <= alpha):
        raise DomainError(f"need 0 < beta <= 1 <= alpha, got alpha={alpha}, beta={beta}")
    return rate_wishart(alpha) + rate_wishart(beta)


def rate_lower_bound_bounded(alpha: float, bound: float) -> float:
    """(alpha/M^2 - 1 - log(alpha/M^2))/2 for entries with |C| < M, alpha >= M^2."""
    if bound < 1.0:
        raise DomainError(f"entry bound must be >= 1, got {bound}")
    if alpha < bound * bound:
        raise DomainError(f"need alpha >= M^2 = {bound * bound}, got {alpha}")
    return rate_wishart(alpha / (bound * bound))


def rate_lower_bound_rademacher(alpha: float) -> float:
    """Piecewise lower bound for +/-1 entries.

    (alpha - 1 - log alpha)/2 on alpha >= 1/2 and (log 2 - alpha)/2 on
    0 < alpha <= 1/2; the pieces agree at 1/2.
    """
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if alpha >= 0.5:
        return rate_wishart(alpha)
    return 0.5 * (LOG2 - alpha)


def chernoff_squared_entry(dist: EntryDistribution, a: float) -> float:
    """Legendre transform of the squared-entry CGF at level a."""
    if a <= 0:
        raise DomainError(f"a must be positive, got {a}")
    if dist is EntryDistribution.RADEMACHER:
        # squared entry is the point mass at 1
        return 0.0 if abs(a - 1.0) <= 1e-12 else math.inf
    if dist is EntryDistribution.STD_NORMAL:
        return rate_wishart(a)
    # symmetric uniform: numeric transform on t >= 0, defined for a >= 1
    if a < 1.0:
        raise UnsupportedDomainError(
            "squared-entry transform for symmetric-uniform entries needs a >= 1"
        )
    if a >= 3.0 - 1e-12:
        return math.inf
    return _uniform_squared_transform(a)


@functools.lru_cache(maxsize=1)
def _leggauss_01():
    x, w = np.polynomial.legendre.leggauss(120)
    # map to [0, 1]
    return (x + 1.0) / 2.0, w / 2.0


def _uniform_squared_transform(a: float) -> float:
    u, w = _leggauss_01()
    c2 = 3.0 * u * u  # entry = sqrt(3) * uniform(0, 1) in law for |entry|

    def lam_and_prime(t: float):
        e = np.exp(t * c2 - (max(t, 0.0) * 3.0))
        z = float(np.dot(w, e))
        zp = float(np.dot(w, c2 * e))
        return math.log(z) + max(t, 0.0) * 3.0, zp / z

    lo, hi = 0.0, 1.0
    while lam_and_prime(hi)[1] < a:
        lo = hi
        hi *= 2.0
        if hi > T_EDGE:
            return math.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
        if lam_and_prime(mid)[1] < a:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    lam, _ = lam_and_prime(t)
    return max(t * a - lam, 0.0)


# ---------------------------------------------------------------------------
# Sphere covering counts
# ---------------------------------------------------------------------------

def grid_covering(k: int, grid_l: int) -> tuple[float, float]:
    """Cube-grid covering of the sphere: mesh bound 3 sqrt(k)/L, count L^k."""
    if k < 1 or grid_l < 1:
        raise DomainError("k and L must be positive integers")
    if math.sqrt(k) / grid_l > 0.5:
        raise DomainError(
            f"grid covering needs sqrt(k)/L <= 1/2, got {math.sqrt(k) / grid_l:.4f}"
        )
    d_bound = 3.0 * math.sqrt(k) / grid_l
    try:
        count_bound = float(grid_l ** k)
    except OverflowError:
        count_bound = math.inf
    return d_bound, count_bound


def rogers_covering(k: int, radius_ratio: float) -> float:
    """log of the sphere-covering count 4 k sqrt(k) R^k (log k + log log k + log R).

    Only the leading form of the asymptotic bound; the (1 + O(1/log k))
    factor is dropped.  Returned in log-space to avoid overflow in R^k.
    """
    if k < 2:
        raise DomainError("covering count needs k >= 2 (log log k undefined below)")
    if radius_ratio <= math.sqrt(k / (k - 1.0)):
        raise DomainError(
            f"covering bound needs R > sqrt(k/(k-1)) = {math.sqrt(k / (k - 1.0)):.6f}"
        )
    bracket = math.log(k) + math.log(math.log(k)) + math.log(radius_ratio)
    return math.log(4.0 * k * math.sqrt(k) * bracket) + k * math.log(radius_ratio)


# ---------------------------------------------------------------------------
# MGF domination check
# ---------------------------------------------------------------------------

def mgf_bound_check(dist: EntryDistribution, x: UnitVector, t: float) -> bool:
    """True iff the exact CGF is below -log(1 - 2 M^2 t)/2 at this t.

    M = 1 for +/-1 entries (where the bound extends to t >= -1) and for
    normal entries (where it is an identity); M = sqrt(3) for the uniform
    case, checkable on 0 <= t < 1/(2 M^2).
    """
    if dist is EntryDistribution.RADEMACHER:
        if not (-1.0 <= t < 0.5):
            raise DomainError(f"checkable domain is [-1, 1/2) for +/-1 entries, got t={t}")
        m2 = 1.0
    elif dist is EntryDistribution.STD_NORMAL:
        if not (0.0 <= t < 0.5):
            raise DomainError(f"checkable domain is [0, 1/2) for normal entries, got t={t}")
        m2 = 1.0
    else:
        m2 = 3.0
        if not (0.0 <= t < 1.0 / (2.0 * m2)):
            raise DomainError(
                f"checkable domain is [0, {1.0 / (2.0 * m2):.4f}) for uniform entries, got t={t}"
            )
    spec = CgfSpec.for_direction(dist, x)
    return cgf(spec, t) <= -0.5 * math.log1p(-2.0 * m2 * t) + 1e-10


# ---------------------------------------------------------------------------
# Sphere infimum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OptimizerSettings:
    """Knobs for the multi-start projected-gradient sphere search."""

    random_restarts: int = 32
    seed: int = 909090
    max_iterations: int = 200
    gradient_step: float = 1e-6
    improvement_tol: float = 1e-9
    initial_step: float = 0.25


@dataclass(frozen=True)
class RateResult:
    """Sphere-infimum transform value with its optimizer provenance."""

    alpha: float
    rate: float
    infinite: bool
    t_star: float
    t_star_at_boundary: bool
    x_star: UnitVector
    restarts_used: int
    converged: bool


def _canonical(coords: np.ndarray) -> np.ndarray:
    # sign flips and permutations leave the law of S invariant for every
    # symmetric entry law, so iterate in |coords| sorted descending
    return np.sort(np.abs(coords))[::-1]


def _sphere_objective(dist: EntryDistribution, coords: np.ndarray, alpha: float) -> LegendreSolve:
    x = UnitVector(coords / np.linalg.norm(coords))
    return legendre_solve(CgfSpec.for_direction(dist, x), alpha)


def _descend(dist: EntryDistribution, start: np.ndarray, alpha: float,
             opts: OptimizerSettings) -> tuple[LegendreSolve, np.ndarray, bool]:
    x = _canonical(start / np.linalg.norm(start))
    best = _sphere_objective(dist, x, alpha)
    if not math.isfinite(best.rate):
        return best, x, True
    h = opts.gradient_step
    step = opts.initial_step
    converged = False
    for _ in range(opts.max_iterations):
        grad = np.zeros_like(x)
        for j in range(x.size):
            bump = np.zeros_like(x)
            bump[j] = h
            up = _sphere_objective(dist, x + bump, alpha).rate
            dn = _sphere_objective(dist, x - bump, alpha).rate
            if not (math.isfinite(up) and math.isfinite(dn)):
                converged = True
                break
            grad[j] = (up - dn) / (2.0 * h)
        else:
            tangent = grad - np.dot(grad, x) * x
            gnorm = float(np.linalg.norm(tangent))
            if gnorm < 1e-12:
                converged = True
                break
            improved = False
            while step > 1e-13:
                trial = x - step * tangent
                trial = _canonical(trial / np.linalg.norm(trial))
                cand = _sphere_objective(dist, trial, alpha)
                if cand.rate < best.rate - 1e-4 * step * gnorm * gnorm:
                    improvement = best.rate - cand.rate
                    x, best = trial, cand
                    step = min(step * 1.5, 1.0)
                    improved = True
                    if improvement < opts.improvement_tol:
                        converged = True
                    break
                step *= 0.5
            if not improved or converged:
                converged = True
                break
            continue
        break
    return best, x, converged


def rate_k(dist: EntryDistribution, k: int, alpha: float,
           opts: OptimizerSettings | None = None) -> RateResult:
    """Infimum over the unit sphere of the directional transform at alpha.

    Starts from the all-equal and two-coordinate directions (the two
    candidate optima) plus seeded random restarts, descending each with
    projected numerical gradients; ties break toward the lexicographically
    smallest canonical direction.
    """
    opts = opts or OptimizerSettings()
    if k < 2:
        raise DomainError(f"sphere infimum needs k >= 2, got k={k}")
    if dist is EntryDistribution.RADEMACHER and k > ENUMERATION_MAX_K:
        raise DomainError(f"exact enumeration supports k <= {ENUMERATION_MAX_K}")
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if dist is EntryDistribution.UNIFORM_SYM and alpha < 1.0:
        raise UnsupportedDomainError(
            "lower-tail sphere rates are unsupported for symmetric-uniform entries"
        )

    starts = [UnitVector.uniform(k).coords, UnitVector.two_sparse(k).coords]
    rng = derive_rng(opts.seed, k)
    starts += [UnitVector.random(k, rng).coords for _ in range(opts.random_restarts)]

    best: LegendreSolve | None = None
    best_x: np.ndarray | None = None
    all_converged = True
    for start in starts:
        sol, x_end, conv = _descend(dist, start, alpha, opts)
        all_converged = all_converged and conv
        if best is None or sol.rate < best.rate or (
            sol.rate == best.rate and tuple(x_end) < tuple(best_x)
        ):
            best, best_x = sol, x_end
    return RateResult(
        alpha=alpha,
        rate=best.rate,
        infinite=math.isinf(best.rate),
        t_star=best.t_star,
        t_star_at_boundary=best.boundary,
        x_star=UnitVector(best_x / np.linalg.norm(best_x)),
        restarts_used=len(starts),
        converged=all_converged,
    )


# ---------------------------------------------------------------------------
# Strategy phase transition
# ---------------------------------------------------------------------------

def phase_transition_alpha_star(tol: float = 1e-8) -> float:
    """Crossing point in (0, 1) of the large-k rate and the two-sparse rate.

    Below the crossing the two-coordinate strategy has the smaller rate;
    above it the all-equal strategy wins.
    """
    def gap(a: float) -> float:
        return rate_wishart(a) - rate_two_sparse(a)

    lo, hi = None, None
    grid = np.linspace(0.02, 0.98, 97)
    for a, b in zip(grid[:-1], grid[1:]):
        if gap(a) > 0.0 >= gap(b):
            lo, hi = a, b
            break
    if lo is None:
        raise DomainError("no strategy crossing found on (0, 1)")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def phase_transition_alpha_star_k(k: int, tol: float = 1e-6) -> float:
    """Largest alpha in (0, 1) where the all-equal and two-coordinate
    transforms agree for +/-1 entries at this k.

    Located by a grid scan for the last sign change of the strategy gap,
    then bisection.  k = 2 is degenerate (the strategies coincide) and
    returns the marker 1.0.
    """
    if not (2 <= k <= 12):
        raise DomainError(f"phase-transition scan supports 2 <= k <= 12, got k={k}")
    if k == 2:
        return 1.0

    spec_k = CgfSpec.for_direction(EntryDistribution.RADEMACHER, UnitVector.uniform(k))
    spec_2 = CgfSpec.for_direction(EntryDistribution.RADEMACHER, UnitVector.two_sparse(k))

    def gap(a: float) -> float:
        g_k = legendre_solve(spec_k, a).rate
        g_2 = legendre_solve(spec_2, a).rate
        if math.isinf(g_k):
            return math.inf
        return g_k - g_2

    grid = np.linspace(0.01, 0.99, 99)
    bracket = None
    for a, b in zip(grid[:-1], grid[1:]):
        if gap(a) > 0.0 >= gap(b):
            bracket = (a, b)
    if bracket is None:
        raise DomainError(f"no strategy crossing found on (0, 1) for k={k}")
    lo, hi = bracket
    while hi - lo > min(tol, 1e-7):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))
