"""Minimizers for the discrete objectives and the isotropic Gaussian fit.

Two search routines share one backtracking gradient-descent engine:

* :func:`minimize_discrete` parametrizes a candidate distribution through
  softmax logits (:class:`SimplexLogits`) and uses analytic gradients.
* :func:`fit_isotropic` minimizes the grid-quadrature generalized
  Jensen-Shannon divergence over (mean_x, mean_y, log variance) with
  central finite-difference gradients.

:func:`brute_force_minimize` is the independent cross-check: it evaluates
an objective on every point of a regular simplex grid and returns the
exact grid argmin (ties resolved lexicographically).
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .dists import (
    DiscreteDist,
    DiscreteJoint,
    Gaussian2D,
    IsotropicGaussian,
    RngSeed,
    as_gaussian2d,
    default_bounds,
    grid_from_gaussian,
)
from .divergences import MixtureWeight, Nats, js_pi_grid, js_pi_value, kl_value
from .errors import (
    DegenerateGrid,
    GridTooLarge,
    InvalidDistribution,
    NonFiniteObjective,
    NumericFault,
)
from .objectives import ObjectiveKind

#: smallest line-search step before a descent attempt is abandoned
LINE_SEARCH_FLOOR = 1e-12
#: slack allowed when checking that a trace never increases
TRACE_SLACK = 1e-10
#: hard cap on brute-force grid enumeration
MAX_GRID_POINTS = 10_000_000


@dataclasses.dataclass(frozen=True, eq=False)
class SimplexLogits:
    """Unconstrained softmax parametrization of a distribution.

    ``probs() = softmax(logits)`` over all cells, which is strictly
    positive for every finite logits vector.
    """

    logits: np.ndarray

    def __post_init__(self):
        logits = np.asarray(self.logits, dtype=float)
        if logits.size == 0 or not np.all(np.isfinite(logits)):
            raise InvalidDistribution("logits must be non-empty and finite")
        arr = logits.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "logits", arr)

    @classmethod
    def zeros(cls, shape) -> "SimplexLogits":
        return cls(np.zeros(shape))

    def probs(self) -> np.ndarray:
        return _softmax(self.logits.reshape(-1)).reshape(self.logits.shape)

    def to_dist(self) -> DiscreteDist:
        if self.logits.ndim != 1:
            raise InvalidDistribution("to_dist needs 1-d logits")
        return DiscreteDist(self.probs())

    def to_joint(self) -> DiscreteJoint:
        if self.logits.ndim != 2:
            raise InvalidDistribution("to_joint needs 2-d logits")
        return DiscreteJoint(self.probs())


def _softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - np.max(x))
    return e / e.sum()


@dataclasses.dataclass(frozen=True)
class OptConfig:
    """Settings shared by the iterative minimizers.

    ``restarts`` counts descent runs in :func:`minimize_discrete`: run 0
    starts from zero logits (the uniform distribution), later runs from
    standard-normal logits drawn from streams derived from ``seed``.
    """

    max_iters: int = 500
    step_size: float = 1.0
    grad_tolerance: float = 1e-8
    objective_tolerance: float = 1e-12
    fd_step: float = 1e-4
    seed: RngSeed = RngSeed(0)
    restarts: int = 1

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidDistribution("max_iters must be >= 1")
        for name in ("step_size", "grad_tolerance", "objective_tolerance", "fd_step"):
            if not getattr(self, name) > 0.0:
                raise InvalidDistribution(f"{name} must be > 0")
        if self.restarts < 1:
            raise InvalidDistribution("restarts must be >= 1")


@dataclasses.dataclass(frozen=True, eq=False)
class OptResult:
    """Outcome of a minimization run.

    ``params`` is the raw parameter vector of the winning run (flattened
    logits for discrete problems, ``(mean_x, mean_y, log_var)`` for the
    Gaussian fit, final probabilities for brute force).  ``minimizer``
    is the decoded distribution object.
    """

    params: np.ndarray
    objective_value: Nats
    trace: np.ndarray
    converged: bool
    iterations: int
    minimizer: object = None

    def __post_init__(self):
        trace = np.asarray(self.trace, dtype=float)
        if trace.size == 0:
            raise NumericFault("trace must be non-empty")
        if np.any(np.diff(trace) > TRACE_SLACK):
            raise NumericFault("objective trace increased beyond slack")
        if float(self.objective_value) != float(trace[-1]):
            raise NumericFault("objective_value must equal the last trace entry")
        frozen = trace.copy()
        frozen.flags.writeable = False
        object.__setattr__(self, "trace", frozen)
        params = np.asarray(self.params, dtype=float).copy()
        params.flags.writeable = False
        object.__setattr__(self, "params", params)


# ---------------------------------------------------------------------------
# shared descent engine


def _descend(value_fn, grad_fn, x0: np.ndarray, cfg: OptConfig):
    """Backtracking gradient descent; the step halves until descent."""
    x = np.array(x0, dtype=float)
    f = float(value_fn(x))
    if not np.isfinite(f):
        raise NonFiniteObjective("objective is not finite at the initial point")
    trace = [f]
    converged = False
    iterations = 0
    for _ in range(cfg.max_iters):
        g = grad_fn(x)
        if float(np.max(np.abs(g))) < cfg.grad_tolerance:
            converged = True
            break
        step = cfg.step_size
        accepted = False
        while step >= LINE_SEARCH_FLOOR:
            cand = x - step * g
            fc = float(value_fn(cand))
            if fc < f:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        iterations += 1
        drop = f - fc
        x, f = cand, fc
        trace.append(f)
        if drop < cfg.objective_tolerance:
            converged = True
            break
    else:
        converged = float(np.max(np.abs(grad_fn(x)))) < cfg.grad_tolerance
    return x, f, np.asarray(trace), converged, iterations


# ---------------------------------------------------------------------------
# discrete objectives on raw arrays


def _target_array(target: DiscreteDist | DiscreteJoint) -> np.ndarray:
    return target.probs if isinstance(target, DiscreteDist) else target.table


def _check_kind_supported(kind: ObjectiveKind, target) -> None:
    if kind.tag in ("alternative", "ss") and not isinstance(target, DiscreteJoint):
        raise InvalidDistribution(f"{kind.tag} objective needs a joint target")


def _value_flat(kind: ObjectiveKind, p: np.ndarray, q_flat: np.ndarray) -> float:
    """Objective value for a flat candidate; p keeps its natural shape."""
    q = q_flat.reshape(p.shape)
    if kind.tag == "ml":
        return kl_value(p.reshape(-1), q_flat)
    if kind.tag == "perceptual_kl":
        return kl_value(q_flat, p.reshape(-1))
    if kind.tag == "js_pi":
        return js_pi_value(p.reshape(-1), q_flat, kind.pi)
    # ss / alternative on joint tables
    eps = kind.epsilon if kind.tag == "ss" else 0.0
    first = kl_value(p.sum(axis=1), q.sum(axis=1))
    if math.isinf(first):
        return math.inf
    total = first
    if eps > 0.0:
        cond = _cond_term_value(p, q)
        if math.isinf(cond):
            return math.inf
        total += eps * cond
    if eps < 1.0:
        repl = _repl_term_value(p, q)
        if math.isinf(repl):
            return math.inf
        total += (1.0 - eps) * repl
    return total


def _cond_term_value(p: np.ndarray, q: np.ndarray) -> float:
    p1, q1 = p.sum(axis=1), q.sum(axis=1)
    total = 0.0
    for z in range(p.shape[0]):
        if p1[z] <= 0.0:
            continue
        term = kl_value(p[z] / p1[z], q[z] / q1[z])
        if math.isinf(term):
            return math.inf
        total += p1[z] * term
    return total


def _repl_term_value(p: np.ndarray, q: np.ndarray) -> float:
    p2, q1 = p.sum(axis=0), q.sum(axis=1)
    total = 0.0
    for z in range(q.shape[0]):
        if q1[z] <= 0.0:
            continue
        term = kl_value(p2, q[z] / q1[z])
        if math.isinf(term):
            return math.inf
        total += q1[z] * term
    return total


def _grad_q(kind: ObjectiveKind, p: np.ndarray, q_flat: np.ndarray) -> np.ndarray:
    """Elementwise d(objective)/d(q) for a strictly positive candidate."""
    pf = p.reshape(-1)
    if kind.tag == "ml":
        return -pf / q_flat
    if kind.tag == "perceptual_kl":
        with np.errstate(divide="ignore"):
            return np.log(q_flat / pf) + 1.0
    if kind.tag == "js_pi":
        pi = kind.pi
        m = pi * pf + (1.0 - pi) * q_flat
        return (1.0 - pi) * np.log(q_flat / m)
    eps = kind.epsilon if kind.tag == "ss" else 0.0
    q = q_flat.reshape(p.shape)
    grad = np.zeros_like(q)
    p1, q1 = p.sum(axis=1), q.sum(axis=1)
    grad += (-p1 / q1)[:, None]
    if eps > 0.0:
        # d/dQ_ab of sum_z P1_z KL[P_{.|z} || Q_{.|z}] = -P_ab / Q_ab + P1_a / Q1_a
        grad += eps * (-p / q + (p1 / q1)[:, None])
    if eps < 1.0:
        p2 = p.sum(axis=0)
        cond = q / q1[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            kl_rows = np.array(
                [kl_value(p2, cond[z]) for z in range(q.shape[0])]
            )
        grad += (1.0 - eps) * (
            kl_rows[:, None] + 1.0 - p2[None, :] / cond
        )
    return grad.reshape(-1)


def _logits_grad(kind: ObjectiveKind, p: np.ndarray, logits: np.ndarray) -> np.ndarray:
    q = _softmax(logits)
    g = _grad_q(kind, p, q)
    return q * (g - float(q @ g))


def objective_from_logits(
    kind: ObjectiveKind, target: DiscreteDist | DiscreteJoint, logits: np.ndarray
) -> float:
    """Objective value at ``softmax(logits)``; the optimizer's view."""
    p = _target_array(target)
    return _value_flat(kind, p, _softmax(np.asarray(logits, float).reshape(-1)))


def objective_gradient(
    kind: ObjectiveKind, target: DiscreteDist | DiscreteJoint, logits: np.ndarray
) -> np.ndarray:
    """Analytic gradient of :func:`objective_from_logits` in the logits.

    The result has the same shape as ``logits``.
    """
    p = _target_array(target)
    logits = np.asarray(logits, dtype=float)
    return _logits_grad(kind, p, logits.reshape(-1)).reshape(logits.shape)


def minimize_discrete(
    kind: ObjectiveKind,
    target: DiscreteDist | DiscreteJoint,
    cfg: OptConfig | None = None,
) -> OptResult:
    """Minimize a discrete objective over the softmax-parametrized simplex.

    Runs ``cfg.restarts`` descents (zero logits first, then random inits
    from seed-derived streams) and returns the best run.  Identical
    configs and seeds produce bit-identical results.

    Raises:
        NonFiniteObjective: if the objective is infinite at the strictly
            positive initializer (e.g. ``perceptual_kl`` against a target
            with empty cells).
    """
    cfg = cfg or OptConfig()
    _check_kind_supported(kind, target)
    p = _target_array(target)
    n = p.size

    def value_fn(x):
        return _value_flat(kind, p, _softmax(x))

    def grad_fn(x):
        return _logits_grad(kind, p, x)

    best = None
    for run in range(cfg.restarts):
        if run == 0:
            x0 = np.zeros(n)
        else:
            x0 = cfg.seed.stream("restart", run).standard_normal(n)
        x, f, trace, converged, iters = _descend(value_fn, grad_fn, x0, cfg)
        if best is None or f < best[1]:
            best = (x, f, trace, converged, iters)
    x, f, trace, converged, iters = best
    probs = _softmax(x).reshape(p.shape)
    minimizer = (
        DiscreteDist(probs) if isinstance(target, DiscreteDist) else DiscreteJoint(probs)
    )
    return OptResult(
        params=x,
        objective_value=Nats(f),
        trace=trace,
        converged=converged,
        iterations=iters,
        minimizer=minimizer,
    )


# ---------------------------------------------------------------------------
# brute force on a simplex grid


def _compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to
    ``total``, in ascending lexicographic order."""
    if parts == 1:
        return np.array([[total]], dtype=np.int32)
    blocks = []
    for first in range(total + 1):
        rest = _compositions(total - first, parts - 1)
        head = np.full((rest.shape[0], 1), first, dtype=np.int32)
        blocks.append(np.hstack([head, rest]))
    return np.vstack(blocks)


def _batched_values(kind: ObjectiveKind, p: np.ndarray, qs: np.ndarray) -> np.ndarray:
    """Objective values for many candidates at once; rows may be +inf."""
    pf = p.reshape(-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind.tag == "ml":
            mask = pf > 0.0
            logq = np.log(qs[:, mask])
            vals = np.sum(pf[mask] * (np.log(pf[mask]) - logq), axis=1)
        elif kind.tag == "perceptual_kl":
            terms = np.where(qs > 0.0, qs * (np.log(qs) - np.log(pf)), 0.0)
            vals = terms.sum(axis=1)
        elif kind.tag == "js_pi":
            pi = kind.pi
            m = pi * pf + (1.0 - pi) * qs
            tp = np.where(pf > 0.0, pf * (np.log(np.where(pf > 0, pf, 1.0)) - np.log(m)), 0.0)
            tq = np.where(qs > 0.0, qs * (np.log(np.where(qs > 0, qs, 1.0)) - np.log(m)), 0.0)
            vals = pi * tp.sum(axis=1) + (1.0 - pi) * tq.sum(axis=1)
        else:  # ss / alternative
            eps = kind.epsilon if kind.tag == "ss" else 0.0
            k = p.shape[0]
            q3 = qs.reshape(-1, k, k)
            p1 = p.sum(axis=1)
            q1 = q3.sum(axis=2)
            m1 = p1 > 0.0
            vals = np.sum(p1[m1] * (np.log(p1[m1]) - np.log(q1[:, m1])), axis=1)
            logq3 = np.log(q3)
            logq1 = np.log(q1)
            if eps > 0.0:
                cond = np.zeros(q3.shape[0])
                for z in range(k):
                    if p1[z] <= 0.0:
                        continue
                    pc = p[z] / p1[z]
                    mz = pc > 0.0
                    inner = np.sum(pc[mz] * (np.log(pc[mz]) - logq3[:, z, mz]), axis=1)
                    cond += p1[z] * (inner + logq1[:, z])
                vals = vals + eps * cond
            if eps < 1.0:
                p2 = p.sum(axis=0)
                m2 = p2 > 0.0
                neg_h = float(np.sum(p2[m2] * np.log(p2[m2])))
                inner = neg_h - np.sum(p2[m2] * logq3[:, :, m2], axis=2) + logq1
                repl = np.where(q1 > 0.0, q1 * inner, 0.0).sum(axis=1)
                vals = vals + (1.0 - eps) * repl
        vals = np.where(np.isnan(vals), np.inf, vals)
    return vals


def brute_force_minimize(
    kind: ObjectiveKind,
    target: DiscreteDist | DiscreteJoint,
    grid_points: int,
) -> OptResult:
    """Exact argmin of an objective over a regular simplex grid.

    ``grid_points`` is the number of grid values per axis, so the spacing
    is ``1 / (grid_points - 1)``.  The total number of grid points (the
    number of compositions) must stay within ``MAX_GRID_POINTS``.

    Ties are broken by ascending lexicographic order of the table cells.
    """
    cfg_checked = grid_points >= 2
    if not cfg_checked:
        raise InvalidDistribution("grid_points must be >= 2")
    _check_kind_supported(kind, target)
    p = _target_array(target)
    m = p.size
    steps = grid_points - 1
    n_points = math.comb(steps + m - 1, m - 1)
    if n_points > MAX_GRID_POINTS:
        raise GridTooLarge(
            f"simplex grid has {n_points} points (cap {MAX_GRID_POINTS})"
        )
    counts = _compositions(steps, m)
    best_val = math.inf
    best_row = None
    chunk = 200_000
    for start in range(0, counts.shape[0], chunk):
        qs = counts[start : start + chunk].astype(float) / steps
        vals = _batched_values(kind, p, qs)
        idx = int(np.argmin(vals))
        if vals[idx] < best_val:
            best_val = float(vals[idx])
            best_row = qs[idx].copy()
    probs = best_row.reshape(p.shape)
    minimizer = (
        DiscreteDist(probs) if isinstance(target, DiscreteDist) else DiscreteJoint(probs)
    )
    return OptResult(
        params=best_row,
        objective_value=Nats(best_val),
        trace=np.array([best_val]),
        converged=True,
        iterations=n_points,
        minimizer=minimizer,
    )


# ---------------------------------------------------------------------------
# Gaussian fits


def ml_isotropic_closed_form(p: Gaussian2D | IsotropicGaussian) -> IsotropicGaussian:
    """Isotropic minimizer of KL[P || Q]: the arithmetic eigenvalue mean."""
    full = as_gaussian2d(p)
    return IsotropicGaussian(full.mean, float(np.trace(full.covariance)) / 2.0)


def exclusive_isotropic_closed_form(
    p: Gaussian2D | IsotropicGaussian,
) -> IsotropicGaussian:
    """Isotropic minimizer of KL[Q || P]: the harmonic eigenvalue mean."""
    full = as_gaussian2d(p)
    inv = np.linalg.inv(full.covariance)
    return IsotropicGaussian(full.mean, 2.0 / float(np.trace(inv)))


def finite_difference_gradient(fn, params: np.ndarray, step: float) -> np.ndarray:
    """Central-difference gradient of a scalar function.

    Raises:
        NonFiniteObjective: if any probe value is non-finite.
    """
    if not step > 0.0:
        raise InvalidDistribution("step must be > 0")
    params = np.asarray(params, dtype=float)
    grad = np.empty_like(params)
    for i in range(params.size):
        probe = params.copy()
        probe.flat[i] = params.flat[i] + step
        hi = float(fn(probe))
        probe.flat[i] = params.flat[i] - step
        lo = float(fn(probe))
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NonFiniteObjective(f"non-finite probe at coordinate {i}")
        grad.flat[i] = (hi - lo) / (2.0 * step)
    return grad


#: default settings for the quadrature Gaussian fit; the large initial step
#: compensates for objective values that scale with the mixture weight
FIT_CONFIG = OptConfig(max_iters=300, step_size=32.0, grad_tolerance=1e-9,
                       objective_tolerance=1e-14)


def fit_isotropic(
    p: Gaussian2D | IsotropicGaussian,
    w: MixtureWeight,
    bounds=None,
    resolution: int = 256,
    cfg: OptConfig | None = None,
) -> IsotropicGaussian:
    """Fit an isotropic Gaussian to ``p`` by minimizing the grid-quadrature
    generalized Jensen-Shannon divergence with weight ``w``.

    The parameters are ``(mean_x, mean_y, log variance)``; gradients are
    central finite differences with step ``cfg.fd_step``.  Both densities
    are evaluated on the same grid, which defaults to ``p``'s
    :func:`~divlab.dists.default_bounds` window.
    """
    cfg = cfg or FIT_CONFIG
    full = as_gaussian2d(p)
    if bounds is None:
        bounds = default_bounds(full)
    p_grid = grid_from_gaussian(full, bounds, resolution)

    def value_fn(params):
        cand = IsotropicGaussian(params[:2], float(np.exp(params[2])))
        try:
            q_grid = grid_from_gaussian(cand, bounds, resolution)
        except DegenerateGrid:
            return math.inf
        return float(js_pi_grid(p_grid, q_grid, w))

    def grad_fn(params):
        return finite_difference_gradient(value_fn, params, cfg.fd_step)

    var0 = float(np.trace(full.covariance)) / 2.0
    x0 = np.array([full.mean[0], full.mean[1], np.log(var0)])
    x, _, _, _, _ = _descend(value_fn, grad_fn, x0, cfg)
    return IsotropicGaussian(x[:2], float(np.exp(x[2])))
