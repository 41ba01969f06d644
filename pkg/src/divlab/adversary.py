"""Discriminators and the class-ratio-weighted adversarial game.

With mixture weight ``pi`` (the probability that an example is real), the
game value is

    V(D, Q) = pi E_P[log D] + (1 - pi) E_Q[log (1 - D)].

The best possible discriminator is the density ratio
``D*(x) = pi P(x) / (pi P(x) + (1 - pi) Q(x))``, and at that optimum the
value equals the generalized Jensen-Shannon divergence minus the binary
entropy of ``pi``.  That identity is what :func:`estimate_js_pi` exploits:
a tabular discriminator trained to convergence on the pi-weighted log
loss is exactly the empirical density ratio, so the estimate is the plug-in
divergence of the empirical distributions.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .dists import (
    DiscreteDist,
    Gaussian2D,
    IsotropicGaussian,
    RngSeed,
    sample_many,
)
from .divergences import MixtureWeight, Nats, js_pi
from .errors import DivergedTraining, EmptySamples, InvalidDistribution

_SIGMOID_CLIP = 60.0


def _sigmoid(a):
    return 1.0 / (1.0 + np.exp(-np.clip(a, -_SIGMOID_CLIP, _SIGMOID_CLIP)))


@dataclasses.dataclass(frozen=True, eq=False)
class TabularDiscriminator:
    """Per-symbol probability that the example is real."""

    prob_real: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.prob_real, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise InvalidDistribution("prob_real must be a non-empty vector")
        if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
            raise InvalidDistribution("prob_real values must lie in [0, 1]")
        arr = p.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "prob_real", arr)


def quadratic_features(points: np.ndarray) -> np.ndarray:
    """Feature map (x, y, x^2, y^2, xy) for 2-D points, shape (n, 5)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    x, y = pts[:, 0], pts[:, 1]
    return np.stack([x, y, x * x, y * y, x * y], axis=1)


@dataclasses.dataclass(frozen=True, eq=False)
class LogisticDiscriminator:
    """Logistic discriminator over quadratic features of 2-D points.

    Quadratic features make the exact density ratio of two Gaussians
    representable.
    """

    weights: np.ndarray
    bias: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (5,) or not np.all(np.isfinite(w)):
            raise InvalidDistribution("weights must be a finite vector of length 5")
        if not np.isfinite(self.bias):
            raise InvalidDistribution("bias must be finite")
        arr = w.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "weights", arr)
        object.__setattr__(self, "bias", float(self.bias))

    def prob_real(self, points: np.ndarray) -> np.ndarray:
        return _sigmoid(quadratic_features(points) @ self.weights + self.bias)


Discriminator = TabularDiscriminator | LogisticDiscriminator


def binary_entropy(w: MixtureWeight | float) -> float:
    """Entropy of a coin, in nats; 0 at the endpoints."""
    pi = w.pi if isinstance(w, MixtureWeight) else float(w)
    if not 0.0 <= pi <= 1.0:
        raise InvalidDistribution(f"weight must be in [0, 1], got {pi!r}")
    total = 0.0
    if pi > 0.0:
        total -= pi * math.log(pi)
    if pi < 1.0:
        total -= (1.0 - pi) * math.log(1.0 - pi)
    return total


def optimal_discriminator(
    p: DiscreteDist, q: DiscreteDist, w: MixtureWeight
) -> TabularDiscriminator:
    """The exact density-ratio discriminator for a known pair.

    Cells with no mass under either distribution default to ``pi`` (the
    prior probability of the real class).
    """
    if p.size != q.size:
        raise InvalidDistribution("distributions must share an alphabet")
    pi = w.pi
    num = pi * p.probs
    den = num + (1.0 - pi) * q.probs
    values = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), pi)
    return TabularDiscriminator(values)


def discriminator_value(
    p: DiscreteDist, q: DiscreteDist, w: MixtureWeight, d: TabularDiscriminator
) -> float:
    """Expected pi-weighted log-likelihood of discriminator ``d``, in nats.

    ``pi E_P[log d] + (1 - pi) E_Q[log (1 - d)]``; may be -inf if ``d``
    is fully confident on a supported cell.  Zero-mass cells never
    contribute, so the optimal discriminator's value is always finite.
    """
    if p.size != q.size or d.prob_real.size != p.size:
        raise InvalidDistribution("distributions and discriminator sizes differ")
    pi = w.pi
    dv = d.prob_real
    with np.errstate(divide="ignore"):
        log_d = np.log(dv)
        log_1md = np.log(1.0 - dv)
    mask_p = p.probs > 0.0
    mask_q = q.probs > 0.0
    real_term = float(np.sum(p.probs[mask_p] * log_d[mask_p])) if mask_p.any() else 0.0
    fake_term = float(np.sum(q.probs[mask_q] * log_1md[mask_q])) if mask_q.any() else 0.0
    return pi * real_term + (1.0 - pi) * fake_term


def _empirical(samples: np.ndarray, size: int) -> np.ndarray:
    counts = np.bincount(samples, minlength=size).astype(float)
    return counts / counts.sum()


def estimate_js_pi(
    samples_p: np.ndarray,
    samples_q: np.ndarray,
    w: MixtureWeight,
    support_size: int | None = None,
) -> Nats:
    """Estimate the generalized Jensen-Shannon divergence from samples.

    Fits the tabular discriminator that maximizes the pi-weighted log
    likelihood of the two sample sets (available in closed form: the
    empirical density ratio) and returns its value plus the binary
    entropy of pi.  Equivalently: the exact divergence of the empirical
    distributions.

    Raises:
        EmptySamples: if either sample set is empty.
    """
    sp = np.asarray(samples_p)
    sq = np.asarray(samples_q)
    if sp.size == 0 or sq.size == 0:
        raise EmptySamples("both sample sets must be non-empty")
    if not (np.issubdtype(sp.dtype, np.integer) and np.issubdtype(sq.dtype, np.integer)):
        raise InvalidDistribution("samples must be integer symbol indices")
    if sp.min() < 0 or sq.min() < 0:
        raise InvalidDistribution("samples must be nonnegative symbol indices")
    size = support_size or int(max(sp.max(), sq.max())) + 1
    if size <= int(max(sp.max(), sq.max())):
        raise InvalidDistribution("support_size too small for the samples")
    p_hat = DiscreteDist(_empirical(sp.reshape(-1), size))
    q_hat = DiscreteDist(_empirical(sq.reshape(-1), size))
    d_star = optimal_discriminator(p_hat, q_hat, w)
    value = discriminator_value(p_hat, q_hat, w, d_star)
    return Nats(value + binary_entropy(w))


# ---------------------------------------------------------------------------
# alternating training


@dataclasses.dataclass(frozen=True)
class AdvConfig:
    """Settings for :func:`train_generalized_adversarial`."""

    pi: MixtureWeight
    disc_steps: int = 5
    batch_size: int = 256
    disc_rate: float = 0.5
    gen_rate: float = 0.25
    rounds: int = 200
    seed: RngSeed = RngSeed(0)

    def __post_init__(self):
        if not isinstance(self.pi, MixtureWeight):
            raise InvalidDistribution("pi must be a MixtureWeight")
        if self.disc_steps < 1 or self.batch_size < 2 or self.rounds < 1:
            raise InvalidDistribution("disc_steps, batch_size, rounds must be positive")
        if not (self.disc_rate > 0.0 and self.gen_rate > 0.0):
            raise InvalidDistribution("learning rates must be > 0")


@dataclasses.dataclass(frozen=True, eq=False)
class AdversarialTrace:
    """Per-round diagnostics of an adversarial run.

    ``js_estimate`` is the discriminator value plus the binary entropy of
    pi (a lower bound on the true divergence when the discriminator is
    suboptimal).  ``summary`` tracks the generator: total variation to
    the target for discrete runs, the isotropic variance for Gaussians.
    """

    rounds: np.ndarray
    js_estimate: np.ndarray
    summary: np.ndarray
    summary_name: str

    def __post_init__(self):
        for name in ("rounds", "js_estimate", "summary"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


@dataclasses.dataclass(frozen=True, eq=False)
class AdversarialResult:
    generator: DiscreteDist | IsotropicGaussian
    discriminator: Discriminator
    trace: AdversarialTrace


def _class_counts(cfg: AdvConfig) -> tuple[int, int]:
    n_real = int(round(cfg.pi.pi * cfg.batch_size))
    n_real = min(max(n_real, 1), cfg.batch_size - 1)
    return n_real, cfg.batch_size - n_real


def train_generalized_adversarial(
    target: DiscreteDist | Gaussian2D, cfg: AdvConfig
) -> AdversarialResult:
    """Alternating pi-weighted adversarial training against ``target``.

    Discrete targets: tabular logistic discriminator trained on sampled
    batches with class ratio pi; the softmax generator descends the exact
    expected value over its full support.  Gaussian targets: logistic
    discriminator on quadratic features; an isotropic reparametrized
    generator (``mean + sigma * z``) descends pathwise gradients.

    Raises:
        DivergedTraining: if any parameter ever leaves the finite range.
    """
    if isinstance(target, DiscreteDist):
        return _train_discrete(target, cfg)
    if isinstance(target, Gaussian2D):
        return _train_gaussian(target, cfg)
    raise InvalidDistribution("target must be a DiscreteDist or Gaussian2D")


def _train_discrete(target: DiscreteDist, cfg: AdvConfig) -> AdversarialResult:
    pi = cfg.pi.pi
    k = target.size
    real_rng = cfg.seed.stream("real")
    fake_rng = cfg.seed.stream("fake")
    n_real, n_fake = _class_counts(cfg)

    disc_logits = np.zeros(k)
    gen_logits = np.zeros(k)
    rounds, estimates, tvs = [], [], []
    for t in range(cfg.rounds):
        gen_probs = _softmax(gen_logits)
        gen = DiscreteDist(gen_probs)
        for _ in range(cfg.disc_steps):
            d = _sigmoid(disc_logits)
            xr = sample_many(target, real_rng, n_real)
            xf = sample_many(gen, fake_rng, n_fake)
            real_freq = np.bincount(xr, minlength=k) / n_real
            fake_freq = np.bincount(xf, minlength=k) / n_fake
            grad = pi * real_freq * (1.0 - d) - (1.0 - pi) * fake_freq * d
            disc_logits = disc_logits + cfg.disc_rate * grad
        d = _sigmoid(disc_logits)
        # exact generator gradient: full enumeration over the support
        v = np.log(1.0 - d)
        g = (1.0 - pi) * gen_probs * (v - float(gen_probs @ v))
        gen_logits = gen_logits - cfg.gen_rate * g
        if not (np.all(np.isfinite(gen_logits)) and np.all(np.isfinite(disc_logits))):
            raise DivergedTraining(f"non-finite parameters at round {t}")
        disc = TabularDiscriminator(d)
        est = discriminator_value(target, gen, cfg.pi, disc) + binary_entropy(cfg.pi)
        rounds.append(t)
        estimates.append(est)
        tvs.append(0.5 * float(np.abs(gen_probs - target.probs).sum()))
    trace = AdversarialTrace(
        rounds=np.array(rounds), js_estimate=np.array(estimates),
        summary=np.array(tvs), summary_name="tv_to_target",
    )
    return AdversarialResult(
        generator=DiscreteDist(_softmax(gen_logits)),
        discriminator=TabularDiscriminator(_sigmoid(disc_logits)),
        trace=trace,
    )


def _softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - np.max(x))
    return e / e.sum()


def _feature_jacobian(points: np.ndarray, w: np.ndarray) -> np.ndarray:
    """d(w . features(u))/du for each point, shape (n, 2)."""
    x, y = points[:, 0], points[:, 1]
    jx = w[0] + 2.0 * w[2] * x + w[4] * y
    jy = w[1] + 2.0 * w[3] * y + w[4] * x
    return np.stack([jx, jy], axis=1)


def _train_gaussian(target: Gaussian2D, cfg: AdvConfig) -> AdversarialResult:
    pi = cfg.pi.pi
    real_rng = cfg.seed.stream("real")
    fake_rng = cfg.seed.stream("fake")
    init_rng = cfg.seed.stream("init")
    chol = np.linalg.cholesky(target.covariance)
    n_real, n_fake = _class_counts(cfg)

    def draw_real(rng, n):
        return rng.standard_normal((n, 2)) @ chol.T + target.mean

    # moment-matched initialization keeps the discriminator near chance
    warm = draw_real(init_rng, max(64, cfg.batch_size))
    mean = warm.mean(axis=0)
    log_var = math.log(float(warm.var(axis=0).mean()))

    weights = np.zeros(5)
    bias = 0.0
    rounds, estimates, variances = [], [], []
    for t in range(cfg.rounds):
        sigma = math.exp(0.5 * log_var)
        for _ in range(cfg.disc_steps):
            xr = draw_real(real_rng, n_real)
            zf = fake_rng.standard_normal((n_fake, 2))
            xf = mean + sigma * zf
            fr = quadratic_features(xr)
            ff = quadratic_features(xf)
            dr = _sigmoid(fr @ weights + bias)
            df = _sigmoid(ff @ weights + bias)
            grad_w = pi * (fr * (1.0 - dr)[:, None]).mean(axis=0) \
                - (1.0 - pi) * (ff * df[:, None]).mean(axis=0)
            grad_b = pi * float((1.0 - dr).mean()) - (1.0 - pi) * float(df.mean())
            weights = weights + cfg.disc_rate * grad_w
            bias = bias + cfg.disc_rate * grad_b
        # pathwise generator step through u = mean + sigma * z
        zf = fake_rng.standard_normal((n_fake, 2))
        xf = mean + sigma * zf
        df = _sigmoid(quadratic_features(xf) @ weights + bias)
        jac = _feature_jacobian(xf, weights)
        du = -df[:, None] * jac  # d log(1 - D)/du
        grad_mean = (1.0 - pi) * du.mean(axis=0)
        grad_logvar = (1.0 - pi) * float(
            (du * zf).sum(axis=1).mean()
        ) * 0.5 * sigma
        mean = mean - cfg.gen_rate * grad_mean
        log_var = log_var - cfg.gen_rate * grad_logvar
        if not (
            np.all(np.isfinite(mean))
            and math.isfinite(log_var)
            and np.all(np.isfinite(weights))
            and math.isfinite(bias)
        ):
            raise DivergedTraining(f"non-finite parameters at round {t}")
        # Monte Carlo value of the current pair, on fresh batches
        xr = draw_real(real_rng, n_real)
        dr = _sigmoid(quadratic_features(xr) @ weights + bias)
        est = pi * float(np.log(np.maximum(dr, 1e-300)).mean()) + (1.0 - pi) * float(
            np.log(np.maximum(1.0 - df, 1e-300)).mean()
        ) + binary_entropy(cfg.pi)
        rounds.append(t)
        estimates.append(est)
        variances.append(math.exp(log_var))
    trace = AdversarialTrace(
        rounds=np.array(rounds), js_estimate=np.array(estimates),
        summary=np.array(variances), summary_name="variance",
    )
    return AdversarialResult(
        generator=IsotropicGaussian(mean, math.exp(log_var)),
        discriminator=LogisticDiscriminator(weights, bias),
        trace=trace,
    )


def js_identity_gap(p: DiscreteDist, q: DiscreteDist, w: MixtureWeight) -> float:
    """|value(D*) + H_b(pi) - js_pi|; should vanish to round-off."""
    d = optimal_discriminator(p, q, w)
    lhs = discriminator_value(p, q, w, d) + binary_entropy(w)
    return abs(lhs - float(js_pi(p, q, w)))
