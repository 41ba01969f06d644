"""Scheduled-sampling training on tabular autoregressive models.

The training step mirrors the sampling procedure it studies: for every
position, the loss is the negative log-probability of the *real* next
symbol given the *current* prefix, but each prefix symbol is kept real
only with probability epsilon (the coin); otherwise it is replaced by a
draw from the model's own predictive row.  Updates are exponentiated
gradient steps on the visited rows, applied after the full pass over a
sequence, so within-sequence sampling always uses pre-update rows.

At epsilon = 1 the replacement branch is never taken and no replacement
randomness is consumed, so scheduled sampling is bit-identical to plain
teacher forcing (:func:`ml_train_step`) on the same data.

The scan utilities compare what training converges to against the exact
minimizers of the blended objective, exposing the pull toward factorized
solutions as epsilon decreases.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np

from .dists import (
    DiscreteDist,
    DiscreteJoint,
    RngSeed,
    TabularAutoregressive,
    _sample_index,
)
from .divergences import total_variation
from .errors import InvalidDistribution
from .objectives import ObjectiveKind, SSWeight
from .optimize import OptConfig, brute_force_minimize, minimize_discrete

#: largest supported exhaustive path table (alphabet_size ** length)
MAX_PATHS = 4096


# ---------------------------------------------------------------------------
# schedules


@dataclasses.dataclass(frozen=True)
class SSSchedule:
    """How the keep-probability epsilon evolves over training steps."""

    kind: str
    epsilon: float = 1.0
    epsilon_start: float = 1.0
    epsilon_end: float = 0.0
    steps: int = 1
    rate: float = 1.0

    _KINDS = ("constant", "linear", "inverse_sigmoid")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise InvalidDistribution(f"unknown schedule kind {self.kind!r}")
        for name in ("epsilon", "epsilon_start", "epsilon_end"):
            v = float(getattr(self, name))
            if not 0.0 <= v <= 1.0:
                raise InvalidDistribution(f"{name} must be in [0, 1]")
        if self.steps < 1:
            raise InvalidDistribution("steps must be >= 1")
        if not self.rate > 0.0:
            raise InvalidDistribution("rate must be > 0")

    @classmethod
    def constant(cls, epsilon: float) -> "SSSchedule":
        return cls("constant", epsilon=float(epsilon))

    @classmethod
    def linear_anneal(
        cls, steps: int, epsilon_start: float = 1.0, epsilon_end: float = 0.0
    ) -> "SSSchedule":
        return cls(
            "linear",
            epsilon_start=float(epsilon_start),
            epsilon_end=float(epsilon_end),
            steps=int(steps),
        )

    @classmethod
    def inverse_sigmoid_anneal(cls, rate: float, steps: int) -> "SSSchedule":
        return cls("inverse_sigmoid", rate=float(rate), steps=int(steps))

    def epsilon_at(self, step: int) -> float:
        """Keep-probability for 0-based training step ``step``."""
        if step < 0:
            raise InvalidDistribution("step must be >= 0")
        if self.kind == "constant":
            return self.epsilon
        t = min(step, self.steps)
        if self.kind == "linear":
            if self.steps == 1:
                return self.epsilon_end if step >= 1 else self.epsilon_start
            frac = min(step, self.steps - 1) / (self.steps - 1)
            return self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)
        # inverse sigmoid decay from ~1 toward 0, speed set by rate
        return min(1.0, self.rate / (self.rate + math.exp(t / self.rate)))


# ---------------------------------------------------------------------------
# single steps


def _eg_update(probs: np.ndarray, target: int, step_size: float) -> np.ndarray:
    """Exponentiated-gradient step of -log p[target]; renormalized."""
    grad = probs.copy()
    grad[target] -= 1.0
    new = probs * np.exp(-step_size * grad)
    return new / new.sum()


def _as_epsilon(e) -> float:
    return e.epsilon if isinstance(e, SSWeight) else SSWeight(float(e)).epsilon


def _check_sequence(model: TabularAutoregressive, sequence) -> tuple[int, ...]:
    seq = tuple(int(s) for s in sequence)
    if len(seq) != model.length:
        raise InvalidDistribution("sequence length does not match the model")
    if any(not 0 <= s < model.alphabet_size for s in seq):
        raise InvalidDistribution("sequence has out-of-range symbols")
    return seq


def _apply_visits(model, visits, step_size):
    rows = dict(model.conditionals)
    for prefix, target in visits:
        rows[prefix] = DiscreteDist(_eg_update(rows[prefix].probs, target, step_size))
    return TabularAutoregressive(model.length, model.alphabet_size, rows)


def ss_train_step(
    model: TabularAutoregressive,
    sequence: Sequence[int],
    e: SSWeight | float,
    step_size: float,
    rng: np.random.Generator,
) -> tuple[TabularAutoregressive, float]:
    """One scheduled-sampling step on one sequence.

    Returns the updated model and the sequence loss (sum over positions of
    the negative log-probability of the real symbol given the prefix that
    was actually fed to the model).  Coins and replacement draws consume
    ``rng`` only for prefix-feeding positions, and only when epsilon is
    strictly between 0 and 1 (the coin) or the symbol is replaced.
    """
    eps = _as_epsilon(e)
    seq = _check_sequence(model, sequence)
    prefix: tuple[int, ...] = ()
    visits = []
    loss = 0.0
    for n in range(model.length):
        row = model.row(prefix)
        real = seq[n]
        p = row[real]
        loss += math.inf if p <= 0.0 else -math.log(p)
        visits.append((prefix, real))
        if n + 1 < model.length:
            if eps >= 1.0:
                keep = True
            elif eps <= 0.0:
                keep = False
            else:
                keep = float(rng.random()) < eps
            nxt = real if keep else _sample_index(row.probs, float(rng.random()))
            prefix = prefix + (int(nxt),)
    return _apply_visits(model, visits, step_size), loss


def ml_train_step(
    model: TabularAutoregressive,
    sequence: Sequence[int],
    step_size: float,
) -> tuple[TabularAutoregressive, float]:
    """One teacher-forcing step: every prefix symbol is the real one."""
    seq = _check_sequence(model, sequence)
    visits = []
    loss = 0.0
    for n in range(model.length):
        p = model.row(seq[:n])[seq[n]]
        loss += math.inf if p <= 0.0 else -math.log(p)
        visits.append((seq[:n], seq[n]))
    return _apply_visits(model, visits, step_size), loss


def argmax_variant_step(
    model: TabularAutoregressive,
    sequence: Sequence[int],
    e: SSWeight | float,
    step_size: float,
    rng: np.random.Generator | None = None,
) -> tuple[TabularAutoregressive, float]:
    """Scheduled sampling with argmax replacement instead of sampling.

    The replaced symbol is the mode of the predictive row (ties go to the
    lowest index), so replacement itself consumes no randomness; ``rng``
    is only needed for the keep/replace coin when 0 < epsilon < 1.
    """
    eps = _as_epsilon(e)
    seq = _check_sequence(model, sequence)
    if 0.0 < eps < 1.0 and rng is None:
        raise InvalidDistribution("rng is required for the coin when 0 < epsilon < 1")
    prefix: tuple[int, ...] = ()
    visits = []
    loss = 0.0
    for n in range(model.length):
        row = model.row(prefix)
        real = seq[n]
        p = row[real]
        loss += math.inf if p <= 0.0 else -math.log(p)
        visits.append((prefix, real))
        if n + 1 < model.length:
            if eps >= 1.0:
                keep = True
            elif eps <= 0.0:
                keep = False
            else:
                keep = float(rng.random()) < eps
            nxt = real if keep else int(np.argmax(row.probs))
            prefix = prefix + (int(nxt),)
    return _apply_visits(model, visits, step_size), loss


# ---------------------------------------------------------------------------
# full training runs


@dataclasses.dataclass(frozen=True)
class SSTrainConfig:
    """Settings for :func:`ss_train`.

    Stream keys: training data come from ``seed.stream("data")``, held-out
    data from ``seed.stream("heldout")``, coins from ``seed.stream("coin")``
    and replacement draws from ``seed.stream("sample")``, so runs that
    differ only in epsilon see identical data.
    """

    num_sequences: int
    step_size: float = 0.05
    step_decay: float = 0.0  # step at t is step_size / (1 + step_decay * t)
    seed: RngSeed = RngSeed(0)
    checkpoint_every: int | None = None
    heldout_size: int = 2048

    def __post_init__(self):
        if self.num_sequences < 1:
            raise InvalidDistribution("num_sequences must be >= 1")
        if not self.step_size > 0.0:
            raise InvalidDistribution("step_size must be > 0")
        if self.step_decay < 0.0:
            raise InvalidDistribution("step_decay must be >= 0")
        if self.checkpoint_every is not None and self.checkpoint_every < 1:
            raise InvalidDistribution("checkpoint_every must be >= 1")
        if self.heldout_size < 1:
            raise InvalidDistribution("heldout_size must be >= 1")


@dataclasses.dataclass(frozen=True, eq=False)
class TrainingTrace:
    """Checkpoint rows recorded during :func:`ss_train`."""

    steps: np.ndarray
    epsilons: np.ndarray
    heldout_loglik: np.ndarray  # nats per symbol, higher is better
    tv_to_target: np.ndarray
    tv_to_factorized: np.ndarray

    def __post_init__(self):
        arrays = {}
        n = None
        for name in (
            "steps", "epsilons", "heldout_loglik", "tv_to_target", "tv_to_factorized"
        ):
            arr = np.asarray(getattr(self, name), dtype=float)
            if n is None:
                n = arr.size
            if arr.ndim != 1 or arr.size != n or n == 0:
                raise InvalidDistribution("trace arrays must be 1-d, non-empty, equal length")
            arr = arr.copy()
            arr.flags.writeable = False
            arrays[name] = arr
        if np.any(np.diff(arrays["steps"]) <= 0):
            raise InvalidDistribution("checkpoint steps must be strictly increasing")
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    def as_rows(self):
        return [
            (int(s), e, ll, tp, tf)
            for s, e, ll, tp, tf in zip(
                self.steps, self.epsilons, self.heldout_loglik,
                self.tv_to_target, self.tv_to_factorized,
            )
        ]


def _truth_model(target: DiscreteJoint | TabularAutoregressive) -> TabularAutoregressive:
    if isinstance(target, DiscreteJoint):
        return TabularAutoregressive.from_joint(target)
    if isinstance(target, TabularAutoregressive):
        return target
    raise InvalidDistribution("target must be a DiscreteJoint or TabularAutoregressive")


def _draw_sequences(
    truth: TabularAutoregressive, rng: np.random.Generator, n: int
) -> np.ndarray:
    """Draw n i.i.d. sequences from the exact path distribution."""
    paths = truth.path_probabilities().reshape(-1)
    cdf = np.cumsum(paths)
    idx = np.minimum(
        np.searchsorted(cdf, rng.random(n), side="right"), paths.size - 1
    )
    shape = (truth.alphabet_size,) * truth.length
    return np.stack(np.unravel_index(idx, shape), axis=1).astype(np.int64)


def _factorized_paths(paths: np.ndarray) -> np.ndarray:
    """Product of the per-position marginals of a path table."""
    out = np.ones(())
    ndim = paths.ndim
    for axis in range(ndim):
        marg = paths.sum(axis=tuple(a for a in range(ndim) if a != axis))
        out = np.multiply.outer(out, marg)
    return out


def ss_train(
    target: DiscreteJoint | TabularAutoregressive,
    schedule: SSSchedule,
    cfg: SSTrainConfig,
) -> tuple[TabularAutoregressive, TrainingTrace]:
    """Train a uniform-initialized tabular model by scheduled sampling.

    Checkpoints record the step count, the current epsilon, the held-out
    log-likelihood (nats per symbol), and total variation between the
    model's path distribution and (a) the target's and (b) the target's
    factorized counterpart.
    """
    truth = _truth_model(target)
    n_sym, length = truth.alphabet_size, truth.length
    if n_sym**length > MAX_PATHS:
        raise InvalidDistribution(
            f"path table too large: {n_sym}**{length} > {MAX_PATHS}"
        )
    data_rng = cfg.seed.stream("data")
    coin_rng = cfg.seed.stream("coin")
    samp_rng = cfg.seed.stream("sample")
    held_rng = cfg.seed.stream("heldout")
    train = _draw_sequences(truth, data_rng, cfg.num_sequences)
    held = _draw_sequences(truth, held_rng, cfg.heldout_size)

    target_paths = truth.path_probabilities()
    fact_paths = _factorized_paths(target_paths)

    init = TabularAutoregressive.uniform(length, n_sym)
    rows = {p: d.probs.copy() for p, d in init.conditionals.items()}

    every = cfg.checkpoint_every or max(1, cfg.num_sequences // 20)

    def model_paths() -> np.ndarray:
        return TabularAutoregressive(
            length, n_sym, {p: DiscreteDist(v) for p, v in rows.items()}
        ).path_probabilities()

    def heldout_ll() -> float:
        total = 0.0
        for seq in held:
            for n in range(length):
                total += math.log(rows[tuple(seq[:n])][seq[n]])
        return total / (held.shape[0] * length)

    records = []

    def checkpoint(step: int, eps: float) -> None:
        paths = model_paths()
        records.append((
            step,
            eps,
            heldout_ll(),
            0.5 * float(np.abs(paths - target_paths).sum()),
            0.5 * float(np.abs(paths - fact_paths).sum()),
        ))

    for t in range(cfg.num_sequences):
        eps = schedule.epsilon_at(t)
        step = cfg.step_size / (1.0 + cfg.step_decay * t)
        seq = train[t]
        prefix: tuple[int, ...] = ()
        visits = []
        for n in range(length):
            row = rows[prefix]
            real = int(seq[n])
            visits.append((prefix, real))
            if n + 1 < length:
                if eps >= 1.0:
                    keep = True
                elif eps <= 0.0:
                    keep = False
                else:
                    keep = float(coin_rng.random()) < eps
                nxt = real if keep else _sample_index(row, float(samp_rng.random()))
                prefix = prefix + (int(nxt),)
        for pfx, tgt in visits:
            rows[pfx] = _eg_update(rows[pfx], tgt, step)
        if (t + 1) % every == 0 or t + 1 == cfg.num_sequences:
            checkpoint(t + 1, eps)

    model = TabularAutoregressive(
        length, n_sym, {p: DiscreteDist(v) for p, v in rows.items()}
    )
    cols = list(zip(*records))
    trace = TrainingTrace(
        steps=np.array(cols[0], dtype=float),
        epsilons=np.array(cols[1], dtype=float),
        heldout_loglik=np.array(cols[2], dtype=float),
        tv_to_target=np.array(cols[3], dtype=float),
        tv_to_factorized=np.array(cols[4], dtype=float),
    )
    return model, trace


# ---------------------------------------------------------------------------
# minimizer scans


@dataclasses.dataclass(frozen=True, eq=False)
class InconsistencyEntry:
    """Exact-minimizer summary for one epsilon."""

    epsilon: float
    minimizer: DiscreteJoint
    objective_value: float
    tv_to_target: float
    tv_to_factorized: float
    brute_force_value: float | None = None
    brute_force_tv: float | None = None  # TV between the two minimizers


@dataclasses.dataclass(frozen=True, eq=False)
class InconsistencyReport:
    """Minimizers of the blended objective across an epsilon grid.

    ``monotone_tv`` flags whether the distance to the target decreases
    monotonically as epsilon rises; it is reported, not enforced.
    """

    target: DiscreteJoint
    entries: tuple[InconsistencyEntry, ...]
    monotone_tv: bool

    def epsilons(self) -> np.ndarray:
        return np.array([e.epsilon for e in self.entries])


def inconsistency_scan(
    target: DiscreteJoint,
    epsilons: Sequence[float],
    cfg: OptConfig | None = None,
    brute_force_points: int | None = None,
) -> InconsistencyReport:
    """Minimize the blended objective for each epsilon in ``epsilons``.

    Uses :func:`~divlab.optimize.minimize_discrete` with the configured
    restarts.  For binary alphabets a brute-force grid cross-check runs
    by default (``brute_force_points`` grid values per axis; pass 0 to
    disable).
    """
    if len(epsilons) == 0:
        raise InvalidDistribution("epsilons must be non-empty")
    cfg = cfg or OptConfig(restarts=5)
    if brute_force_points is None:
        brute_force_points = 201 if target.alphabet_size == 2 else 0
    from .dists import factorized, marginal_first, marginal_second

    fact = factorized(marginal_first(target), marginal_second(target))
    entries = []
    for eps in sorted(float(e) for e in epsilons):
        kind = ObjectiveKind.ss(eps)
        res = minimize_discrete(kind, target, cfg)
        brute_val = None
        brute_tv = None
        if brute_force_points:
            brute = brute_force_minimize(kind, target, brute_force_points)
            brute_val = float(brute.objective_value)
            brute_tv = total_variation(brute.minimizer, res.minimizer)
        entries.append(
            InconsistencyEntry(
                epsilon=eps,
                minimizer=res.minimizer,
                objective_value=float(res.objective_value),
                tv_to_target=total_variation(res.minimizer, target),
                tv_to_factorized=total_variation(res.minimizer, fact),
                brute_force_value=brute_val,
                brute_force_tv=brute_tv,
            )
        )
    tvs = [e.tv_to_target for e in entries]
    monotone = all(tvs[i + 1] <= tvs[i] + 1e-9 for i in range(len(tvs) - 1))
    return InconsistencyReport(
        target=target, entries=tuple(entries), monotone_tv=monotone
    )
