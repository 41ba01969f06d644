"""Command-line front end.

Each subcommand runs one experiment and writes a report bundle (tables,
figures, manifest, and the ``config.txt`` that reruns it).  Option
precedence: command-line flag > ``--config`` file > built-in default.
Exit codes: 0 on success, 2 for config/parse problems, 3 for numeric
failures.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import adversary, dists, divergences, optimize, sslab
from .divergences import MixtureWeight
from .errors import (
    AlphabetMismatch,
    DegenerateGrid,
    DivergedTraining,
    DivlabError,
    EmptySamples,
    GridMismatch,
    GridTooLarge,
    InvalidDistribution,
    NonFiniteObjective,
    NumericFault,
    ParseError,
)
from .reports import ReportBundle

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_CONFIG_ERRORS = (
    ParseError,
    InvalidDistribution,
    AlphabetMismatch,
    GridMismatch,
    GridTooLarge,
    EmptySamples,
)
_NUMERIC_ERRORS = (NumericFault, NonFiniteObjective, DegenerateGrid, DivergedTraining)

#: correlated demo table used when a command needs a joint and none is given
DEFAULT_JOINT = ((0.4, 0.1), (0.1, 0.4))


# ---------------------------------------------------------------------------
# input parsing


def parse_config_file(path) -> dict[str, str]:
    """Read a ``key = value`` config file; '#' starts a comment."""
    options: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError(f"{path}:{lineno}: empty key")
        options[key] = value
    return options


def parse_distribution_file(path, renormalize: bool = False):
    """Read a probability vector or square table from plain text.

    One row of whitespace-separated decimals per line; '#' starts a
    comment.  A single row is a vector, K rows of K entries are a joint
    table.  The total mass must be 1 within 1e-9 unless ``renormalize``.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read distribution file {path}: {exc}") from exc
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            row = [float(tok) for tok in line.split()]
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: not a number: {exc}") from exc
        rows.append((lineno, row))
    if not rows:
        raise ParseError(f"{path}: no data rows")
    width = len(rows[0][1])
    for lineno, row in rows:
        if len(row) != width:
            raise ParseError(f"{path}:{lineno}: expected {width} entries, got {len(row)}")
    values = np.array([row for _, row in rows], dtype=float)
    if np.any(values < 0.0) or not np.all(np.isfinite(values)):
        raise ParseError(f"{path}: entries must be finite and nonnegative")
    if values.shape[0] > 1 and values.shape[0] != values.shape[1]:
        raise ParseError(f"{path}: a table must be square, got {values.shape}")
    total = float(values.sum())
    if total <= 0.0:
        raise ParseError(f"{path}: total mass must be positive")
    if not renormalize and abs(total - 1.0) > 1e-9:
        raise ParseError(
            f"{path}: mass {total!r} is not 1 within 1e-9 (use --renormalize to accept)"
        )
    values = values / total
    if values.shape[0] == 1:
        return dists.DiscreteDist(values[0])
    return dists.DiscreteJoint(values)


def parse_schedule(text: str) -> sslab.SSSchedule:
    """Parse ``constant:EPS``, ``linear:STEPS[:START:END]``, or
    ``invsigmoid:RATE:STEPS``."""
    parts = text.split(":")
    try:
        if parts[0] == "constant" and len(parts) == 2:
            return sslab.SSSchedule.constant(float(parts[1]))
        if parts[0] == "linear" and len(parts) in (2, 4):
            if len(parts) == 2:
                return sslab.SSSchedule.linear_anneal(int(parts[1]))
            return sslab.SSSchedule.linear_anneal(
                int(parts[1]), float(parts[2]), float(parts[3])
            )
        if parts[0] == "invsigmoid" and len(parts) == 3:
            return sslab.SSSchedule.inverse_sigmoid_anneal(float(parts[1]), int(parts[2]))
    except (ValueError, InvalidDistribution) as exc:
        raise ParseError(f"bad schedule {text!r}: {exc}") from exc
    raise ParseError(f"bad schedule {text!r}")


# ---------------------------------------------------------------------------
# experiment config


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings of one experiment run."""

    experiment: str
    seed: dists.RngSeed
    out_dir: Path
    options: dict[str, str]

    def get_str(self, key: str) -> str:
        return self.options[key]

    def get_int(self, key: str) -> int:
        try:
            return int(self.options[key])
        except ValueError as exc:
            raise ParseError(f"option {key!r}: expected an integer") from exc

    def get_float(self, key: str) -> float:
        try:
            return float(self.options[key])
        except ValueError as exc:
            raise ParseError(f"option {key!r}: expected a number") from exc

    def get_bool(self, key: str) -> bool:
        value = self.options[key].strip().lower()
        if value in ("true", "1", "yes"):
            return True
        if value in ("false", "0", "no"):
            return False
        raise ParseError(f"option {key!r}: expected true/false")

    def get_floats(self, key: str) -> list[float]:
        raw = self.options[key]
        try:
            return [float(tok) for tok in raw.replace(",", " ").split()]
        except ValueError as exc:
            raise ParseError(f"option {key!r}: expected comma-separated numbers") from exc

    def bundle(self) -> ReportBundle:
        return ReportBundle(self.experiment, int(self.seed.seed), dict(self.options))


def _resolve(args, defaults: dict[str, str]) -> ExperimentConfig:
    options = dict(defaults)
    config_seed = None
    if args.config:
        file_options = parse_config_file(args.config)
        config_seed = file_options.pop("seed", None)
        file_options.pop("experiment", None)
        unknown = set(file_options) - set(defaults)
        if unknown:
            raise ParseError(f"unknown config keys: {', '.join(sorted(unknown))}")
        options.update(file_options)
    for key in defaults:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            options[key] = str(flag_value)
    if args.seed is not None:
        seed = int(args.seed)
    elif config_seed is not None:
        try:
            seed = int(config_seed)
        except ValueError as exc:
            raise ParseError("config key 'seed': expected an integer") from exc
    else:
        seed = 0
    out_dir = Path(args.out) if args.out else Path("divlab_out") / args.experiment
    return ExperimentConfig(args.experiment, dists.RngSeed(seed), out_dir, options)


def _load_dist(cfg: ExperimentConfig, key: str, fallback=None):
    path = cfg.get_str(key)
    if not path:
        if fallback is None:
            raise ParseError(f"option {key!r}: a distribution file is required")
        return fallback
    return parse_distribution_file(path, renormalize=cfg.get_bool("renormalize"))


def _map_cells(fn, payloads, workers: int):
    """Run independent experiment cells, optionally across processes.

    Results keep payload order, and every cell carries its own derived
    seed, so the merge is deterministic for any worker count.
    """
    if workers <= 1 or len(payloads) <= 1:
        return [fn(p) for p in payloads]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, payloads))


def _mpl():
    import matplotlib

    matplotlib.use("Agg", force=True)
    # fixed hash salt keeps SVG element ids stable across reruns
    matplotlib.rcParams["svg.hashsalt"] = "divlab"
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path) -> None:
    # SVG output embeds a creation date unless told otherwise; drop it so
    # reruns stay byte-identical
    if Path(path).suffix == ".svg":
        fig.savefig(path, metadata={"Date": None})
    else:
        fig.savefig(path)


# ---------------------------------------------------------------------------
# divergence


DIVERGENCE_DEFAULTS = {
    "p": "",
    "q": "",
    "pis": "0.1,0.25,0.5,0.75,0.9",
    "renormalize": "false",
}


def run_divergence(cfg: ExperimentConfig) -> ReportBundle:
    p = _load_dist(cfg, "p")
    q = _load_dist(cfg, "q")
    bundle = cfg.bundle()
    summary = [
        ("entropy_p", float(divergences.entropy(p))),
        ("entropy_q", float(divergences.entropy(q))),
        ("cross_entropy_pq", float(divergences.cross_entropy(p, q))),
        ("cross_entropy_qp", float(divergences.cross_entropy(q, p))),
        ("kl_pq", float(divergences.kl(p, q))),
        ("kl_qp", float(divergences.kl(q, p))),
        ("jsd", float(divergences.jsd(p, q))),
    ]
    bundle.add_table("summary", ("quantity", "value"), summary)
    rows = []
    for pi in cfg.get_floats("pis"):
        w = MixtureWeight(pi)
        rows.append(
            (pi, float(divergences.js_pi(p, q, w)), float(divergences.js_pi(q, p, w)))
        )
    bundle.add_table("js_grid", ("pi", "js_pi_pq", "js_pi_qp"), rows)
    return bundle


# ---------------------------------------------------------------------------
# js-limits


JS_LIMITS_DEFAULTS = {
    "p": "",
    "q": "",
    "ks": "1,2,3,4",
    "renormalize": "false",
}


def run_js_limits(cfg: ExperimentConfig) -> ReportBundle:
    p = _load_dist(cfg, "p", fallback=dists.DiscreteDist([0.75, 0.25]))
    q = _load_dist(cfg, "q", fallback=dists.DiscreteDist([0.5, 0.5]))
    kl_pq = float(divergences.kl(p, q))
    kl_qp = float(divergences.kl(q, p))
    rows = []
    for k in cfg.get_floats("ks"):
        pi = 10.0 ** (-float(k))
        fwd = float(divergences.kl_limit_ratio(p, q, pi))
        rev = float(divergences.kl_limit_ratio(q, p, pi))
        rows.append((int(k), pi, fwd, abs(fwd - kl_pq), rev, abs(rev - kl_qp)))
    bundle = cfg.bundle()
    bundle.add_table(
        "limits",
        ("k", "pi", "ratio_forward", "error_forward", "ratio_reverse", "error_reverse"),
        rows,
    )
    bundle.add_table(
        "reference", ("quantity", "value"), [("kl_pq", kl_pq), ("kl_qp", kl_qp)]
    )
    return bundle


# ---------------------------------------------------------------------------
# ss-inconsistency


SS_INCONSISTENCY_DEFAULTS = {
    "p": "",
    "epsilons": "0,0.25,0.5,0.75,1",
    "restarts": "5",
    "max_iters": "500",
    "step_size": "1.0",
    "brute_points": "201",
    "renormalize": "false",
}


def run_ss_inconsistency(cfg: ExperimentConfig) -> ReportBundle:
    target = _load_dist(cfg, "p", fallback=dists.DiscreteJoint(np.array(DEFAULT_JOINT)))
    if not isinstance(target, dists.DiscreteJoint):
        raise ParseError("option 'p': this experiment needs a joint table")
    opt_cfg = optimize.OptConfig(
        max_iters=cfg.get_int("max_iters"),
        step_size=cfg.get_float("step_size"),
        seed=cfg.seed,
        restarts=cfg.get_int("restarts"),
    )
    brute = cfg.get_int("brute_points")
    report = sslab.inconsistency_scan(
        target,
        cfg.get_floats("epsilons"),
        opt_cfg,
        brute_force_points=brute if target.alphabet_size == 2 else 0,
    )
    k = target.alphabet_size
    scan_rows = []
    min_rows = []
    for e in report.entries:
        scan_rows.append(
            (
                e.epsilon,
                e.objective_value,
                e.tv_to_target,
                e.tv_to_factorized,
                "" if e.brute_force_value is None else e.brute_force_value,
                "" if e.brute_force_tv is None else e.brute_force_tv,
            )
        )
        min_rows.append(
            (e.epsilon, *[float(v) for v in e.minimizer.table.reshape(-1)])
        )
    bundle = cfg.bundle()
    bundle.add_table(
        "scan",
        (
            "epsilon",
            "objective_value",
            "tv_to_target",
            "tv_to_factorized",
            "brute_force_value",
            "brute_force_tv",
        ),
        scan_rows,
    )
    cell_cols = [f"cell_{i}_{j}" for i in range(k) for j in range(k)]
    bundle.add_table("minimizers", ("epsilon", *cell_cols), min_rows)
    bundle.add_table(
        "flags", ("name", "value"), [("monotone_tv_to_target", report.monotone_tv)]
    )
    epsilons = [e.epsilon for e in report.entries]
    tv_t = [e.tv_to_target for e in report.entries]
    tv_f = [e.tv_to_factorized for e in report.entries]

    def render(path):
        plt = _mpl()
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(epsilons, tv_t, "o-", label="TV to target")
        ax.plot(epsilons, tv_f, "s-", label="TV to factorized")
        ax.set_xlabel("epsilon (keep probability)")
        ax.set_ylabel("total variation")
        ax.legend()
        fig.tight_layout()
        _save(fig, path)
        plt.close(fig)

    bundle.add_figure("tv_curve", "tv_curve.svg", render)
    return bundle


# ---------------------------------------------------------------------------
# ss-train


SS_TRAIN_DEFAULTS = {
    "p": "",
    "schedule": "linear:100000",
    "num_sequences": "100000",
    "step_size": "0.5",
    "step_decay": "0.0005",
    "checkpoint_every": "0",
    "heldout_size": "2048",
    "renormalize": "false",
}


def run_ss_train(cfg: ExperimentConfig) -> ReportBundle:
    target = _load_dist(cfg, "p", fallback=dists.DiscreteJoint(np.array(DEFAULT_JOINT)))
    if not isinstance(target, dists.DiscreteJoint):
        raise ParseError("option 'p': this experiment needs a joint table")
    schedule = parse_schedule(cfg.get_str("schedule"))
    every = cfg.get_int("checkpoint_every")
    train_cfg = sslab.SSTrainConfig(
        num_sequences=cfg.get_int("num_sequences"),
        step_size=cfg.get_float("step_size"),
        step_decay=cfg.get_float("step_decay"),
        seed=cfg.seed,
        checkpoint_every=every if every > 0 else None,
        heldout_size=cfg.get_int("heldout_size"),
    )
    model, trace = sslab.ss_train(target, schedule, train_cfg)
    bundle = cfg.bundle()
    bundle.add_table(
        "trace",
        ("step", "epsilon", "heldout_loglik", "tv_to_target", "tv_to_factorized"),
        trace.as_rows(),
    )
    row_rows = []
    for prefix in sorted(model.conditionals, key=lambda p: (len(p), p)):
        label = "()" if not prefix else ",".join(str(s) for s in prefix)
        row_rows.append((label, *[float(v) for v in model.conditionals[prefix].probs]))
    k = model.alphabet_size
    bundle.add_table(
        "model_rows", ("prefix", *[f"p_{j}" for j in range(k)]), row_rows
    )

    steps = trace.steps.copy()
    ll = trace.heldout_loglik.copy()
    tv_t = trace.tv_to_target.copy()
    tv_f = trace.tv_to_factorized.copy()

    def render(path):
        plt = _mpl()
        fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(5.5, 5), sharex=True)
        ax1.plot(steps, ll, "-")
        ax1.set_ylabel("held-out loglik (nats/symbol)")
        ax2.plot(steps, tv_t, "-", label="TV to target")
        ax2.plot(steps, tv_f, "-", label="TV to factorized")
        ax2.set_xlabel("training sequences")
        ax2.set_ylabel("total variation")
        ax2.legend()
        fig.tight_layout()
        _save(fig, path)
        plt.close(fig)

    bundle.add_figure("training", "training.svg", render)
    return bundle


# ---------------------------------------------------------------------------
# figure1


FIGURE1_DEFAULTS = {
    "pis": "0.1,0.5,0.99",
    "resolution": "256",
    "eigenvalues": "4,1",
    "angle_degrees": "30",
    "mean": "0,0",
    "bounds": "",
    "max_iters": "300",
    "step_size": "32.0",
    "workers": "1",
}


def _rotated_gaussian(mean, eigenvalues, angle_degrees) -> dists.Gaussian2D:
    if len(eigenvalues) != 2 or len(mean) != 2:
        raise ParseError("need two eigenvalues and a 2-d mean")
    theta = np.deg2rad(angle_degrees)
    rot = np.array(
        [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
    )
    cov = rot @ np.diag(eigenvalues) @ rot.T
    try:
        return dists.Gaussian2D(np.asarray(mean, dtype=float), cov)
    except InvalidDistribution as exc:
        raise ParseError(f"bad target Gaussian: {exc}") from exc


def _figure1_cell(payload):
    (pi, mean, eigenvalues, angle, bounds, resolution, max_iters, step_size) = payload
    target = _rotated_gaussian(mean, eigenvalues, angle)
    fit_cfg = dataclasses.replace(
        optimize.FIT_CONFIG, max_iters=max_iters, step_size=step_size
    )
    fit = optimize.fit_isotropic(
        target, MixtureWeight(pi), bounds=bounds, resolution=resolution, cfg=fit_cfg
    )
    return {
        "pi": pi,
        "mean_x": float(fit.mean[0]),
        "mean_y": float(fit.mean[1]),
        "variance": float(fit.variance),
    }


def run_figure1(cfg: ExperimentConfig) -> ReportBundle:
    mean = cfg.get_floats("mean")
    eigenvalues = cfg.get_floats("eigenvalues")
    angle = cfg.get_float("angle_degrees")
    target = _rotated_gaussian(mean, eigenvalues, angle)
    bounds_raw = cfg.get_str("bounds")
    bounds = tuple(cfg.get_floats("bounds")) if bounds_raw else dists.default_bounds(target)
    if len(bounds) != 4:
        raise ParseError("option 'bounds': expected x_min,x_max,y_min,y_max")
    resolution = cfg.get_int("resolution")
    pis = cfg.get_floats("pis")
    payloads = [
        (
            pi,
            tuple(mean),
            tuple(eigenvalues),
            angle,
            bounds,
            resolution,
            cfg.get_int("max_iters"),
            cfg.get_float("step_size"),
        )
        for pi in pis
    ]
    # evaluate the target grid first so degenerate windows fail fast
    target_grid = dists.grid_from_gaussian(target, bounds, resolution)
    fits = _map_cells(_figure1_cell, payloads, cfg.get_int("workers"))

    ml = optimize.ml_isotropic_closed_form(target)
    excl = optimize.exclusive_isotropic_closed_form(target)
    rows = [
        (
            f["pi"],
            f["mean_x"],
            f["mean_y"],
            f["variance"],
            ml.variance,
            excl.variance,
        )
        for f in fits
    ]
    bundle = cfg.bundle()
    bundle.add_table(
        "fits",
        ("pi", "mean_x", "mean_y", "variance", "ml_variance", "exclusive_variance"),
        rows,
    )

    xs, ys = target_grid.cell_centers()

    def q_density(fit):
        g = dists.IsotropicGaussian(np.array([fit["mean_x"], fit["mean_y"]]), fit["variance"])
        return dists.grid_from_gaussian(g.to_gaussian2d(), bounds, resolution).values

    def render_heatmap(fit):
        def render(path):
            plt = _mpl()
            fig, ax = plt.subplots(figsize=(4.6, 4))
            extent = (bounds[0], bounds[1], bounds[2], bounds[3])
            ax.imshow(
                target_grid.values.T, origin="lower", extent=extent, cmap="viridis"
            )
            ax.contour(xs, ys, q_density(fit).T, levels=6, colors="white", linewidths=0.9)
            ax.set_title(f"pi = {fit['pi']}")
            fig.tight_layout()
            _save(fig, path)
            plt.close(fig)

        return render

    for i, fit in enumerate(fits):
        bundle.add_figure(f"heatmap_{i}", f"heatmap_pi_{i}.png", render_heatmap(fit))

    def render_contours(path):
        plt = _mpl()
        fig, ax = plt.subplots(figsize=(4.8, 4.2))
        ax.contour(xs, ys, target_grid.values.T, levels=5, colors="black", linewidths=1.0)
        for fit in fits:
            cs = ax.contour(xs, ys, q_density(fit).T, levels=3, linewidths=0.9)
            ax.clabel(cs, fmt={lv: f"pi={fit['pi']}" for lv in cs.levels}, fontsize=6)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        fig.tight_layout()
        _save(fig, path)
        plt.close(fig)

    bundle.add_figure("contours", "contours.svg", render_contours)
    return bundle


# ---------------------------------------------------------------------------
# adversarial


ADVERSARIAL_DEFAULTS = {
    "target": "discrete",
    "p": "",
    "pis": "0.1,0.5,0.9",
    "rounds": "0",
    "batch_size": "512",
    "disc_steps": "0",
    "disc_rate": "0",
    "gen_rate": "0",
    "eigenvalues": "4,1",
    "angle_degrees": "30",
    "mean": "0,0",
    "workers": "1",
    "renormalize": "false",
}

# per-target defaults applied when the knob is left at 0
_ADV_AUTO = {
    "discrete": {"rounds": 400, "disc_steps": 3, "disc_rate": 1.0, "gen_rate": 1.0},
    "gaussian": {"rounds": 600, "disc_steps": 5, "disc_rate": 0.05, "gen_rate": 0.5},
}


def _adversarial_cell(payload):
    (kind, target_desc, pi, rounds, batch, d_steps, d_rate, g_rate, seed) = payload
    if kind == "discrete":
        target = dists.DiscreteDist(np.array(target_desc))
    else:
        mean, eigenvalues, angle = target_desc
        target = _rotated_gaussian(mean, eigenvalues, angle)
    cfg = adversary.AdvConfig(
        pi=MixtureWeight(pi),
        disc_steps=d_steps,
        batch_size=batch,
        disc_rate=d_rate,
        gen_rate=g_rate,
        rounds=rounds,
        seed=dists.RngSeed(seed),
    )
    result = adversary.train_generalized_adversarial(target, cfg)
    out = {
        "pi": pi,
        "rounds": result.trace.rounds.tolist(),
        "js_estimate": result.trace.js_estimate.tolist(),
        "summary": result.trace.summary.tolist(),
        "summary_name": result.trace.summary_name,
    }
    if kind == "discrete":
        out["generator"] = result.generator.probs.tolist()
        out["exact_js"] = float(
            divergences.js_pi(target, result.generator, MixtureWeight(pi))
        )
    else:
        out["generator"] = [
            float(result.generator.mean[0]),
            float(result.generator.mean[1]),
            float(result.generator.variance),
        ]
        out["exact_js"] = ""
    return out


def run_adversarial(cfg: ExperimentConfig) -> ReportBundle:
    kind = cfg.get_str("target")
    if kind not in ("discrete", "gaussian"):
        raise ParseError("option 'target': expected 'discrete' or 'gaussian'")
    auto = _ADV_AUTO[kind]
    knobs = {}
    for name in ("rounds", "disc_steps"):
        value = cfg.get_int(name)
        knobs[name] = value if value > 0 else auto[name]
    for name in ("disc_rate", "gen_rate"):
        value = cfg.get_float(name)
        knobs[name] = value if value > 0 else auto[name]
    if kind == "discrete":
        target = _load_dist(
            cfg, "p", fallback=dists.DiscreteDist([0.5, 0.2, 0.2, 0.1])
        )
        if not isinstance(target, dists.DiscreteDist):
            raise ParseError("option 'p': discrete adversarial needs a vector")
        target_desc = tuple(float(v) for v in target.probs)
    else:
        target_desc = (
            tuple(cfg.get_floats("mean")),
            tuple(cfg.get_floats("eigenvalues")),
            cfg.get_float("angle_degrees"),
        )
    pis = cfg.get_floats("pis")
    payloads = []
    for i, pi in enumerate(pis):
        cell_seed = int(cfg.seed.stream("adversarial", i).integers(0, 2**63))
        payloads.append(
            (
                kind,
                target_desc,
                pi,
                knobs["rounds"],
                cfg.get_int("batch_size"),
                knobs["disc_steps"],
                knobs["disc_rate"],
                knobs["gen_rate"],
                cell_seed,
            )
        )
    results = _map_cells(_adversarial_cell, payloads, cfg.get_int("workers"))

    bundle = cfg.bundle()
    summary_rows = []
    for i, r in enumerate(results):
        summary_rows.append(
            (
                r["pi"],
                r["js_estimate"][-1],
                r["summary"][-1],
                r["exact_js"],
                ",".join(repr(float(v)) for v in r["generator"]),
            )
        )
        bundle.add_table(
            f"trace_{i}",
            ("round", "js_estimate", r["summary_name"]),
            list(zip((int(x) for x in r["rounds"]), r["js_estimate"], r["summary"])),
        )
    bundle.add_table(
        "summary",
        ("pi", "final_js_estimate", "final_summary", "exact_js", "generator"),
        summary_rows,
    )

    def render(path):
        plt = _mpl()
        fig, ax = plt.subplots(figsize=(5.5, 3.6))
        for r in results:
            ax.plot(r["rounds"], r["js_estimate"], label=f"pi={r['pi']}")
        ax.set_xlabel("round")
        ax.set_ylabel("value + H_b(pi)  (nats)")
        ax.legend()
        fig.tight_layout()
        _save(fig, path)
        plt.close(fig)

    bundle.add_figure("estimates", "estimates.svg", render)
    return bundle


# ---------------------------------------------------------------------------
# parser / entry point


_COMMANDS = {
    "divergence": (run_divergence, DIVERGENCE_DEFAULTS, "entropies, KL, JSD, and the js_pi grid for two distributions"),
    "js-limits": (run_js_limits, JS_LIMITS_DEFAULTS, "js_pi/pi ratios approaching both KL directions"),
    "ss-inconsistency": (run_ss_inconsistency, SS_INCONSISTENCY_DEFAULTS, "exact minimizers of the blended objective across epsilon"),
    "ss-train": (run_ss_train, SS_TRAIN_DEFAULTS, "scheduled-sampling training run with trace"),
    "figure1": (run_figure1, FIGURE1_DEFAULTS, "isotropic js_pi fits to an anisotropic Gaussian"),
    "adversarial": (run_adversarial, ADVERSARIAL_DEFAULTS, "pi-weighted adversarial training sweeps"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="divlab", description="divergence experiments and reports"
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name, (runner, defaults, help_text) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(runner=runner, defaults=defaults)
        p.add_argument("--seed", type=int, default=None, help="64-bit run seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--config", default=None, help="key = value config file")
        for key, value in defaults.items():
            if key == "renormalize":
                p.add_argument(
                    "--renormalize",
                    action="store_const",
                    const="true",
                    default=None,
                    help="accept unnormalized input distributions",
                )
            else:
                flag = "--" + key.replace("_", "-")
                p.add_argument(flag, dest=key, default=None, metavar=value or "...")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args, args.defaults)
        bundle = args.runner(cfg)
        manifest_path = bundle.write(cfg.out_dir)
    except _CONFIG_ERRORS as exc:
        print(f"divlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"divlab: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DivlabError as exc:
        print(f"divlab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(manifest_path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
