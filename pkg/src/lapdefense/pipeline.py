"""End-to-end experiments: perturb, denoise, train, and report.

Every ``(level, rep)`` cell derives its own seeds from the run seed, so cells
can run in any order or in parallel and still produce identical output.
"""
import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .data import SynthSpec, generate_planted_partition, load_dataset, stratified_masks
from .denoise import DenoiseConfig, run_denoise
from .errors import ParameterError
from .gcn import LabelVector, TrainConfig, evaluate, normalize_adjacency, train
from .graph import dirichlet_energy, laplacian_from_adjacency, normalized_energy_curve
from .perturb import PerturbationSpec, apply_perturbation, perturbation_stats

log = logging.getLogger(__name__)

DEFAULT_RATES = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
ARMS = ("poisoned", "denoised")

RESULT_COLUMNS = (
    "level", "rep", "seed", "arm", "accuracy", "accuracy_mean", "accuracy_sd",
    "denoise_iterations", "denoise_converged", "objective_initial", "objective_final",
    "dirichlet_ratio", "edges_added", "status", "reason",
)
ENERGY_COLUMNS = ("rate", "energy_mean", "energy_sd", "n_seeds")
P_SWEEP_COLUMNS = ("p", "rate", "accuracy_mean", "accuracy_sd",
                   "poisoned_mean", "poisoned_sd", "n_seeds", "failed")


@dataclass(frozen=True)
class RunConfig:
    synth: SynthSpec = field(default_factory=lambda: SynthSpec(feature_dim=8, feature_separation=8.0, noise_sd=1.0))
    files: tuple = None  # (edges, features, labels) overrides synth
    kind: str = "random_insert"
    rates: tuple = DEFAULT_RATES
    denoise: DenoiseConfig = field(default_factory=DenoiseConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    reps: int = 5
    seed: int = 0
    out_dir: str = "results"
    threshold: float = None
    row_normalize: bool = False
    jobs: int = 1

    def __post_init__(self):
        rates = tuple(sorted({0.0, *(float(r) for r in self.rates)}))
        if any(r < 0 for r in rates):
            raise ParameterError(f"rates must be non-negative, got {rates}")
        object.__setattr__(self, "rates", rates)
        if self.reps < 1:
            raise ParameterError(f"reps must be >= 1, got {self.reps}")
        PerturbationSpec(self.kind, 0.0, 0)

    def rep_seed(self, rep):
        return self.seed + rep


@dataclass
class CellResult:
    level: float
    rep: int
    seed: int
    acc_poisoned: float = math.nan
    acc_denoised: float = math.nan
    denoise_iterations: int = 0
    denoise_converged: bool = False
    objective_initial: float = math.nan
    objective_final: float = math.nan
    dirichlet_ratio: float = math.nan
    edges_added: int = 0
    status: str = "ok"
    reason: str = ""


@dataclass
class RunReport:
    cells: list
    summary: dict  # level -> arm -> (mean, sd)

    @property
    def failed(self):
        return [c for c in self.cells if c.status != "ok"]

    def to_json(self):
        return {
            "cells": [asdict(c) for c in self.cells],
            "summary": [
                {"level": lvl, "arm": arm, "accuracy_mean": m, "accuracy_sd": s}
                for lvl, arms in self.summary.items() for arm, (m, s) in arms.items()
            ],
        }


# ---------------------------------------------------------------------------
# single cell

def _seed_for(*parts):
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def _row_normalize(X):
    s = np.abs(X).sum(axis=1, keepdims=True)
    return X / np.where(s == 0, 1.0, s)


_FILE_CACHE = {}


def dataset_for_rep(cfg, rep):
    """The dataset used by repetition ``rep``.

    Synthetic data are regenerated with ``synth.seed + rep``; file data are
    loaded once and get fresh stratified masks per repetition.
    """
    if cfg.files is None:
        ds = generate_planted_partition(replace(cfg.synth, seed=cfg.synth.seed + rep))
    else:
        key = tuple(str(f) for f in cfg.files)
        if key not in _FILE_CACHE:
            _FILE_CACHE[key] = load_dataset(*cfg.files)
        ds = _FILE_CACHE[key]
        split = tuple(cfg.synth.split)
        train_m, val_m, test_m = stratified_masks(
            ds.labels.labels, split, np.random.default_rng(_seed_for(cfg.seed, rep, 7)),
            num_classes=ds.labels.num_classes)
        ds = replace(ds, labels=LabelVector(ds.labels.labels, train_m, val_m, test_m, ds.labels.num_classes))
    if cfg.row_normalize:
        ds = replace(ds, X=_row_normalize(ds.X))
    return ds


def _accuracy(A, ds, tcfg):
    params, _ = train(A, ds.X, ds.labels, tcfg)
    return 100.0 * evaluate(params, normalize_adjacency(A), ds.X, ds.labels, ds.labels.test_mask)


def run_cell(cfg, level, rep, ds=None):
    seed = cfg.rep_seed(rep)
    cell = CellResult(level=level, rep=rep, seed=seed)
    try:
        if ds is None:
            ds = dataset_for_rep(cfg, rep)
        spec = PerturbationSpec(cfg.kind, level, _seed_for(cfg.seed, rep, round(level * 1e6)))
        A_pert = apply_perturbation(ds.A, ds.X, spec)
        cell.edges_added = perturbation_stats(ds.A, A_pert)[0]
        cell.dirichlet_ratio = dirichlet_energy(A_pert, ds.X) / dirichlet_energy(ds.A, ds.X)

        tcfg = replace(cfg.train, seed=seed)
        # both arms consume the same perturbed graph and the same init seed
        cell.acc_poisoned = _accuracy(A_pert, ds, tcfg)

        res = run_denoise(laplacian_from_adjacency(A_pert), ds.X, cfg.denoise)
        A_star = res.adjacency()
        if cfg.threshold is not None:
            A_star = np.where(A_star > cfg.threshold, A_star, 0.0)
        cell.denoise_iterations = res.iterations_run
        cell.denoise_converged = res.converged
        cell.objective_initial = float(res.objective_trace[0])
        cell.objective_final = float(res.objective_trace[-1])
        cell.acc_denoised = _accuracy(A_star, ds, tcfg)
    except Exception as exc:  # recorded per cell, the run continues
        log.warning("cell level=%s rep=%s failed: %s", level, rep, exc)
        cell.status = "failed"
        cell.reason = f"{type(exc).__name__}: {exc}"
    return cell


def _run_cell_args(args):
    return run_cell(*args)


def _mean_sd(values):
    v = np.asarray([x for x in values if not math.isnan(x)], dtype=np.float64)
    if v.size == 0:
        return math.nan, math.nan
    return float(np.mean(v)), float(np.std(v))


def _summarize(cells, levels):
    summary = {}
    for lvl in levels:
        sub = [c for c in cells if c.level == lvl and c.status == "ok"]
        summary[lvl] = {
            "poisoned": _mean_sd([c.acc_poisoned for c in sub]),
            "denoised": _mean_sd([c.acc_denoised for c in sub]),
        }
    return summary


def run_cells(cfg, levels):
    jobs = [(cfg, lvl, rep) for lvl in levels for rep in range(cfg.reps)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            cells = list(pool.map(_run_cell_args, jobs))
    else:
        cells = [run_cell(*j) for j in jobs]
    return RunReport(cells=cells, summary=_summarize(cells, levels))


# ---------------------------------------------------------------------------
# output formatting

def _num(x, digits=None):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if digits is not None:
        return f"{x:.{digits}f}"
    return repr(float(x))


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def results_rows(report):
    rows = []
    for c in report.cells:
        for arm in ARMS:
            acc = c.acc_poisoned if arm == "poisoned" else c.acc_denoised
            mean, sd = report.summary[c.level][arm]
            rows.append([
                _num(c.level), c.rep, c.seed, arm, _num(acc, 2), _num(mean, 2), _num(sd, 2),
                c.denoise_iterations, _num(c.denoise_converged), _num(c.objective_initial),
                _num(c.objective_final), _num(c.dirichlet_ratio), c.edges_added, c.status, c.reason,
            ])
    return rows


def _rounded_report(report):
    out = report.to_json()
    for c in out["cells"]:
        for k in ("acc_poisoned", "acc_denoised"):
            c[k] = None if math.isnan(c[k]) else round(c[k], 2)
        for k in ("objective_initial", "objective_final", "dirichlet_ratio"):
            c[k] = None if math.isnan(c[k]) else c[k]
    for s in out["summary"]:
        for k in ("accuracy_mean", "accuracy_sd"):
            s[k] = None if math.isnan(s[k]) else round(s[k], 2)
    return out


def write_report(report, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "results.csv", RESULT_COLUMNS, results_rows(report))
    (out / "report.json").write_text(
        json.dumps(_rounded_report(report), indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# commands

def cmd_pipeline(cfg, write=True):
    """Run every ``(level, rep)`` cell and write ``report.json``/``results.csv``."""
    report = run_cells(cfg, cfg.rates)
    if write:
        write_report(report, cfg.out_dir)
    return report


def cmd_energy_curve(cfg, write=True):
    """Mean and sd over repetitions of the normalized Dirichlet energy per rate."""
    rates = list(cfg.rates)
    per_rate = {r: [] for r in rates}
    for rep in range(cfg.reps):
        ds = dataset_for_rep(cfg, rep)
        levels = [r for r in rates if r != 0.0]
        graphs = [
            apply_perturbation(ds.A, ds.X, PerturbationSpec(cfg.kind, r, _seed_for(cfg.seed, rep, round(r * 1e6))))
            for r in levels
        ]
        for lvl, ratio in normalized_energy_curve(ds.A, graphs, ds.X, levels):
            per_rate[lvl].append(ratio)
    rows = []
    for r in rates:
        vals = np.asarray(per_rate[r])
        rows.append((r, float(vals.mean()), float(vals.std()), int(vals.size)))
    if write:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "energy.csv", ENERGY_COLUMNS,
                   [[_num(r), _num(m), _num(s), k] for r, m, s, k in rows])
    return rows


def cmd_p_sweep(cfg, p_values=(1.5, 2.0, 2.4, 3.0), rate=0.6, write=True):
    """Denoised-arm accuracy against the norm exponent at one perturbation rate."""
    rows = []
    for p in p_values:
        sub = replace(cfg, denoise=replace(cfg.denoise, p=float(p)))
        report = run_cells(sub, [float(rate)])
        (m, s), (pm, ps) = report.summary[float(rate)]["denoised"], report.summary[float(rate)]["poisoned"]
        n_ok = sum(1 for c in report.cells if c.status == "ok")
        rows.append((float(p), float(rate), m, s, pm, ps, n_ok, len(report.failed)))
    if write:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "p_sweep.csv", P_SWEEP_COLUMNS,
                   [[_num(p), _num(r), _num(m, 2), _num(s, 2), _num(pm, 2), _num(ps, 2), k, f]
                    for p, r, m, s, pm, ps, k, f in rows])
    return rows


def config_items(cfg):
    """Flatten a :class:`RunConfig` into ``key = value`` pairs (config-file keys)."""
    items = {}
    s = cfg.synth
    items.update(n=s.n, classes=s.classes, p_in=s.p_in, p_out=s.p_out, feature_dim=s.feature_dim,
                 separation=s.feature_separation, noise_sd=s.noise_sd, data_seed=s.seed,
                 split=",".join(repr(x) for x in s.split))
    if cfg.files is not None:
        items.update(edges=cfg.files[0], features=cfg.files[1], labels=cfg.files[2])
    d = cfg.denoise
    items.update({f.name: getattr(d, f.name) for f in fields(d)})
    t = cfg.train
    items.update(lr_gnn=t.learning_rate, epochs=t.epochs, hidden=t.hidden, patience=t.patience)
    items.update(kind=cfg.kind, rates=",".join(repr(r) for r in cfg.rates), reps=cfg.reps,
                 seed=cfg.seed, row_normalize=cfg.row_normalize)
    if cfg.threshold is not None:
        items["threshold"] = cfg.threshold
    return items
