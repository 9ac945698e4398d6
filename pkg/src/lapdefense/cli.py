"""Command-line entry point (``lapdefense``).

Settings come from ``--config FILE`` (``key = value`` lines, ``#`` comments)
and are overridden by explicit flags.
"""
import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .data import generate_planted_partition, load_dataset, save_dataset
from .denoise import run_denoise
from .errors import LapDefenseError, ParameterError
from .gcn import evaluate, normalize_adjacency, train
from .graph import dirichlet_energy, laplacian_from_adjacency
from .perturb import PerturbationSpec, apply_perturbation, perturbation_stats
from .pipeline import (RunConfig, cmd_energy_curve, cmd_p_sweep, cmd_pipeline, config_items,
                       dataset_for_rep)

log = logging.getLogger("lapdefense")

# config key -> (type, flag dest); keys double as --config file keys
_KEYS = {
    "alpha": float, "beta": float, "p": float, "max_iters": int, "rel_tol": float,
    "step_mode": str, "eta": float, "c_mode": str, "support": str,
    "lr_gnn": float, "epochs": int, "hidden": int, "patience": int,
    "kind": str, "rate": float, "rates": str, "reps": int, "seed": int,
    "n": int, "classes": int, "p_in": float, "p_out": float, "feature_dim": int,
    "separation": float, "noise_sd": float, "data_seed": int, "split": str,
    "edges": str, "features": str, "labels": str, "threshold": float,
    "row_normalize": str, "jobs": int, "out": str, "p_values": str,
}


def read_config_file(path):
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "out_dir":
            key = "out"
        if key not in _KEYS:
            raise ParameterError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = val
    return values


def _floats(text):
    return tuple(float(x) for x in str(text).replace(" ", "").split(",") if x)


def _bool(text):
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in {"1", "true", "yes", "on"}


def _settings(args):
    settings = {}
    if args.config:
        settings.update(read_config_file(args.config))
    for key in _KEYS:
        v = getattr(args, key, None)
        if v is not None:
            settings[key] = v
    return {k: (_KEYS[k](v) if _KEYS[k] is not str and isinstance(v, str) else v) for k, v in settings.items()}


def build_run_config(s):
    base = RunConfig()
    synth = base.synth
    synth_kw = {}
    for key, attr in (("n", "n"), ("classes", "classes"), ("p_in", "p_in"), ("p_out", "p_out"),
                      ("feature_dim", "feature_dim"), ("separation", "feature_separation"),
                      ("noise_sd", "noise_sd"), ("data_seed", "seed")):
        if key in s:
            synth_kw[attr] = s[key]
    if "split" in s:
        synth_kw["split"] = _floats(s["split"])
    synth = replace(synth, **synth_kw)

    dkw = {k: s[k] for k in ("alpha", "beta", "p", "max_iters", "rel_tol", "step_mode",
                            "eta", "c_mode", "support") if k in s}
    denoise = replace(base.denoise, **dkw)
    tkw = {}
    for key, attr in (("lr_gnn", "learning_rate"), ("epochs", "epochs"),
                      ("hidden", "hidden"), ("patience", "patience")):
        if key in s:
            tkw[attr] = s[key]
    train_cfg = replace(base.train, **tkw)

    files = None
    if any(k in s for k in ("edges", "features", "labels")):
        if not all(k in s for k in ("edges", "features", "labels")):
            raise ParameterError("--edges, --features and --labels must be given together")
        files = (s["edges"], s["features"], s["labels"])

    if "rates" in s:
        rates = _floats(s["rates"])
    elif "rate" in s:
        rates = (0.0, s["rate"])
    else:
        rates = base.rates
    return RunConfig(
        synth=synth, files=files, kind=s.get("kind", base.kind), rates=rates,
        denoise=denoise, train=train_cfg, reps=s.get("reps", base.reps), seed=s.get("seed", base.seed),
        out_dir=s.get("out", base.out_dir), threshold=s.get("threshold"),
        row_normalize=_bool(s.get("row_normalize", False)), jobs=s.get("jobs", 1),
    )


def _write_run_config(cfg, extra=None):
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    items = config_items(cfg)
    items.update(extra or {})
    lines = [f"{k} = {v}" for k, v in items.items()]
    (out / "run_config.txt").write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _write_edges(path, A, ids):
    iu, ju = np.nonzero(np.triu(A, 1))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, j in zip(iu, ju):
            fh.write(f"{int(ids[i])} {int(ids[j])} {float(A[i, j])!r}\n")


def _dump(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


# ---------------------------------------------------------------------------
# subcommands

def _cmd_synth(cfg, s):
    ds = generate_planted_partition(cfg.synth)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, out / "edges.txt", out / "features.txt", out / "labels.txt")
    _dump({"name": ds.name, "n": ds.n, "edges": ds.num_edges, "classes": ds.labels.num_classes,
           "out": str(out)})
    return 0


def _cmd_load(cfg, s):
    if cfg.files is None:
        raise ParameterError("load needs --edges, --features and --labels")
    ds = load_dataset(*cfg.files)
    info = {"name": ds.name, "n": ds.n, "edges": ds.num_edges, "features": int(ds.X.shape[1]),
            "classes": ds.labels.num_classes,
            "node_ids": {int(k): int(v) for k, v in enumerate(ds.node_ids) if k != v}}
    if "out" in s:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_dataset(ds, out / "edges.txt", out / "features.txt", out / "labels.txt")
        info["out"] = str(out)
    _dump(info)
    return 0


def _perturbed(cfg, s):
    ds = dataset_for_rep(cfg, 0)
    rate = float(s.get("rate", max(cfg.rates)))
    A_pert = apply_perturbation(ds.A, ds.X, PerturbationSpec(cfg.kind, rate, cfg.seed))
    return ds, rate, A_pert


def _cmd_perturb(cfg, s):
    ds, rate, A_pert = _perturbed(cfg, s)
    added, removed, ratio = perturbation_stats(ds.A, A_pert)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_edges(out / "perturbed_edges.txt", A_pert, ds.node_ids)
    _dump({"rate": rate, "added": added, "removed": removed, "ratio": ratio,
           "dirichlet_ratio": dirichlet_energy(A_pert, ds.X) / dirichlet_energy(ds.A, ds.X),
           "out": str(out / "perturbed_edges.txt")})
    return 0


def _cmd_denoise(cfg, s):
    ds, rate, A_pert = _perturbed(cfg, s)
    res = run_denoise(laplacian_from_adjacency(A_pert), ds.X, cfg.denoise)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_edges(out / "denoised_edges.txt", res.adjacency(), ds.node_ids)
    (out / "objective.csv").write_text(
        "iteration,objective\n" + "".join(f"{t},{v!r}\n" for t, v in enumerate(res.objective_trace)),
        encoding="utf-8", newline="\n")
    _dump({"rate": rate, "iterations": res.iterations_run, "converged": res.converged,
           "objective_initial": float(res.objective_trace[0]),
           "objective_final": float(res.objective_trace[-1]), "out": str(out)})
    return 0


def _cmd_train(cfg, s):
    ds = dataset_for_rep(cfg, 0)
    A = ds.A
    if "rate" in s:
        A = apply_perturbation(ds.A, ds.X, PerturbationSpec(cfg.kind, s["rate"], cfg.seed))
    params, hist = train(A, ds.X, ds.labels, replace(cfg.train, seed=cfg.seed))
    A_hat = normalize_adjacency(A)
    _dump({"epochs_run": hist.epochs_run, "best_epoch": hist.best_epoch,
           "train_accuracy": round(100 * evaluate(params, A_hat, ds.X, ds.labels, ds.labels.train_mask), 2),
           "test_accuracy": round(100 * evaluate(params, A_hat, ds.X, ds.labels, ds.labels.test_mask), 2)})
    return 0


def _cmd_pipeline(cfg, s):
    _write_run_config(cfg)
    report = cmd_pipeline(cfg)
    for lvl, arms in report.summary.items():
        (pm, ps), (dm, dsd) = arms["poisoned"], arms["denoised"]
        print(f"rate {lvl:.2f}: poisoned {pm:6.2f} ± {ps:5.2f}   denoised {dm:6.2f} ± {dsd:5.2f}")
    if report.failed:
        print(f"{len(report.failed)} cell(s) failed; see {cfg.out_dir}/results.csv", file=sys.stderr)
        return 1
    return 0


def _cmd_energy_curve(cfg, s):
    _write_run_config(cfg)
    for rate, mean, sd, k in cmd_energy_curve(cfg):
        print(f"rate {rate:.2f}: normalized energy {mean:.4f} ± {sd:.4f} ({k} seeds)")
    return 0


def _cmd_p_sweep(cfg, s):
    p_values = _floats(s.get("p_values", "1.5,2.0,2.4,3.0"))
    rate = float(s.get("rate", 0.6))
    _write_run_config(cfg, {"p_values": ",".join(repr(p) for p in p_values), "rate": rate})
    rows = cmd_p_sweep(cfg, p_values, rate)
    failed = 0
    for p, r, m, sd, pm, ps, k, f in rows:
        print(f"p {p:.2f}: denoised {m:6.2f} ± {sd:5.2f}   poisoned {pm:6.2f} ± {ps:5.2f} ({k} ok)")
        failed += f
    return 1 if failed else 0


COMMANDS = {
    "synth": (_cmd_synth, "generate a planted-partition dataset and write it as text files"),
    "load": (_cmd_load, "validate text dataset files and print a summary"),
    "perturb": (_cmd_perturb, "apply an edge-insertion attack and write the perturbed edges"),
    "denoise": (_cmd_denoise, "perturb, then denoise the Laplacian and write the result"),
    "train": (_cmd_train, "train and evaluate the GCN on a (optionally perturbed) graph"),
    "pipeline": (_cmd_pipeline, "full experiment over rates and seeds"),
    "energy-curve": (_cmd_energy_curve, "normalized Dirichlet energy against perturbation rate"),
    "p-sweep": (_cmd_p_sweep, "denoised accuracy against the norm exponent p"),
}


def _add_common(sp):
    g = sp.add_argument_group("run")
    g.add_argument("--config", metavar="FILE", help="key = value settings file; flags override it")
    g.add_argument("--out", metavar="DIR", help="output directory")
    g.add_argument("--seed", type=int)
    g.add_argument("--reps", type=int, help="number of seeds per level")
    g.add_argument("--rate", type=float, help="perturbation rate (fraction of clean edges)")
    g.add_argument("--rates", help="comma-separated rates; 0 is always added")
    g.add_argument("--kind", choices=("random_insert", "dissimilar_insert"))
    g.add_argument("--jobs", type=int, help="parallel worker processes")
    g.add_argument("--p-values", dest="p_values", help="comma-separated p values for p-sweep")
    g.add_argument("--threshold", type=float, help="drop denoised edges at or below this weight")
    g.add_argument("--row-normalize", dest="row_normalize", action="store_const", const=True,
                   help="scale feature rows to unit L1 norm")

    g = sp.add_argument_group("denoising")
    g.add_argument("--alpha", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--p", type=float)
    g.add_argument("--max-iters", dest="max_iters", type=int)
    g.add_argument("--rel-tol", dest="rel_tol", type=float)
    g.add_argument("--step-mode", dest="step_mode", choices=("lipschitz", "fixed"))
    g.add_argument("--eta", type=float, help="step size for --step-mode fixed")
    g.add_argument("--c-mode", dest="c_mode", choices=("algorithm1", "exact"))
    g.add_argument("--support", choices=("full", "input"))

    g = sp.add_argument_group("training")
    g.add_argument("--lr-gnn", dest="lr_gnn", type=float)
    g.add_argument("--epochs", type=int)
    g.add_argument("--hidden", type=int)
    g.add_argument("--patience", type=int)

    g = sp.add_argument_group("data")
    g.add_argument("--edges")
    g.add_argument("--features")
    g.add_argument("--labels")
    g.add_argument("--n", type=int)
    g.add_argument("--classes", type=int)
    g.add_argument("--p-in", dest="p_in", type=float)
    g.add_argument("--p-out", dest="p_out", type=float)
    g.add_argument("--feature-dim", dest="feature_dim", type=int)
    g.add_argument("--separation", type=float)
    g.add_argument("--noise-sd", dest="noise_sd", type=float)
    g.add_argument("--data-seed", dest="data_seed", type=int)
    g.add_argument("--split", help="train,val,test fractions")


def make_parser():
    parser = argparse.ArgumentParser(prog="lapdefense", description="Laplacian denoising defense for GCN node classification.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        _add_common(sub.add_parser(name, help=help_text))
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        s = _settings(args)
        cfg = build_run_config(s)
        return COMMANDS[args.command][0](cfg, s)
    except (LapDefenseError, OSError) as exc:
        print(f"lapdefense: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
