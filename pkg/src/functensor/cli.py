"""Command-line pipeline: synthetic data generation, model training,
evaluation reports, and rank sweeps.

Subcommands: ``gen``, ``train``, ``evaluate``, ``sweep``.  Every command is
deterministic given its flags and seeds, and every output file embeds a
manifest line (config digest + seeds) for provenance.  Exit codes:
0 success, 1 usage/configuration, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import (
    DEFAULT_RIDGE,
    LinearModel,
    RbfNetwork,
    fit_linear,
    fit_rbf_network,
    predict_linear,
    predict_rbf,
)
from .data import (
    SplitSpec,
    Standardizer,
    TrajectoryDataset,
    gen_synthetic_arm,
    load_dataset,
    nmse,
    save_dataset,
    split,
    standardize,
)
from .errors import (
    ConfigError,
    DataFormatError,
    DomainError,
    NumericalError,
    ShapeError,
    UnknownCategoryError,
)
from .fileio import atomic_write_text
from .functional import FunctionalParafacModel, FunctionalTuckerModel, predict, train_all_dofs
from .modelfile import load_model, model_kind, save_model, standardizer_digest, write_history
from .optim import TrainConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

METHODS = ("tucker", "parafac", "linear", "rbf-net")
FUNCTIONAL_METHODS = ("tucker", "parafac")


class UsageError(Exception):
    """Bad flags or bad run configuration; exits with code 1."""


# --------------------------------------------------------------------------
# Config files: flat key=value lines, '#' comments
# --------------------------------------------------------------------------

CONFIG_KEYS = {
    "rank": int,
    "learning_rate": float,
    "batch_size": int,
    "max_epochs": int,
    "patience": int,
    "seed": int,
    "adam_beta1": float,
    "adam_beta2": float,
    "adam_eps": float,
    "ridge": float,
}


def read_config(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    values: dict = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = CONFIG_KEYS[key](raw.strip())
        except ValueError:
            raise UsageError(
                f"{path}:{lineno}: cannot parse {raw.strip()!r} as "
                f"{CONFIG_KEYS[key].__name__}"
            ) from None
    return values


def build_train_config(args) -> tuple[TrainConfig, float]:
    """Merge config file and flag overrides; returns (config, ridge)."""
    values = read_config(args.config) if args.config else {}
    ridge = values.pop("ridge", DEFAULT_RIDGE)
    if args.rank is not None:
        values["rank"] = args.rank
    if getattr(args, "seed", None) is not None:
        values["seed"] = args.seed
    if "rank" not in values:
        if args.method == "linear":
            values["rank"] = 1  # unused by the linear path
        else:
            raise UsageError(
                f"method {args.method!r} needs a rank (--rank or config file)"
            )
    try:
        return TrainConfig(**values), ridge
    except ConfigError as e:
        raise UsageError(str(e)) from None


def config_digest(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


# --------------------------------------------------------------------------
# Report types
# --------------------------------------------------------------------------


@dataclass
class ReportRow:
    """One method's nMSE row, values as fractions (not percent)."""

    method: str
    per_dof: np.ndarray  # (C,) mean across splits
    mean: float  # mean across DoFs (averaged across splits)
    std: float | None = None  # across split repetitions, never across DoFs
    label: str = ""  # e.g. an external provenance tag for injected rows


@dataclass
class ExperimentReport:
    rows: list[ReportRow]
    manifest: str
    split_name: str = "test"

    def to_text(self) -> str:
        n_dof = max(r.per_dof.size for r in self.rows)
        name_w = max(24, max(len(_row_title(r)) for r in self.rows) + 2)
        header = "Method".ljust(name_w) + "".join(
            f"DoF {i + 1}".rjust(9) for i in range(n_dof)
        ) + "  Mean +/- std in %"
        lines = [f"# manifest: {self.manifest}", f"# split: {self.split_name}", header]
        for r in self.rows:
            cells = "".join(f"{100 * v:9.2f}" for v in r.per_dof)
            tail = f"{100 * r.mean:8.2f}"
            if r.std is not None:
                tail += f" +/- {100 * r.std:.2f}"
            lines.append(_row_title(r).ljust(name_w) + cells + "  " + tail)
        return "\n".join(lines)

    def to_csv(self) -> str:
        n_dof = max(r.per_dof.size for r in self.rows)
        cols = ",".join(f"dof{i + 1}_nmse_pct" for i in range(n_dof))
        lines = [f"# manifest: {self.manifest}",
                 f"method,label,{cols},mean_nmse_pct,std_pct"]
        for r in self.rows:
            cells = ",".join(f"{100 * v:.6f}" for v in r.per_dof)
            std = f"{100 * r.std:.6f}" if r.std is not None else ""
            lines.append(f"{r.method},{r.label},{cells},{100 * r.mean:.6f},{std}")
        return "\n".join(lines)


def _row_title(r: ReportRow) -> str:
    return f"{r.method} ({r.label})" if r.label else r.method


@dataclass
class RankSweepResult:
    method: str
    entries: list[tuple[int, float]]  # (rank, mean nMSE fraction), ranks ascending
    manifest: str

    def __post_init__(self):
        ranks = [r for r, _ in self.entries]
        if any(b <= a for a, b in zip(ranks, ranks[1:])):
            raise ConfigError("sweep ranks must be strictly increasing")

    def to_text(self) -> str:
        lines = [f"# manifest: {self.manifest}",
                 f"# method: {self.method}",
                 f"{'rank':>6}  {'mean_nmse_pct':>13}"]
        for rank, value in self.entries:
            lines.append(f"{rank:>6}  {100 * value:13.4f}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        lines = [f"# manifest: {self.manifest}", "rank,mean_nmse_pct"]
        for rank, value in self.entries:
            lines.append(f"{rank},{100 * value:.6f}")
        return "\n".join(lines)


# --------------------------------------------------------------------------
# Shared pipeline steps
# --------------------------------------------------------------------------


@dataclass
class PreparedSplit:
    """A dataset split with standardized input blocks."""

    dataset: TrajectoryDataset
    spec: SplitSpec
    standardizer: Standardizer

    def blocks(self, name: str):
        idx = self.spec.indices(name)
        return self.standardizer.transform_blocks(*self.dataset.inputs(idx))

    def concat(self, name: str) -> np.ndarray:
        idx = self.spec.indices(name)
        return self.standardizer.transform_concat(self.dataset.concat_inputs(idx))

    def targets(self, name: str) -> np.ndarray:
        return self.dataset.torques[self.spec.indices(name)]


def prepare(dataset: TrajectoryDataset, seed: int, standardized: bool) -> PreparedSplit:
    spec = split(dataset, seed)
    std = standardize(dataset, spec.train, enabled=standardized)
    return PreparedSplit(dataset=dataset, spec=spec, standardizer=std)


def train_method(
    method: str,
    prep: PreparedSplit,
    cfg: TrainConfig,
    ridge: float = DEFAULT_RIDGE,
    free_precision: bool = False,
):
    """Fit one method on the prepared split; returns (models, histories).

    Functional methods give one model per DoF; the baselines give a single
    multi-output model (with an empty history list for linear).
    """
    if method in FUNCTIONAL_METHODS:
        models, histories = train_all_dofs(
            prep.blocks("train"),
            prep.targets("train"),
            prep.blocks("validation"),
            prep.targets("validation"),
            cfg,
            method,
            free_precision=free_precision,
        )
        return models, histories
    if method == "linear":
        model = fit_linear(prep.concat("train"), prep.targets("train"), ridge=ridge)
        return [model], []
    if method == "rbf-net":
        model, history = fit_rbf_network(
            prep.concat("train"),
            prep.targets("train"),
            prep.concat("validation"),
            prep.targets("validation"),
            cfg.rank,
            cfg,
        )
        return [model], [history]
    raise UsageError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def predictions_for(models: list, prep: PreparedSplit, split_name: str) -> np.ndarray:
    """Stack model predictions into an (n, C) matrix on the given split."""
    C = prep.dataset.n_outputs
    first = models[0]
    if isinstance(first, LinearModel):
        return predict_linear(first, prep.concat(split_name))
    if isinstance(first, RbfNetwork):
        return predict_rbf(first, prep.concat(split_name))
    covered = sorted(m.dof_index for m in models)
    if covered != list(range(C)):
        raise DataFormatError(
            f"functional models cover DoF indices {covered}, need 0..{C - 1}"
        )
    x1, x2, x3 = prep.blocks(split_name)
    out = np.empty((x1.shape[0], C))
    for m in models:
        out[:, m.dof_index] = predict(m, x1, x2, x3)
    return out


def evaluate_models(
    models: list, prep: PreparedSplit, split_name: str = "test"
) -> np.ndarray:
    """Per-DoF nMSE of a model group, using the training-split variance."""
    Y = prep.targets(split_name)
    Yhat = predictions_for(models, prep, split_name)
    return nmse(Yhat, Y, prep.standardizer.target_variance)


def mean_predictor_row(prep: PreparedSplit, split_name: str) -> ReportRow:
    std = prep.standardizer
    Y = prep.targets(split_name)
    Yhat = np.broadcast_to(std.target_mean, Y.shape)
    values = nmse(Yhat, Y, std.target_variance)
    return ReportRow(method="mean-predictor", per_dof=values,
                     mean=float(values.mean()))


def load_reference_rows(path: str | Path) -> list[ReportRow]:
    """Externally supplied comparison rows (never computed here); JSON list of
    objects with method, label, per_dof (percent), mean, optional std."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"reference file not found: {path}")
    try:
        entries = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise DataFormatError(f"{path}: invalid JSON ({e})") from None
    rows = []
    for e in entries:
        rows.append(
            ReportRow(
                method=str(e["method"]),
                label=str(e.get("label", "reference")),
                per_dof=np.asarray(e["per_dof"], dtype=np.float64) / 100.0,
                mean=float(e["mean"]) / 100.0,
                std=float(e["std"]) / 100.0 if "std" in e else None,
            )
        )
    return rows


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def cmd_gen(args) -> int:
    dataset = gen_synthetic_arm(args.n, seed=args.seed, noise_std=args.noise_std)
    manifest = {
        "command": "gen", "n": args.n, "seed": args.seed,
        "noise_std": args.noise_std, "version": __version__,
    }
    header = f"manifest: {config_digest(manifest)} {json.dumps(manifest, sort_keys=True)}"
    save_dataset(args.out, dataset, header=header)
    print(f"wrote {dataset.n_samples} samples to {args.out}")
    return EXIT_OK


def _train_manifest(args, cfg: TrainConfig, ridge: float) -> dict:
    payload = {
        "command": "train",
        "method": args.method,
        "data": str(args.data),
        "config": cfg.__dict__,
        "ridge": ridge,
        "free_precision": args.free_precision,
        "standardize": not args.no_standardize,
        "version": __version__,
    }
    return {
        "config_digest": config_digest(payload),
        "method": args.method,
        "seed": cfg.seed,
        "split_seed": cfg.seed,
        "rank": cfg.rank,
        "free_precision": args.free_precision,
        "standardize": not args.no_standardize,
    }


def cmd_train(args) -> int:
    if args.method not in METHODS:
        raise UsageError(f"unknown method {args.method!r}; choose from {', '.join(METHODS)}")
    cfg, ridge = build_train_config(args)
    dataset = load_dataset(args.data)
    prep = prepare(dataset, cfg.seed, standardized=not args.no_standardize)
    if args.verbose:
        _audit_split(prep.spec)
    models, histories = train_method(
        args.method, prep, cfg, ridge=ridge, free_precision=args.free_precision
    )
    manifest = _train_manifest(args, cfg, ridge)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest_line = json.dumps(manifest, sort_keys=True)
    if args.method in FUNCTIONAL_METHODS:
        for m, h in zip(models, histories):
            save_model(out / f"model_dof{m.dof_index}.json", m,
                       prep.standardizer, manifest)
            write_history(out / f"history_dof{m.dof_index}.csv", h, manifest_line)
            best = h.val_metric[h.best_epoch - 1] if len(h) else float("nan")
            print(f"dof {m.dof_index}: best val nMSE {100 * best:.4f}% "
                  f"at epoch {h.best_epoch}/{len(h)}")
    else:
        save_model(out / "model.json", models[0], prep.standardizer, manifest)
        for h in histories:
            write_history(out / "history.csv", h, manifest_line)
            best = h.val_metric[h.best_epoch - 1] if len(h) else float("nan")
            print(f"best val nMSE {100 * best:.4f}% at epoch "
                  f"{h.best_epoch}/{len(h)}")
        if args.method == "linear":
            values = evaluate_models(models, prep, "validation")
            print(f"validation nMSE {100 * float(values.mean()):.4f}%")
    print(f"wrote {args.method} model(s) to {out}")
    return EXIT_OK


def _collect_model_paths(raw_paths: list[str]) -> list[Path]:
    paths: list[Path] = []
    for raw in raw_paths:
        p = Path(raw)
        if p.is_dir():
            found = sorted(p.glob("model*.json"))
            if not found:
                raise DataFormatError(f"no model*.json files in directory {p}")
            paths.extend(found)
        else:
            paths.append(p)
    return paths


def _audit_split(spec: SplitSpec, eval_name: str | None = None):
    train_set = set(spec.train.tolist())
    overlap_val = train_set.intersection(spec.validation.tolist())
    overlap_test = train_set.intersection(spec.test.tolist())
    print(
        f"split audit: train={spec.train.size} validation={spec.validation.size} "
        f"test={spec.test.size} train/val overlap={len(overlap_val)} "
        f"train/test overlap={len(overlap_test)}"
    )
    if overlap_val or overlap_test:
        raise NumericalError("split indices overlap; test isolation violated")
    if eval_name:
        print(f"evaluation reads only the {eval_name!r} rows")


def cmd_evaluate(args) -> int:
    paths = _collect_model_paths(args.models)
    loaded = [load_model(p) for p in paths]
    digests = {d for _, s, _ in loaded for d in [standardizer_digest(s)]}
    if len(digests) > 1:
        raise DataFormatError(
            "model files carry different standardizers; they were not "
            "trained on the same split"
        )
    standardizer = loaded[0][1]
    manifests = [m for _, _, m in loaded]
    seed = args.seed
    if seed is None:
        seeds = {m.get("split_seed") for m in manifests}
        if len(seeds) != 1 or None in seeds:
            raise UsageError(
                "model files disagree on the split seed; pass --seed explicitly"
            )
        seed = int(seeds.pop())

    dataset = load_dataset(args.data)
    if dataset.dof != standardizer.dof:
        raise DataFormatError(
            f"data has {dataset.dof} DoF but models expect {standardizer.dof}"
        )
    spec = split(dataset, seed)
    prep = PreparedSplit(dataset=dataset, spec=spec, standardizer=standardizer)
    if args.verbose:
        _audit_split(spec, eval_name=args.split)

    groups: dict[str, list] = {}
    for (model, _, _), path in zip(loaded, paths):
        groups.setdefault(model_kind(model), []).append(model)

    manifest = {
        "command": "evaluate",
        "data": str(args.data),
        "split_seed": seed,
        "split": args.split,
        "models": [str(p) for p in paths],
        "version": __version__,
    }
    rows = []
    for kind, models in sorted(groups.items()):
        values = evaluate_models(models, prep, args.split)
        rows.append(ReportRow(method=kind, per_dof=values, mean=float(values.mean())))
    rows.append(mean_predictor_row(prep, args.split))
    if args.reference:
        rows.extend(load_reference_rows(args.reference))
    report = ExperimentReport(
        rows=rows, manifest=config_digest(manifest), split_name=args.split
    )
    print(report.to_text())
    if args.out:
        out = Path(args.out)
        atomic_write_text(out, report.to_text())
        atomic_write_text(out.with_suffix(".csv"), report.to_csv())
        print(f"wrote {out} and {out.with_suffix('.csv')}")
    return EXIT_OK


def _parse_int_list(raw: str, what: str) -> list[int]:
    try:
        values = [int(p) for p in raw.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"cannot parse {what} list {raw!r}") from None
    if not values:
        raise UsageError(f"{what} list is empty")
    return values


def cmd_sweep(args) -> int:
    if args.method not in METHODS:
        raise UsageError(f"unknown method {args.method!r}; choose from {', '.join(METHODS)}")
    ranks = sorted(set(_parse_int_list(args.ranks, "rank")))
    seeds = _parse_int_list(args.seeds, "seed")
    dataset = load_dataset(args.data)
    base_values = read_config(args.config) if args.config else {}
    base_values.pop("rank", None)
    ridge = base_values.pop("ridge", DEFAULT_RIDGE)

    entries = []
    for rank in ranks:
        per_seed = []
        for seed in seeds:
            cfg = TrainConfig(**{**base_values, "rank": rank, "seed": seed})
            prep = prepare(dataset, seed, standardized=not args.no_standardize)
            models, _ = train_method(
                args.method, prep, cfg, ridge=ridge,
                free_precision=args.free_precision,
            )
            values = evaluate_models(models, prep, "test")
            per_seed.append(float(values.mean()))
            if args.verbose:
                print(f"rank {rank} seed {seed}: mean test nMSE "
                      f"{100 * per_seed[-1]:.4f}%")
        entries.append((rank, float(np.mean(per_seed))))
    manifest = {
        "command": "sweep", "method": args.method, "data": str(args.data),
        "ranks": ranks, "seeds": seeds, "config": base_values, "ridge": ridge,
        "free_precision": args.free_precision,
        "standardize": not args.no_standardize, "version": __version__,
    }
    result = RankSweepResult(
        method=args.method, entries=entries, manifest=config_digest(manifest)
    )
    print(result.to_text())
    if args.out:
        out = Path(args.out)
        atomic_write_text(out, result.to_text())
        atomic_write_text(out.with_suffix(".csv"), result.to_csv())
        print(f"wrote {out} and {out.with_suffix('.csv')}")
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser and entry point
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 for usage problems, not argparse's 2
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="functensor",
                     description="Tensor-decomposition regression pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[], help="generate synthetic two-link arm data")
    p.add_argument("--n", type=int, required=True, help="number of samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-std", type=float, default=0.0)
    p.add_argument("--out", required=True, help="output dataset file")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train one method on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--method", required=True, help="|".join(METHODS))
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--free-precision", action="store_true")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="nMSE report for trained models")
    p.add_argument("models", nargs="+", help="model files or directories")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=None, help="split seed")
    p.add_argument("--split", choices=("train", "validation", "test"),
                   default="test")
    p.add_argument("--reference", default=None,
                   help="JSON file with external comparison rows")
    p.add_argument("--out", default=None, help="report file (txt; csv sibling)")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="train/evaluate across ranks and seeds")
    p.add_argument("--data", required=True)
    p.add_argument("--method", required=True)
    p.add_argument("--ranks", required=True, help="comma-separated ranks")
    p.add_argument("--seeds", required=True, help="comma-separated seeds")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--free-precision", action="store_true")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, UnknownCategoryError, ShapeError, DomainError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
