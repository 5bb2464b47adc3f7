"""Command line front end.

    gsgpls run --config experiment.yaml [--runs N] [--seed S] [--out DIR] [--workers W]
    gsgpls compare --in DIR [--alpha 0.01]
    gsgpls datasets PATH... [--expect TABLE]

``run`` writes ``runs.csv`` and ``manifest.json``; ``compare`` reads
``runs.csv`` and writes, per dataset, the significance matrix, box-plot
summaries, median convergence curves and local-search probability traces.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .dataset import BENCHMARK_TABLE, Dataset, DatasetError, friedman_surrogate, load_dataset, wide_noisy
from .engine import VARIANTS, EvolutionConfig, RunLog, run
from .stats import significance_matrix, summarize

log = logging.getLogger("gsgpls")

RUNS_HEADER = ("dataset", "variant", "run", "generation", "train_rmse", "test_rmse", "ls_prob")
SYNTHETIC = {"synthetic:friedman": friedman_surrogate, "synthetic:wide": wide_noisy}
SPEC_KEYS = ("datasets", "variants", "runs", "seed", "output_dir", "workers", "evolution")
MANIFEST_KEYS = {"config", "version", "datasets", "seeds"}


class SpecError(ValueError):
    pass


def fmt(x) -> str:
    """17 significant digits, enough for an exact float round trip."""
    if x is None:
        return ""
    return f"{float(x):.17g}"


@dataclass
class ExperimentSpec:
    datasets: list[str]
    variants: list[str]
    runs: int = 100
    seed: int = 0
    output_dir: str = "results"
    workers: int = 1
    evolution: dict = field(default_factory=dict)

    def __post_init__(self):
        if isinstance(self.datasets, str):
            self.datasets = [self.datasets]
        if isinstance(self.variants, str):
            self.variants = [self.variants]
        if not self.datasets:
            raise SpecError("at least one dataset is required")
        if not self.variants:
            raise SpecError("at least one variant is required")
        bad = [v for v in self.variants if v not in VARIANTS]
        if bad:
            raise SpecError(f"unknown variant(s) {bad}; valid tags: {', '.join(VARIANTS)}")
        if len(set(self.variants)) != len(self.variants):
            raise SpecError("variants must not repeat")
        if not isinstance(self.runs, int) or self.runs < 1:
            raise SpecError("runs must be a positive integer")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise SpecError("seed must be a non-negative integer")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise SpecError("workers must be a positive integer")
        allowed = set(EvolutionConfig.field_names()) - {"variant"}
        unknown = set(self.evolution or {}) - allowed
        if unknown:
            raise SpecError(f"unknown evolution key(s) {sorted(unknown)}; allowed: {sorted(allowed)}")
        self.evolution = dict(self.evolution or {})
        for variant in self.variants:
            try:
                self.config_for(variant)
            except (TypeError, ValueError) as exc:
                raise SpecError(f"invalid evolution settings: {exc}") from exc

    def config_for(self, variant: str) -> EvolutionConfig:
        return EvolutionConfig(variant=variant, **self.evolution)

    def seed_for(self, run_index: int) -> int:
        return self.seed + run_index


def load_spec(path) -> ExperimentSpec:
    """Read an experiment description (YAML or JSON, including a previously
    written ``manifest.json``).  Relative dataset paths are taken relative to
    the file's directory."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise SpecError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise SpecError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise SpecError(f"{path}: expected a mapping at the top level")
    if "config" in raw and set(raw) <= MANIFEST_KEYS:
        raw = raw["config"]
    unknown = set(raw) - set(SPEC_KEYS)
    if unknown:
        raise SpecError(f"{path}: unknown key(s) {sorted(unknown)}; allowed: {list(SPEC_KEYS)}")
    if "datasets" not in raw or "variants" not in raw:
        raise SpecError(f"{path}: 'datasets' and 'variants' are required")
    datasets = raw["datasets"]
    if isinstance(datasets, str):
        datasets = [datasets]
    raw["datasets"] = [
        d if d in SYNTHETIC or Path(d).is_absolute() else str((path.parent / d).resolve())
        for d in datasets
    ]
    try:
        return ExperimentSpec(**raw)
    except TypeError as exc:
        raise SpecError(str(exc)) from exc


def resolve_dataset(source: str) -> Dataset:
    if source in SYNTHETIC:
        return SYNTHETIC[source]()
    return load_dataset(source)


def _digest(dataset: Dataset) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(dataset.inputs).tobytes())
    h.update(np.ascontiguousarray(dataset.targets).tobytes())
    return h.hexdigest()


def _job(args) -> RunLog:
    config, dataset, seed = args
    return run(config, dataset, seed)


def execute(spec: ExperimentSpec, out_dir: Path) -> Path:
    """Run every (dataset, variant, run) of ``spec``; returns the runs.csv path."""
    datasets = [resolve_dataset(source) for source in spec.datasets]
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        raise SpecError(f"dataset names must be unique, got {names}")

    jobs, keys = [], []
    for dataset in datasets:
        for variant in spec.variants:
            config = spec.config_for(variant)
            for r in range(spec.runs):
                jobs.append((config, dataset, spec.seed_for(r)))
                keys.append((dataset.name, variant, r))

    log.info("%d runs over %d dataset(s) and %d variant(s)", len(jobs), len(datasets), len(spec.variants))
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            logs = list(pool.map(_job, jobs, chunksize=1))
    else:
        logs = [_job(job) for job in jobs]

    out_dir.mkdir(parents=True, exist_ok=True)
    runs_path = out_dir / "runs.csv"
    with runs_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RUNS_HEADER)
        for (name, variant, r), run_log in zip(keys, logs):
            for rec in run_log.records:
                writer.writerow(
                    [name, variant, r, rec.generation, fmt(rec.train_rmse), fmt(rec.test_rmse), fmt(rec.ls_prob)]
                )

    manifest = {
        "version": __version__,
        "config": {
            "datasets": spec.datasets,
            "variants": spec.variants,
            "runs": spec.runs,
            "seed": spec.seed,
            "output_dir": str(out_dir),
            "workers": spec.workers,
            "evolution": {k: v for k, v in asdict(spec.config_for(spec.variants[0])).items() if k != "variant"},
        },
        "datasets": [
            {"name": d.name, "source": s, "num_vars": d.num_vars, "instances": d.n_cases, "sha256": _digest(d)}
            for d, s in zip(datasets, spec.datasets)
        ],
        "seeds": {str(r): spec.seed_for(r) for r in range(spec.runs)},
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return runs_path


def read_runs(path) -> dict:
    """``{dataset: {variant: {run: [(generation, train, test, prob), ...]}}}``
    with insertion order following the file."""
    table: dict = defaultdict(lambda: defaultdict(lambda: defaultdict(list)))
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RUNS_HEADER:
            raise SpecError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            prob = float(row["ls_prob"]) if row["ls_prob"] else None
            table[row["dataset"]][row["variant"]][int(row["run"])].append(
                (int(row["generation"]), float(row["train_rmse"]), float(row["test_rmse"]), prob)
            )
    return table


def _final_test(runs: dict) -> np.ndarray:
    return np.array([max(records)[2] for _, records in sorted(runs.items())])


def compare(in_dir: Path, alpha: float = 0.01, out=None) -> list[Path]:
    out = out or sys.stdout
    table = read_runs(in_dir / "runs.csv")
    written = []
    for name, by_variant in table.items():
        if len(by_variant) < 2:
            log.warning("dataset %s has a single variant; skipped", name)
            continue
        finals = {variant: _final_test(runs) for variant, runs in by_variant.items()}
        matrix = significance_matrix(finals)
        labels = matrix.labels

        path = in_dir / f"matrix_{name}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("variant",) + labels)
            for i, label in enumerate(labels):
                writer.writerow([label] + ["" if i == j else fmt(matrix.pvalues[i, j]) for j in range(len(labels))])
        written.append(path)

        path = in_dir / f"summary_{name}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ("variant", "n", "min", "q1", "median", "q3", "max", "whisker_low", "whisker_high", "n_outliers", "outliers")
            )
            for variant, sample in finals.items():
                s = summarize(sample)
                writer.writerow(
                    [variant, s.n]
                    + [fmt(v) for v in (s.minimum, s.q1, s.median, s.q3, s.maximum, s.whisker_low, s.whisker_high)]
                    + [len(s.outliers), ";".join(fmt(v) for v in s.outliers)]
                )
        written.append(path)

        written.extend(_write_curves(in_dir, name, by_variant))

        print(f"{name}: significant wins at alpha={alpha}", file=out)
        for variant, beaten in matrix.wins(alpha).items():
            print(f"  {variant:<11} {len(beaten):2d}  {' '.join(beaten)}", file=out)
    if not written:
        raise SpecError("no dataset has at least two variants to compare")
    return written


def _write_curves(in_dir: Path, name: str, by_variant: dict) -> list[Path]:
    conv = in_dir / f"convergence_{name}.csv"
    prob = in_dir / f"lsprob_{name}.csv"
    any_prob = False
    with conv.open("w", newline="") as fc, prob.open("w", newline="") as fp:
        wc = csv.writer(fc, lineterminator="\n")
        wp = csv.writer(fp, lineterminator="\n")
        wc.writerow(("variant", "generation", "median_train_rmse", "median_test_rmse"))
        wp.writerow(("variant", "generation", "mean_ls_prob", "std_ls_prob"))
        for variant, runs in by_variant.items():
            curves = np.array([[rec[1:3] for rec in sorted(records)] for _, records in sorted(runs.items())])
            med = np.median(curves, axis=0)
            for g, (tr, te) in enumerate(med):
                wc.writerow([variant, g, fmt(tr), fmt(te)])
            probs = [[rec[3] for rec in sorted(records)] for _, records in sorted(runs.items())]
            if all(p is not None for row in probs for p in row):
                any_prob = True
                p = np.array(probs, dtype=float)
                for g, (m, s) in enumerate(zip(p.mean(axis=0), p.std(axis=0))):
                    wp.writerow([variant, g, fmt(m), fmt(s)])
    if not any_prob:
        prob.unlink()
        return [conv]
    return [conv, prob]


def read_expected(source: str) -> dict[str, tuple[int, int, tuple[int, ...]]]:
    if source == "benchmarks":
        return dict(BENCHMARK_TABLE)
    table = {}
    with open(source, newline="") as fh:
        for row in csv.DictReader(fh):
            alts = tuple(int(a) for a in (row.get("alt_num_vars") or "").split(";") if a.strip())
            table[row["name"].strip().lower()] = (int(row["num_vars"]), int(row["instances"]), alts)
    return table


def conformance(paths, expected=None, out=None) -> int:
    """Print variable and instance counts per file; returns the number of
    files that failed to load."""
    out = out or sys.stdout
    failures = 0
    print(f"{'dataset':<14}{'variables':>10}{'instances':>11}  status", file=out)
    for path in paths:
        name = Path(path).stem
        try:
            d = load_dataset(path)
        except DatasetError as exc:
            failures += 1
            print(f"{name:<14}{'-':>10}{'-':>11}  ERROR {type(exc).__name__}: {exc}", file=out)
            continue
        status = ""
        if expected is not None:
            entry = expected.get(name.lower())
            if entry is None:
                status = "not in expected table"
            else:
                num_vars, instances, alts = entry
                if d.n_cases != instances:
                    status = f"MISMATCH: expected {instances} instances"
                elif d.num_vars == num_vars:
                    status = "ok" + (f" (descriptions also quote {'/'.join(map(str, alts))} variables)" if alts else "")
                elif d.num_vars in alts:
                    status = f"ok: {d.num_vars} variables matches the description; table lists {num_vars}"
                else:
                    status = f"MISMATCH: expected {num_vars} variables"
        print(f"{name:<14}{d.num_vars:>10}{d.n_cases:>11}  {status}".rstrip(), file=out)
    return failures


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gsgpls", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute seeded runs and write runs.csv + manifest.json")
    p.add_argument("--config", required=True, help="YAML/JSON experiment file or a manifest.json")
    p.add_argument("--runs", type=int, help="override the run count")
    p.add_argument("--seed", type=int, help="override the base seed")
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--workers", type=int, help="parallel worker processes")

    p = sub.add_parser("compare", help="significance matrices and summaries from runs.csv")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--alpha", type=float, default=0.01)

    p = sub.add_parser("datasets", help="report variable/instance counts of dataset files")
    p.add_argument("paths", nargs="+")
    p.add_argument("--expect", help="CSV table (name,num_vars,instances[,alt_num_vars]) or 'benchmarks'")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "run":
            spec = load_spec(args.config)
            overrides = {k: v for k, v in (("runs", args.runs), ("seed", args.seed), ("workers", args.workers)) if v is not None}
            if args.out:
                overrides["output_dir"] = args.out
            if overrides:
                spec = ExperimentSpec(**{**asdict(spec), **overrides})
            path = execute(spec, Path(spec.output_dir))
            print(path)
        elif args.command == "compare":
            for path in compare(Path(args.in_dir), args.alpha):
                log.info("wrote %s", path)
        else:
            expected = read_expected(args.expect) if args.expect else None
            return 1 if conformance(args.paths, expected) else 0
    except (SpecError, DatasetError, OSError, ValueError) as exc:
        print(f"gsgpls: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
