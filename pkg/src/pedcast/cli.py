"""Command-line entry point.

Subcommands wire the library into reproducible runs driven by an INI config
file. Exit codes: 0 success, 2 config error, 3 data error, 4 compute error.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import ClassifierConfig, DestinationClassifier
from .clustering import ClusterModel, LabeledDataset, build_labeled_dataset, cluster_and_merge
from .data import (
    CANONICAL_COLUMN_MAP,
    SENSOR_LOG_COLUMN_MAP,
    DatasetConfig,
    SyntheticScenario,
    assign_condition,
    clean,
    generate_synthetic,
    ingest_csv,
    resample,
    split_epoch,
    write_canonical_csv,
)
from .errors import ComputeError, ConfigError, DataError, PedcastError
from .harness import (
    Hyper,
    class_weights,
    dataset_tensors,
    run_ablation,
    run_cv,
    significance_report,
    train_classifier,
)
from .metrics import ConfusionMatrix, MetricsReport, accuracy_and_kappa
from .nn import load_checkpoint, save_checkpoint
from .reporting import (
    canonical_json,
    format_comparison_table,
    format_contingency_table,
    plot_displacement_comparison,
    plot_learning_curves,
    write_report,
)
from .stats import ALPHA, ContingencyTable, build_contingency, chi_square_test

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_COMPUTE = 4

#: Environment variable overriding the configured output directory.
OUT_DIR_ENV = "PEDCAST_OUT_DIR"

DEFAULT_CONFIG = """\
# pedcast run configuration (all values shown are the defaults used when a
# key is omitted; desk-scale demo values for the synthetic scenario)

[dataset]
l = 10
l_prime = 10
c_w = 2
c_d = 2
# comma-separated hh:mm-hh:mm windows, end minute inclusive
peak_windows = 12:00-16:59
# date:weather_idx pairs for ingesting externally logged data
calendar =
unit_scale = 1.0

[scenario]
# x,y anchor pairs separated by ';'. The demo floor has two pairs of nearby
# destinations whose within-pair choice depends on the weather/time condition.
dest_anchors = 26,8; 26,14; 8,26; 14,26
origin_anchors = 2,2; 2,10
# one probability row per combined condition c = weather * c_d + daypart
priors = 0.40,0.10,0.40,0.10; 0.10,0.40,0.10,0.40; 0.40,0.10,0.10,0.40; 0.10,0.40,0.40,0.10
counts = 500, 500, 500, 500
noise_sigma = 2.0
samples_per_traj = 50
walk_speed = 1.4

[cluster]
init_centroids = 26,8; 26,14; 8,26; 14,26
min_path_length = 1.0
min_samples = 2
# label-based loop removal; synthetic origins never coincide with
# destination anchors, so the demo leaves it off
drop_same_origin_dest = false

[hyper]
epochs = 24
batch_size = 256
lr = 0.003
gamma = 2.0
lambda_p = 0.5
hidden = 24
embed_dim = 16
fuse_dim = 16
dropout = 0.5
gate_input = branches
predictor_epochs = 30
predictor_batch_size = 512
predictor_hidden = 24
predictor_dropout = 0.5
predict_offsets = false

[run]
seed = 0
out_dir = runs/demo
"""


@dataclasses.dataclass
class RunConfig:
    dataset: DatasetConfig
    scenario: SyntheticScenario | None
    init_centroids: np.ndarray | None
    min_path_length: float
    min_samples: int
    drop_same_origin_dest: bool
    hyper: Hyper
    seed: int
    out_dir: Path
    raw_text: str

    def echo(self) -> dict:
        d = dataclasses.asdict(self.dataset)
        d["peak_windows"] = [list(w) for w in self.dataset.peak_windows]
        d["weather_calendar"] = dict(self.dataset.weather_calendar)
        out = {
            "dataset": d,
            "hyper": dataclasses.asdict(self.hyper),
            "cluster": {
                "init_centroids": None if self.init_centroids is None
                else [[float(x), float(y)] for x, y in self.init_centroids],
                "min_path_length": self.min_path_length,
                "min_samples": self.min_samples,
                "drop_same_origin_dest": self.drop_same_origin_dest,
            },
            "seed": self.seed,
            "ini": self.raw_text,
        }
        if self.scenario is not None:
            out["scenario"] = {
                "dest_anchors": self.scenario.dest_anchors.tolist(),
                "origin_anchors": self.scenario.origin_anchors.tolist(),
                "priors": self.scenario.cond_priors.tolist(),
                "counts": [int(c) for c in self.scenario.counts],
                "noise_sigma": self.scenario.noise_sigma,
                "samples_per_traj": self.scenario.samples_per_traj,
                "walk_speed": self.scenario.walk_speed,
            }
        return out


def _parse_points(text: str) -> np.ndarray:
    try:
        rows = [
            [float(v) for v in chunk.split(",")]
            for chunk in text.split(";") if chunk.strip()
        ]
        arr = np.asarray(rows, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError
        return arr
    except ValueError:
        raise ConfigError(f"cannot parse point list from {text!r}")


def _parse_hhmm(text: str) -> int:
    parts = text.strip().split(":")
    if len(parts) not in (2, 3):
        raise ConfigError(f"cannot parse clock time {text!r}")
    h, m = int(parts[0]), int(parts[1])
    s = int(parts[2]) if len(parts) == 3 else 0
    return h * 3600 + m * 60 + s


def _parse_windows(text: str) -> list[tuple[int, int]]:
    windows = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            start, end = chunk.split("-")
        except ValueError:
            raise ConfigError(f"cannot parse peak window {chunk!r}")
        start_s = _parse_hhmm(start)
        end_s = _parse_hhmm(end)
        if len(end.strip().split(":")) == 2:
            end_s += 59  # minute-precision end is inclusive of its last second
        windows.append((start_s, end_s))
    return windows


def _parse_calendar(text: str) -> dict[str, int]:
    cal = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            date, idx = chunk.rsplit(":", 1)
            cal[date.strip()] = int(idx)
        except ValueError:
            raise ConfigError(f"cannot parse calendar entry {chunk!r}")
    return cal


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate an INI run configuration."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"cannot parse config: {e}")

    defaults = configparser.ConfigParser()
    defaults.read_string(DEFAULT_CONFIG)
    for section in defaults.sections():
        if not parser.has_section(section):
            parser.add_section(section)
        for key, value in defaults.items(section):
            if not parser.has_option(section, key):
                parser.set(section, key, value)

    try:
        ds = parser["dataset"]
        dataset = DatasetConfig(
            L=ds.getint("l"),
            L_prime=ds.getint("l_prime"),
            C_w=ds.getint("c_w"),
            C_d=ds.getint("c_d"),
            peak_windows=_parse_windows(ds.get("peak_windows")),
            weather_calendar=_parse_calendar(ds.get("calendar")),
            unit_scale=ds.getfloat("unit_scale"),
        )
        sc = parser["scenario"]
        scenario = None
        if sc.get("dest_anchors").strip():
            priors = np.asarray(
                [
                    [float(v) for v in row.split(",")]
                    for row in sc.get("priors").split(";") if row.strip()
                ],
                dtype=np.float64,
            )
            scenario = SyntheticScenario(
                dest_anchors=_parse_points(sc.get("dest_anchors")),
                cond_priors=priors,
                counts=[int(v) for v in sc.get("counts").split(",")],
                C_w=dataset.C_w,
                C_d=dataset.C_d,
                noise_sigma=sc.getfloat("noise_sigma"),
                origin_anchors=_parse_points(sc.get("origin_anchors"))
                if sc.get("origin_anchors").strip() else None,
                samples_per_traj=sc.getint("samples_per_traj"),
                walk_speed=sc.getfloat("walk_speed"),
            )
        cl = parser["cluster"]
        init_centroids = (
            _parse_points(cl.get("init_centroids"))
            if cl.get("init_centroids").strip() else None
        )
        hy = parser["hyper"]
        hyper = Hyper(
            epochs=hy.getint("epochs"),
            batch_size=hy.getint("batch_size"),
            lr=hy.getfloat("lr"),
            gamma=hy.getfloat("gamma"),
            lambda_p=hy.getfloat("lambda_p"),
            hidden=hy.getint("hidden"),
            embed_dim=hy.getint("embed_dim"),
            fuse_dim=hy.getint("fuse_dim"),
            dropout=hy.getfloat("dropout"),
            gate_input=hy.get("gate_input"),
            predictor_epochs=hy.getint("predictor_epochs"),
            predictor_batch_size=hy.getint("predictor_batch_size"),
            predictor_hidden=hy.getint("predictor_hidden"),
            predictor_dropout=hy.getfloat("predictor_dropout"),
            predict_offsets=hy.getboolean("predict_offsets"),
        )
        run = parser["run"]
        out_dir = Path(os.environ.get(OUT_DIR_ENV, run.get("out_dir")))
        return RunConfig(
            dataset=dataset,
            scenario=scenario,
            init_centroids=init_centroids,
            min_path_length=cl.getfloat("min_path_length"),
            min_samples=cl.getint("min_samples"),
            drop_same_origin_dest=cl.getboolean("drop_same_origin_dest"),
            hyper=hyper,
            seed=run.getint("seed"),
            out_dir=out_dir,
            raw_text=text,
        )
    except (ValueError, KeyError, DataError) as e:
        raise ConfigError(f"invalid configuration: {e}")


def _load_dataset(path: str | Path, cfg: RunConfig) -> list:
    trajs = ingest_csv(path)
    trajs = clean(trajs, cfg.min_path_length, cfg.min_samples)
    if not trajs:
        raise DataError(f"{path}: no trajectories survive cleaning")
    return [resample(t, cfg.dataset.n_points) for t in trajs]


def _write_config_echo(cfg: RunConfig) -> None:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "config_echo.json").write_text(canonical_json(cfg.echo()))


# ---------------------------------------------------------------- commands


def cmd_print_config(args) -> int:
    print(DEFAULT_CONFIG, end="")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = load_config(args.config)
    if cfg.scenario is None:
        raise ConfigError("config has no [scenario] section with dest_anchors")
    trajs = generate_synthetic(cfg.scenario, seed=cfg.seed)
    write_canonical_csv(args.output, trajs)
    per_cond: dict[tuple[int, int], int] = {}
    for t in trajs:
        key = (t.condition.weather_idx, t.condition.time_idx)
        per_cond[key] = per_cond.get(key, 0) + 1
    print(f"wrote {len(trajs)} trajectories to {args.output}")
    for (w, d), n in sorted(per_cond.items()):
        print(f"  weather={w} daypart={d}: {n}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    cfg = load_config(args.config) if args.config else None
    if args.format == "canonical":
        column_map, unit_scale = CANONICAL_COLUMN_MAP, args.unit_scale
    else:
        column_map, unit_scale = SENSOR_LOG_COLUMN_MAP, args.unit_scale
    trajs = ingest_csv(args.input, column_map, unit_scale)
    if args.format == "sensor":
        if cfg is None or not cfg.dataset.weather_calendar:
            raise ConfigError(
                "sensor logs carry no condition columns; supply --config with a "
                "[dataset] calendar to label them"
            )
        for t in trajs:
            date, sod = split_epoch(float(t.times[0]), args.utc_offset * 3600.0)
            t.condition = assign_condition(date, sod, cfg.dataset)
    write_canonical_csv(args.output, trajs)
    print(f"ingested {len(trajs)} trajectories -> {args.output}")
    return EXIT_OK


def cmd_cluster(args) -> int:
    cfg = load_config(args.config)
    if cfg.init_centroids is None:
        raise ConfigError("config has no [cluster] init_centroids")
    rts = _load_dataset(args.data, cfg)
    model, dataset, table_pre, table_post = cluster_and_merge(
        rts, cfg.init_centroids, cfg.dataset.n_conditions, cfg.dataset.C_d,
        cfg.drop_same_origin_dest,
    )
    model.save(args.output)
    result = chi_square_test(table_post)
    print(format_contingency_table(
        table_post.counts.tolist(), result.chi2_obs, result.dof, result.log10_p
    ))
    merges = {k: v for k, v in model.merge_map.items() if k != v}
    if merges:
        print(f"merged clusters: {merges}")
    print(f"K = {model.K} surviving clusters; model -> {args.output}")
    _write_config_echo(cfg)
    (cfg.out_dir / "contingency.json").write_text(canonical_json({
        "counts": table_post.counts.tolist(),
        "chi2": result.chi2_obs,
        "dof": result.dof,
        "log10_p": result.log10_p,
        "alpha": ALPHA,
        "significant": result.significant_at(ALPHA),
        "merged_clusters": {str(k): v for k, v in merges.items()},
    }))
    if args.labels:
        with open(args.labels, "w") as fh:
            fh.write("ped_id,label\n")
            for rt, lab in zip(dataset.trajectories, dataset.labels):
                fh.write(f"{rt.ped_id},{lab}\n")
        print(f"labels -> {args.labels}")
    return EXIT_OK


def cmd_wt_test(args) -> int:
    cfg = load_config(args.config)
    if args.counts:
        rows = []
        with open(args.counts) as fh:
            for line in fh:
                line = line.strip()
                if line and not line.startswith("#"):
                    rows.append([int(v) for v in line.split(",")])
        table = ContingencyTable(np.asarray(rows, dtype=np.int64))
    else:
        if not args.model:
            raise ConfigError("wt-test needs --counts or --data plus --model")
        model = ClusterModel.load(args.model)
        rts = _load_dataset(args.data, cfg)
        dataset = build_labeled_dataset(model, rts, cfg.drop_same_origin_dest)
        conds = [rt.condition.combined(cfg.dataset.C_d) for rt in dataset.trajectories]
        table = build_contingency(dataset.labels, conds, model.K, cfg.dataset.n_conditions)
    result = chi_square_test(table)
    decision = "significant" if result.significant_at(ALPHA) else "not significant"
    print(format_contingency_table(
        table.counts.tolist(), result.chi2_obs, result.dof, result.log10_p
    ))
    print(f"decision at alpha={ALPHA}: {decision}")
    if args.output:
        Path(args.output).write_text(canonical_json({
            "counts": table.counts.tolist(),
            "chi2": result.chi2_obs,
            "dof": result.dof,
            "log10_p": result.log10_p,
            "alpha": ALPHA,
            "significant": result.significant_at(ALPHA),
        }))
    return EXIT_OK


def _prepare_labeled(args, cfg: RunConfig) -> tuple[ClusterModel, LabeledDataset]:
    model = ClusterModel.load(args.model)
    rts = _load_dataset(args.data, cfg)
    dataset = build_labeled_dataset(model, rts, cfg.drop_same_origin_dest)
    if len(dataset) == 0:
        raise DataError("no labeled trajectories left after filtering")
    return model, dataset


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    _, dataset = _prepare_labeled(args, cfg)
    _write_config_echo(cfg)
    cv = run_cv(dataset, cfg.dataset, cfg.hyper, cfg.seed)
    payload = {
        "rotations": [
            {
                "rotation": r.rotation,
                "best_epoch": r.best_epoch,
                "test_acc": r.test_acc,
                "test_kappa": r.test_kappa,
                "confusion": r.confusion,
                "val_accuracy": r.val_accuracy,
                "train_loss": r.train_loss,
            }
            for r in cv.rotations
        ],
        "mean_test_acc": cv.mean_test_acc,
        "mean_test_kappa": cv.mean_test_kappa,
    }
    (cfg.out_dir / "cv.json").write_text(canonical_json(payload))
    print(f"mean test accuracy {cv.mean_test_acc:.4f}, kappa {cv.mean_test_kappa:.4f}")
    print(f"cv results -> {cfg.out_dir / 'cv.json'}")
    return EXIT_OK


def cmd_fit(args) -> int:
    """Train one classifier on the full dataset and write a checkpoint."""
    cfg = load_config(args.config)
    _, dataset = _prepare_labeled(args, cfg)
    _write_config_echo(cfg)
    obs, _, labels, w_idx, d_idx = dataset_tensors(dataset, cfg.dataset.L)
    beta = class_weights(labels, dataset.K)
    seq = np.random.SeedSequence(cfg.seed).generate_state(2)
    trained = train_classifier(
        obs, w_idx, d_idx, labels, obs, w_idx, d_idx, labels,
        cfg.dataset, cfg.hyper, beta, int(seq[0]), int(seq[1]), dataset.K,
    )
    ckpt = cfg.out_dir / "classifier.ckpt"
    blob = dict(trained.clf.params)
    blob.update({f"state.{k}": v for k, v in trained.clf.state.items()})
    save_checkpoint(ckpt, blob)
    meta = {
        "K": dataset.K,
        "C_w": cfg.dataset.C_w,
        "C_d": cfg.dataset.C_d,
        "hidden": cfg.hyper.hidden,
        "embed_dim": cfg.hyper.embed_dim,
        "fuse_dim": cfg.hyper.fuse_dim,
        "gate_input": cfg.hyper.gate_input,
        "dropout": cfg.hyper.dropout,
        "seed": cfg.seed,
        "best_epoch": trained.best_epoch,
    }
    (cfg.out_dir / "classifier_meta.json").write_text(canonical_json(meta))
    print(f"checkpoint -> {ckpt} (best epoch {trained.best_epoch})")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    _, dataset = _prepare_labeled(args, cfg)
    meta = json.loads(Path(args.meta).read_text())
    clf_cfg = ClassifierConfig(
        K=meta["K"], C_w=meta["C_w"], C_d=meta["C_d"], hidden=meta["hidden"],
        embed_dim=meta["embed_dim"], fuse_dim=meta["fuse_dim"],
        gate_input=meta["gate_input"], dropout=meta["dropout"],
    )
    clf = DestinationClassifier(clf_cfg)
    blob = load_checkpoint(args.checkpoint)
    clf.params = {k: v for k, v in blob.items() if not k.startswith("state.")}
    clf.state = {k[len("state."):]: v for k, v in blob.items() if k.startswith("state.")}
    obs, _, labels, w_idx, d_idx = dataset_tensors(dataset, cfg.dataset.L)
    pred = clf.predict(obs, w_idx, d_idx)
    cm = ConfusionMatrix.from_labels(labels, pred, dataset.K)
    acc, kappa, _ = accuracy_and_kappa(cm)
    print(f"accuracy {acc:.4f}  kappa {kappa:.4f}  n={cm.total}")
    return EXIT_OK


def _setting_metrics(paired, preds, ades, fdes) -> MetricsReport:
    cm = ConfusionMatrix.from_labels(paired.true_labels, preds, paired.K)
    acc, kappa, degenerate = accuracy_and_kappa(cm)
    return MetricsReport(
        ade=float(ades.mean()), fde=float(fdes.mean()), acc=acc, kappa=kappa,
        kappa_degenerate=degenerate, n_samples=cm.total,
        per_class_actual=[int(v) for v in cm.cm.sum(axis=1)],
    )


def cmd_ablate(args) -> int:
    cfg = load_config(args.config)
    _, dataset = _prepare_labeled(args, cfg)
    _write_config_echo(cfg)
    paired = run_ablation(dataset, cfg.dataset, cfg.hyper, cfg.seed)
    sig = significance_report(paired)
    m_a = _setting_metrics(paired, paired.pred_without, paired.ade_without, paired.fde_without)
    m_b = _setting_metrics(paired, paired.pred_with, paired.ade_with, paired.fde_with)
    payload = {
        "metrics_without_wt": m_a.to_dict(),
        "metrics_with_wt": m_b.to_dict(),
        "relative": m_b.relative_to(m_a),
        "significance": sig,
    }
    (cfg.out_dir / "ablation.json").write_text(canonical_json(payload))
    print(format_comparison_table({"ablation": payload}))
    print(f"ablation results -> {cfg.out_dir / 'ablation.json'}")
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    echo_path = run_dir / "config_echo.json"
    if not echo_path.exists():
        raise DataError(f"{run_dir}: no config_echo.json (run train/ablate first)")
    report = {
        "schema_version": 1,
        "config": json.loads(echo_path.read_text()),
        "seeds": {"master": int(json.loads(echo_path.read_text())["seed"])},
    }
    cont_path = run_dir / "contingency.json"
    if cont_path.exists():
        report["contingency"] = json.loads(cont_path.read_text())
    cv_path = run_dir / "cv.json"
    if cv_path.exists():
        report["cv"] = json.loads(cv_path.read_text())
        plot_learning_curves(run_dir / "learning_curves.png", report["cv"])
    ab_path = run_dir / "ablation.json"
    if ab_path.exists():
        report["ablation"] = json.loads(ab_path.read_text())
        plot_displacement_comparison(
            run_dir / "displacement_comparison.png", report["ablation"]["significance"]
        )
    write_report(run_dir / "report.json", report)
    lines = [f"report -> {run_dir / 'report.json'}"]
    if "ablation" in report:
        (run_dir / "report.txt").write_text(format_comparison_table(report))
        lines.append(format_comparison_table(report))
    print("\n".join(lines))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pedcast", description=__doc__)
    p.add_argument("--version", action="version", version=f"pedcast {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("print-config", help="print the default configuration")
    sp.set_defaults(func=cmd_print_config)

    sp = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    sp.add_argument("--config", required=True)
    sp.add_argument("--output", required=True)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("ingest", help="convert an external log to the canonical CSV")
    sp.add_argument("--input", required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--format", choices=["canonical", "sensor"], default="canonical")
    sp.add_argument("--unit-scale", type=float, default=1.0)
    sp.add_argument("--utc-offset", type=float, default=0.0,
                    help="hours added to epoch timestamps before calendar lookup")
    sp.add_argument("--config")
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("cluster", help="fit destination clusters and merge undersampled ones")
    sp.add_argument("--data", required=True)
    sp.add_argument("--config", required=True)
    sp.add_argument("--output", required=True, help="cluster model JSON path")
    sp.add_argument("--labels", help="optional per-trajectory label CSV")
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("wt-test", help="chi-square significance test of weather/time conditions")
    sp.add_argument("--config", required=True)
    sp.add_argument("--data")
    sp.add_argument("--model")
    sp.add_argument("--counts", help="CSV of raw contingency counts instead of a dataset")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_wt_test)

    sp = sub.add_parser("train", help="cross-validate the destination classifier")
    sp.add_argument("--data", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--config", required=True)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("fit", help="train one classifier on the full dataset")
    sp.add_argument("--data", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--config", required=True)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("eval", help="evaluate a stored classifier checkpoint")
    sp.add_argument("--data", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--config", required=True)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--meta", required=True)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("ablate", help="with/without weather-time ablation and significance tests")
    sp.add_argument("--data", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--config", required=True)
    sp.set_defaults(func=cmd_ablate)

    sp = sub.add_parser("report", help="assemble report JSON, tables and plots from a run directory")
    sp.add_argument("--run-dir", required=True)
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (ComputeError, PedcastError) as e:
        print(f"compute error: {e}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
