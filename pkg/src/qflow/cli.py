"""Command-line entry point: ``qflow {encode,search,eval,baseline,generate}``.

Settings are resolved in increasing precedence: built-in defaults, the JSON
file given by ``--config``, then individual flags. Every tabular output
starts with a ``#`` line carrying the config hash and seed; timestamps go to
``qflow.log`` in the output directory only.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from .anomaly import roc_curve
from .baselines import IsolationForestDetector, LocalOutlierFactorDetector, OneClassSVMDetector
from .dataenc import KMeansBinEncoder, Split, SplitSpec, load_dataset, make_split, write_json
from .flow import QuantumFlowDetector
from .gatepool import CircuitFormatError, circuit_from_dict, serialize
from .genflow import LowAcceptanceError

log = logging.getLogger("qflow")

EXIT_USAGE = 2
EXIT_PARTIAL = 3

DEFAULTS = {
    "dataset": "iris",
    "normal": 1,
    "anomaly": 2,
    "train_fraction": 0.5,
    "split_seed": 0,
    "append_constant": False,
    "k": None,  # per-dataset default below
    "loss": "kl",
    "gate_kinds": None,
    "thetas": None,
    "budget": 20000,
    "max_depth": 20,
    "beta": 5.0,
    "expansions_per_step": 8.0,
    "stall_window": 2000,
    "restarts": 5,
    "seed": 0,
    "shots": 10000,
    "count": 10,
    "tau": None,
    "min_acceptance": 0.01,
    "out": "qflow-out",
}
DATASET_BINS = {"iris": 3, "wine": 2}
FLOW_METHODS = ("qf-kl", "qf-cos", "swaptest")
BASELINE_METHODS = ("isoforest", "lof", "ocsvm")


class CliError(Exception):
    pass


def _stored_config(args, doc) -> dict:
    """Config recorded by an earlier ``encode``/``search`` run in the split manifest."""
    if args.command not in ("eval", "baseline", "generate"):
        return {}
    out = getattr(args, "out", None) or doc.get("out") or DEFAULTS["out"]
    path = Path(getattr(args, "split", None) or Path(out) / "split.json")
    try:
        return json.loads(path.read_text()).get("config", {})
    except (OSError, json.JSONDecodeError):
        return {}


def resolve_config(args) -> dict:
    """Defaults < config stored with earlier artifacts < ``--config`` file < flags."""
    doc = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(doc) - set(DEFAULTS)
        if unknown:
            raise CliError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    cfg = dict(DEFAULTS)
    cfg.update({k: v for k, v in _stored_config(args, doc).items() if k in DEFAULTS})
    cfg.update(doc)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if cfg["k"] is None:
        cfg["k"] = DATASET_BINS.get(cfg["dataset"], 3)
    if cfg["loss"] not in ("kl", "cos"):
        raise CliError(f"invalid loss {cfg['loss']!r}")
    if int(cfg["budget"]) < 1:
        raise CliError("budget must be a positive number of nodes")
    if int(cfg["restarts"]) < 1:
        raise CliError("restarts must be >= 1")
    return cfg


def config_hash(cfg: dict) -> str:
    keys = ("dataset", "normal", "anomaly", "train_fraction", "split_seed", "append_constant",
            "k", "loss", "gate_kinds", "thetas", "budget", "max_depth", "beta",
            "expansions_per_step", "stall_window", "restarts", "seed")
    canon = json.dumps({k: cfg[k] for k in keys}, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def header(cfg: dict) -> str:
    return f"# config_hash={config_hash(cfg)} seed={cfg['seed']}\n"


def write_csv(path: Path, cfg: dict, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header(cfg))
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def _fmt(x) -> str:
    return "inf" if x == math.inf else repr(float(x))


def _setup_logging(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out / "qflow.log")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("qflow")
    root.handlers = [h for h in root.handlers if not isinstance(h, logging.FileHandler)]
    root.addHandler(handler)
    root.setLevel(logging.INFO)


def _load(cfg):
    try:
        return load_dataset(cfg["dataset"], append_constant=bool(cfg["append_constant"]))
    except (FileNotFoundError, ValueError) as exc:
        raise CliError(str(exc)) from exc


def _flow_params(cfg, loss=None) -> dict:
    return dict(
        loss=loss or cfg["loss"], max_depth=int(cfg["max_depth"]), max_nodes=int(cfg["budget"]),
        beta=float(cfg["beta"]), expansions_per_step=float(cfg["expansions_per_step"]),
        stall_window=int(cfg["stall_window"]), n_restarts=int(cfg["restarts"]),
        gate_kinds=cfg["gate_kinds"],
        thetas=None if cfg["thetas"] is None else [Fraction(t) for t in cfg["thetas"]],
        allow_degenerate_bins=bool(cfg["append_constant"]), random_state=int(cfg["seed"]),
    )


def _split(cfg, ds) -> Split:
    try:
        spec = SplitSpec(int(cfg["normal"]), int(cfg["anomaly"]), float(cfg["train_fraction"]),
                         int(cfg["split_seed"]))
        return make_split(ds, spec)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def cmd_encode(cfg, out: Path) -> tuple[KMeansBinEncoder, Split, object]:
    ds = _load(cfg)
    split = _split(cfg, ds)
    enc = KMeansBinEncoder(n_bins=int(cfg["k"]),
                           allow_degenerate=bool(cfg["append_constant"])).fit(split.train(ds))
    doc = enc.to_dict()
    doc["config_hash"], doc["seed"] = config_hash(cfg), cfg["seed"]
    write_json(out / "encoder.json", doc)
    manifest = split.to_dict(ds.name)
    manifest["config_hash"], manifest["seed"] = config_hash(cfg), cfg["seed"]
    manifest["append_constant"] = bool(cfg["append_constant"])
    manifest["config"] = {k: v for k, v in cfg.items() if k != "out"}
    write_json(out / "split.json", manifest)
    nhist, _ = enc.histogram(split.train(ds))
    write_csv(out / "histogram.csv", cfg, ["index", "probability"],
              [(i, repr(float(p))) for i, p in enumerate(nhist.probs)])
    n_train, n_neg, n_pos = split.counts
    print(f"{ds.name}: {enc.n_features_in_} features x {enc.n_bins} bins = "
          f"{enc.binary_dim_} binary dims on {enc.num_qubits_} qubits; "
          f"train {n_train}, test {n_neg}/{n_pos}")
    return enc, split, ds


def cmd_search(cfg, out: Path) -> None:
    enc, split, ds = cmd_encode(cfg, out)
    t0 = time.perf_counter()
    det = QuantumFlowDetector(n_bins=int(cfg["k"]), **_flow_params(cfg)).fit(split.train(ds))
    log.info("search finished in %.2fs", time.perf_counter() - t0)
    doc = json.loads(serialize(det.circuit_))
    doc["meta"] = {"config_hash": config_hash(cfg), "seed": cfg["seed"], "loss": cfg["loss"],
                   "train_loss": det.loss_, "dataset_hash": split.dataset_hash}
    write_json(out / "circuit.json", doc)
    best = min(det.search_results_, key=lambda r: r.loss)
    write_csv(out / "trace.csv", cfg, ["step", "nodes", "best_loss"],
              [(s, n, _fmt(b)) for s, n, b in best.trace])
    for i, r in enumerate(det.search_results_):
        log.info("restart %d: loss %.6g, %d gates, %d nodes, stop=%s",
                 i, r.loss, len(r.circuit), r.nodes, r.stop_reason)
    print(f"final {cfg['loss']} loss {det.loss_:.6g} with {len(det.circuit_)} gates")


def _read_json(path: Path, what: str) -> dict:
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise CliError(f"{what} not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{what} {path} is not valid JSON: {exc}") from exc


def _load_artifacts(cfg, out: Path, args, need_circuit=True):
    split_doc = _read_json(Path(args.split or out / "split.json"), "split manifest")
    cfg["dataset"] = split_doc.get("dataset") or cfg["dataset"]
    cfg["append_constant"] = split_doc.get("append_constant", cfg["append_constant"])
    ds = _load(cfg)
    split = Split.from_dict(split_doc)
    if split.dataset_hash and split.dataset_hash != ds.content_hash():
        raise CliError("dataset hash mismatch: split manifest was made from different data")
    enc = KMeansBinEncoder.from_dict(_read_json(Path(args.encoder or out / "encoder.json"),
                                                "encoder file"))
    circuit = None
    if need_circuit:
        doc = _read_json(Path(args.circuit or out / "circuit.json"), "circuit file")
        meta = doc.get("meta", {})
        if meta.get("dataset_hash") and meta["dataset_hash"] != split.dataset_hash:
            raise CliError("dataset hash mismatch between circuit file and split manifest")
        try:
            circuit = circuit_from_dict(doc)
        except CircuitFormatError as exc:
            raise CliError(f"bad circuit file: {exc}") from exc
        if "loss" in meta and args.loss is None:
            cfg["loss"] = meta["loss"]
    return ds, split, enc, circuit


def cmd_eval(cfg, out: Path, args) -> float:
    method = args.method
    if method not in FLOW_METHODS + BASELINE_METHODS:
        raise CliError(f"unknown method {method!r}; choose from "
                       f"{', '.join(FLOW_METHODS + BASELINE_METHODS)}")
    ds, split, enc, circuit = _load_artifacts(cfg, out, args,
                                              need_circuit=method in FLOW_METHODS)
    train = split.train(ds)
    X_test, is_anom = split.test(ds)
    if method in FLOW_METHODS:
        loss = {"qf-kl": "kl", "qf-cos": "cos"}.get(method, "cos")
        det = QuantumFlowDetector.from_circuit(circuit, enc, train, loss=loss)
        if method == "swaptest":
            scores = det.swap_test_score(X_test, shots=int(cfg["shots"]),
                                         random_state=int(cfg["seed"]))
        else:
            scores = det.anomaly_score(X_test)
    else:
        model = {
            "isoforest": IsolationForestDetector(random_state=int(cfg["seed"])),
            "lof": LocalOutlierFactorDetector(),
            "ocsvm": OneClassSVMDetector(),
        }[method]
        scores = model.fit(train).anomaly_score(X_test)
    roc = roc_curve(scores, is_anom)
    write_csv(out / f"scores_{method}.csv", cfg, ["sample_id", "score", "is_anomaly"],
              [(int(i), _fmt(s), int(a)) for i, s, a in zip(split.test_idx, scores, is_anom)])
    with open(out / f"roc_{method}.csv", "w", newline="") as fh:
        fh.write(header(cfg))
        fh.write("fpr,tpr\n")
        for f, t in roc.points:
            fh.write(f"{f!r},{t!r}\n")
        fh.write(f"# auroc={roc.auroc!r}\n")
    print(f"{method} AUROC {roc.auroc:.4f}")
    return roc.auroc


def cmd_generate(cfg, out: Path, args) -> int:
    ds, split, enc, circuit = _load_artifacts(cfg, out, args)
    train = split.train(ds)
    det = QuantumFlowDetector.from_circuit(circuit, enc, train, loss=cfg["loss"])
    tau = det.default_tau(train) if cfg["tau"] is None else float(cfg["tau"])
    status = 0
    try:
        result = det.generate(int(cfg["count"]), tau=tau, random_state=int(cfg["seed"]),
                              min_acceptance=float(cfg["min_acceptance"]))
    except LowAcceptanceError as exc:
        result = exc.result
        print(f"warning: {exc}", file=sys.stderr)
        status = EXIT_PARTIAL
    cols = [f"x{j}" for j in range(enc.n_features_in_)] + ["score"]
    write_csv(out / "samples.csv", cfg, cols,
              [[repr(float(v)) for v in row] + [_fmt(s)]
               for row, s in zip(result.samples, result.scores)])
    print(f"accepted {len(result.samples)} of {result.attempts} candidates "
          f"(rate {result.acceptance_rate:.3f}, tau {tau:.6g})")
    return status


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int)
    common.add_argument("--dataset", choices=sorted(DATASET_BINS))
    common.add_argument("--normal", type=int, help="normal class id")
    common.add_argument("--anomaly", type=int, help="anomaly class id")
    common.add_argument("--loss", choices=("kl", "cos"))
    common.add_argument("--budget", type=int, help="search node budget per restart")
    common.add_argument("--restarts", type=int)
    common.add_argument("--k", type=int, help="bins per feature")
    common.add_argument("--out", help="output directory")
    common.add_argument("--shots", type=int, help="swap-test shots")

    parser = argparse.ArgumentParser(prog="qflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("encode", parents=[common], help="fit the encoder and write the split")
    sub.add_parser("search", parents=[common], help="learn a flow circuit")
    for name in ("eval", "baseline"):
        p = sub.add_parser(name, parents=[common], help="score the test split")
        p.add_argument("--method", required=True,
                       help="one of " + ", ".join(FLOW_METHODS + BASELINE_METHODS))
        p.add_argument("--circuit")
        p.add_argument("--split")
        p.add_argument("--encoder")
    p = sub.add_parser("generate", parents=[common], help="sample through the inverse flow")
    p.add_argument("--count", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--circuit")
    p.add_argument("--split")
    p.add_argument("--encoder")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = Path(cfg["out"])
        _setup_logging(out)
        log.info("%s config_hash=%s", args.command, config_hash(cfg))
        if args.command == "encode":
            cmd_encode(cfg, out)
        elif args.command == "search":
            cmd_search(cfg, out)
        elif args.command in ("eval", "baseline"):
            if args.command == "baseline" and args.method not in BASELINE_METHODS:
                raise CliError(f"baseline method must be one of {', '.join(BASELINE_METHODS)}")
            cmd_eval(cfg, out, args)
        elif args.command == "generate":
            return cmd_generate(cfg, out, args)
    except CliError as exc:
        parser.print_usage(sys.stderr)
        print(f"qflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
