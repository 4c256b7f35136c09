"""Single command-line entry point for the whole pipeline.

Subcommands: generate, segment, fit-threshold, train, eval, pca, robustness,
serve, replay. Outputs are written atomically; every run records its
configuration and seed. Exit codes: 0 success, 1 contract/data error,
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import references
from .boosting import FedtParams, TrainingSet, train
from .edge import EdgeConfig, edge_sim
from .errors import FedtError
from .evaluation import cross_device_eval, kfold_evaluate, pca_ablation
from .features import FeatureRegistry, default_registry, extract_matrix
from .gate import fit_threshold, load_threshold, save_threshold
from .ingest import adapter_ids, ingest
from .ioutil import atomic_write_text
from .modelio import load_model_file, save_model_file
from .pipeline import PipelineConfig
from .signals import DATASET_WINDOW_SIZES, DatasetConfig, Label, segment_recordings
from .store import load_windows, save_windows
from .synthetic import GeneratorSpec, spec_to_json, write_generic_dir

log = logging.getLogger(__name__)


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise argparse.ArgumentTypeError(f"{path}: no such file or directory")
    return p


def _address(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"{text!r} is not host:port")
    return host, int(port)


def _add_model_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("model hyperparameters")
    g.add_argument("--rounds", type=int, default=FedtParams.n_rounds)
    g.add_argument("--learning-rate", type=float, default=FedtParams.learning_rate)
    g.add_argument("--alpha", type=float, default=FedtParams.alpha)
    g.add_argument("--beta", type=float, default=FedtParams.beta)
    g.add_argument("--max-depth", type=int, default=FedtParams.max_depth)
    g.add_argument("--min-child-hessian", type=float, default=FedtParams.min_child_hessian)
    g.add_argument("--scale-pos-weight", type=float, default=None,
                   help="positive-class gradient weight (default: n_adl/n_fall)")
    g.add_argument("--cutoff", type=float, default=FedtParams.cutoff)


def _params_from(args) -> FedtParams:
    return FedtParams(
        n_rounds=args.rounds,
        learning_rate=args.learning_rate,
        alpha=args.alpha,
        beta=args.beta,
        max_depth=args.max_depth,
        min_child_hessian=args.min_child_hessian,
        scale_pos_weight=args.scale_pos_weight,
        cutoff=args.cutoff,
    )


def _load_registry(args) -> FeatureRegistry:
    if getattr(args, "registry", None):
        doc = json.loads(Path(args.registry).read_text(encoding="utf-8"))
        return FeatureRegistry.from_json(doc)
    return default_registry()


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(
        params=_params_from(args),
        registry=_load_registry(args),
        safety_factor=getattr(args, "safety", 0.9),
        extract_workers=getattr(args, "workers", 1),
    )


def cmd_generate(args) -> int:
    spec = GeneratorSpec(
        seed=args.seed,
        n_falls=args.falls,
        n_adls=args.adls,
        window_size=args.window_size,
        stride=args.stride,
    )
    n_falls, n_adls = write_generic_dir(spec, args.output_dir)
    atomic_write_text(
        Path(args.output_dir) / "generator_spec.json",
        json.dumps(spec_to_json(spec), indent=2) + "\n",
    )
    print(f"wrote {n_falls} fall and {n_adls} ADL recordings to {args.output_dir}")
    return 0


def cmd_segment(args) -> int:
    window_size = args.window_size or DATASET_WINDOW_SIZES.get(args.adapter)
    if window_size is None and args.adapter == "synthetic":
        spec = GeneratorSpec(**json.loads(Path(args.input).read_text(encoding="utf-8")))
        window_size = spec.window_size
    if window_size is None:
        print("error: --window-size is required for this adapter", file=sys.stderr)
        return 2
    stride = args.stride or window_size // 2
    cfg = DatasetConfig(window_size=window_size, stride=stride, adapter=args.adapter)
    options = {}
    if args.adapter == "generic":
        options = {"delimiter": args.delimiter, "label": args.label}
    recordings = ingest(args.input, args.adapter, **options)
    windows = segment_recordings(recordings, cfg)
    falls = sum(1 for w in windows if w.label is Label.FALL)
    adls = sum(1 for w in windows if w.label is Label.ADL)
    save_windows(
        windows,
        args.output,
        header={
            "window_size": cfg.window_size,
            "stride": cfg.stride,
            "adapter": cfg.adapter,
            "source": str(args.input),
        },
    )
    print(f"segmented {len(recordings)} recordings -> {falls} fall / {adls} ADL windows")
    print(f"window_size={cfg.window_size} stride={cfg.stride} -> {args.output}")
    ref = references.SEGMENT_COUNTS.get(args.adapter)
    if ref:
        print(
            f"reference counts for {args.adapter}: {ref[0]} fall / {ref[1]} ADL "
            f"(stride-dependent; reported counts used stride={cfg.stride})"
        )
    return 0


def cmd_fit_threshold(args) -> int:
    windows, _ = load_windows(args.windows)
    falls = [w for w in windows if w.label is Label.FALL]
    th = fit_threshold(falls, args.safety)
    save_threshold(th, args.output)
    print(f"tau={th.tau!r} (safety={th.safety_factor}, {th.fall_count} falls) -> {args.output}")
    return 0


def cmd_train(args) -> int:
    windows, header = load_windows(args.windows)
    registry = _load_registry(args)
    params = _params_from(args)
    X = extract_matrix(windows, registry, args.workers)
    y = np.asarray([1.0 if w.label is Label.FALL else 0.0 for w in windows])
    objective_log: list[float] = []
    model = train(TrainingSet(X, y, registry.fingerprint), params, objective_log)
    save_model_file(model, args.output)
    atomic_write_text(
        Path(str(args.output) + ".registry.json"),
        json.dumps(registry.to_json(), indent=2) + "\n",
    )
    if args.log:
        atomic_write_text(
            args.log,
            json.dumps(
                {
                    "params": asdict(params),
                    "windows_file": str(args.windows),
                    "windows_header": header,
                    "registry_fingerprint": registry.fingerprint,
                    "per_round_objective": objective_log,
                },
                indent=2,
            )
            + "\n",
        )
    leaves = [t.n_leaves for t in model.trees]
    print(
        f"trained {len(model.trees)} trees ({sum(leaves)} leaves, "
        f"avg {sum(leaves)/len(leaves):.1f}/tree) -> {args.output}"
    )
    print(f"final objective: {objective_log[-1]:.6f}" if objective_log else "")
    return 0


def _write_report(report, outdir: Path, stem: str):
    outdir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(outdir / f"{stem}.json", report.to_json())
    atomic_write_text(outdir / f"{stem}.txt", report.to_text())


def _print_reference_deltas(report, reference: dict | None):
    print(report.to_text(), end="")
    if not reference:
        return
    print("versus published targets (percentage points):")
    ours = report.to_dict()
    for name, target in reference.items():
        delta = (ours[name] - target) * 100.0
        print(f"  {name}: {ours[name]:.4%} vs {target:.2%} ({delta:+.2f} pp)")


def cmd_eval(args) -> int:
    windows, _ = load_windows(args.windows)
    config = _pipeline_config(args)
    report = kfold_evaluate(
        windows,
        k=args.k,
        config=config,
        seed=args.seed,
        split_by=args.split_by,
        dataset_id=args.dataset or Path(args.windows).stem,
    )
    _write_report(report, Path(args.output_dir), "report")
    _print_reference_deltas(report, references.CV_METRICS.get(args.dataset))
    return 0


def cmd_pca(args) -> int:
    windows, _ = load_windows(args.windows)
    config = _pipeline_config(args)
    without, with_pca = pca_ablation(
        windows,
        config=config,
        variance_fraction=args.variance,
        k=args.k,
        seed=args.seed,
        dataset_id=args.dataset or Path(args.windows).stem,
    )
    outdir = Path(args.output_dir)
    _write_report(without, outdir, "report_no_pca")
    _write_report(with_pca, outdir, "report_pca")
    print("--- without projection ---")
    _print_reference_deltas(without, references.CV_METRICS.get(args.dataset))
    print(f"--- with {args.variance:.0%}-variance projection ---")
    _print_reference_deltas(with_pca, references.PCA_METRICS.get(args.dataset))
    drop = (without.values.sensitivity - with_pca.values.sensitivity) * 100
    print(f"sensitivity drop from the projection: {drop:+.2f} pp")
    return 0


def cmd_robustness(args) -> int:
    train_windows, _ = load_windows(args.train_windows)
    test_windows, _ = load_windows(args.test_windows)
    report = cross_device_eval(
        train_windows,
        test_windows,
        config=_pipeline_config(args),
        dataset_id=f"{Path(args.train_windows).stem}->{Path(args.test_windows).stem}",
    )
    _write_report(report, Path(args.output_dir), "report_robustness")
    print(report.to_text(), end="")
    print(
        f"cross-device sensitivity target: {references.ROBUSTNESS_SENSITIVITY:.0%} "
        f"(ours {report.values.sensitivity:.2%})"
    )
    return 0


def cmd_serve(args) -> int:
    from .service import InferenceService, ServiceLimits

    model = load_model_file(args.model)
    registry_path = args.registry or (
        str(args.model) + ".registry.json"
        if Path(str(args.model) + ".registry.json").exists()
        else None
    )
    if registry_path:
        registry = FeatureRegistry.from_json(
            json.loads(Path(registry_path).read_text(encoding="utf-8"))
        )
    else:
        registry = default_registry()
    service = InferenceService(
        args.addr,
        model,
        registry,
        ServiceLimits(max_payload=args.max_payload, max_sessions=args.max_sessions),
    )
    host, port = service.address
    print(
        f"serving model {model.model_id} ({model.fingerprint[:12]}...) on {host}:{port}",
        flush=True,
    )
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        print("shutting down")
    finally:
        service.server_close()
    return 0


def cmd_replay(args) -> int:
    threshold = load_threshold(args.threshold)
    registry = _load_registry(args)
    recordings = ingest(args.input, args.adapter)
    cfg = EdgeConfig(
        window_size=args.window_size,
        lookback=args.lookback,
        realtime=args.realtime,
    )
    sessions = []
    totals = {"sent": 0, "delivered": 0, "falls": 0, "undelivered": 0}
    for rec in recordings:
        session = edge_sim(rec, threshold, cfg, args.addr, registry.fingerprint)
        delivered = session.delivered
        totals["sent"] += len(session.entries)
        totals["delivered"] += len(delivered)
        totals["falls"] += sum(1 for e in delivered if e.label == 1)
        totals["undelivered"] += len(session.undelivered)
        sessions.append(
            {
                "recording": rec.recording_id,
                "error": session.error,
                "partial_triggers": session.partial_triggers,
                "windows": [
                    {
                        "trigger_index": e.trigger_index,
                        "window_id": e.window_id,
                        "status": e.status,
                        "label": e.label,
                        "probability": e.probability,
                        "service_latency_us": e.service_latency_us,
                        "round_trip_s": e.round_trip_s,
                    }
                    for e in session.entries
                ],
            }
        )
    config = {k: str(v) for k, v in vars(args).items() if k not in ("fn", "verbose")}
    config["addr"] = f"{args.addr[0]}:{args.addr[1]}"
    doc = {"config": config, "totals": totals, "sessions": sessions}
    if args.output:
        atomic_write_text(args.output, json.dumps(doc, indent=2) + "\n")
    print(
        f"replayed {len(recordings)} recordings: {totals['sent']} windows escalated, "
        f"{totals['delivered']} verdicts ({totals['falls']} falls), "
        f"{totals['undelivered']} undelivered"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedt",
        description="Mobile-cloud fall detection: segment, gate, train, evaluate, serve.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write synthetic recordings as generic text files")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--falls", type=int, default=220)
    p.add_argument("--adls", type=int, default=12)
    p.add_argument("--window-size", type=int, default=100)
    p.add_argument("--stride", type=int, default=50)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("segment", help="ingest recordings and cut labeled windows")
    p.add_argument("--input", type=_existing, required=True)
    p.add_argument("--adapter", choices=adapter_ids(), required=True)
    p.add_argument("--window-size", type=int, default=None,
                   help="defaults to the per-dataset size when the adapter is a dataset")
    p.add_argument("--stride", type=int, default=None, help="default: window_size // 2")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--label", choices=("fall", "adl"), default=None,
                   help="force a label for generic ingestion")
    p.add_argument("--output", required=True)
    p.set_defaults(fn=cmd_segment)

    p = sub.add_parser("fit-threshold", help="fit the mobile-stage threshold")
    p.add_argument("--windows", type=_existing, required=True)
    p.add_argument("--safety", type=float, default=0.9)
    p.add_argument("--output", required=True)
    p.set_defaults(fn=cmd_fit_threshold)

    p = sub.add_parser("train", help="train the tree ensemble on a windows file")
    p.add_argument("--windows", type=_existing, required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--log", default=None, help="write a JSON training log")
    p.add_argument("--registry", type=_existing, default=None)
    p.add_argument("--workers", type=int, default=1)
    _add_model_args(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="stratified k-fold evaluation")
    p.add_argument("--windows", type=_existing, required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--split-by", choices=("window", "subject"), default="window")
    p.add_argument("--safety", type=float, default=0.9)
    p.add_argument("--dataset", default=None, help="print deltas versus published targets")
    p.add_argument("--registry", type=_existing, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output-dir", required=True)
    _add_model_args(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("pca", help="paired evaluation with and without the projection")
    p.add_argument("--windows", type=_existing, required=True)
    p.add_argument("--variance", type=float, default=0.95)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--safety", type=float, default=0.9)
    p.add_argument("--dataset", default=None)
    p.add_argument("--registry", type=_existing, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output-dir", required=True)
    _add_model_args(p)
    p.set_defaults(fn=cmd_pca)

    p = sub.add_parser("robustness", help="train on one device's windows, test on another's")
    p.add_argument("--train-windows", type=_existing, required=True)
    p.add_argument("--test-windows", type=_existing, required=True)
    p.add_argument("--safety", type=float, default=0.9)
    p.add_argument("--registry", type=_existing, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output-dir", required=True)
    _add_model_args(p)
    p.set_defaults(fn=cmd_robustness)

    p = sub.add_parser("serve", help="run the cloud inference service")
    p.add_argument("--addr", type=_address,
                   default=os.environ.get("FEDT_ADDR", "127.0.0.1:8390"))
    p.add_argument("--model", type=_existing,
                   default=os.environ.get("FEDT_MODEL") or None)
    p.add_argument("--registry", type=_existing, default=None)
    p.add_argument("--max-payload", type=int,
                   default=int(os.environ.get("FEDT_MAX_PAYLOAD", 16 * 1024 * 1024)))
    p.add_argument("--max-sessions", type=int, default=128)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("replay", help="replay recordings through the gate to a service")
    p.add_argument("--input", type=_existing, required=True)
    p.add_argument("--adapter", choices=adapter_ids(), required=True)
    p.add_argument("--threshold", type=_existing, required=True)
    p.add_argument("--addr", type=_address,
                   default=os.environ.get("FEDT_ADDR", "127.0.0.1:8390"))
    p.add_argument("--window-size", type=int, default=100)
    p.add_argument("--lookback", type=int, default=None)
    p.add_argument("--realtime", action="store_true")
    p.add_argument("--registry", type=_existing, default=None)
    p.add_argument("--output", default=None, help="write the session log as JSON")
    p.set_defaults(fn=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "serve" and args.model is None:
        print("error: --model (or FEDT_MODEL) is required", file=sys.stderr)
        return 2
    if isinstance(getattr(args, "addr", None), str):
        args.addr = _address(args.addr)
    try:
        return args.fn(args)
    except FedtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
