"""Command-line interface.

Subcommands: serve, simulate, train, eval, encode, decode, render,
calibrate-decoder, calibrate-targets, export.  Reporting subcommands write
CSV next to PNG figures in their output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import calibrate, cvforce, framegen, gateway, gesturenet, gripsim, huecode
from . import ppm as ppmio
from . import report, teleop
from .config import AppConfig, load_config
from .errors import SessionNotFound, ValidationError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chromagrip",
        description="Soft-gripper teleoperation sandbox with color-coded "
                    "force telemetry")
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON or TOML config file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--log-dir", type=Path, default=Path("sessions"))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the operator gateway")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)

    p = sub.add_parser("simulate", help="run a headless catch scenario")
    p.add_argument("scenario", type=Path, help="scenario JSON file")
    p.add_argument("--session-id", default=None)
    p.add_argument("-o", "--out", type=Path, default=None,
                   help="report directory (default: the log dir)")
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("train", help="train the gesture classifier")
    p.add_argument("--dataset", type=Path, default=None,
                   help="angles CSV; default: the synthetic dataset")
    p.add_argument("--loops", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("-o", "--out", type=Path, default=Path("train-out"))

    p = sub.add_parser("eval", help="evaluate a trained model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--dataset", type=Path, default=None)
    p.add_argument("--spread", type=float, default=None,
                   help="synthetic dataset spread in degrees")
    p.add_argument("-o", "--out", type=Path, default=Path("eval-out"))

    p = sub.add_parser("encode", help="encode one sensor frame row to a hue")
    p.add_argument("row", help="CSV row 'fsr1,fsr2,fsr3,fsl1,fsl2,fsl3' "
                               "(episode-CSV rows work too); '-' for stdin")

    p = sub.add_parser("decode", help="estimate force from PPM frames")
    p.add_argument("frames", nargs="+", type=Path,
                   help="PPM files or a directory (batch mode)")
    p.add_argument("-o", "--out", type=Path, default=None,
                   help="write the batch report CSV here")

    p = sub.add_parser("render", help="render a camera frame from a scene spec")
    p.add_argument("scene", type=Path, help="SceneSpec JSON file")
    p.add_argument("-o", "--out", type=Path, default=Path("frame.ppm"))

    p = sub.add_parser("calibrate-decoder",
                       help="measure the decode hue interval from the renderer")
    p.add_argument("-o", "--out", type=Path, default=None,
                   help="write a full config JSON with the interval applied")

    p = sub.add_parser("calibrate-targets",
                       help="fit the soft-target stiffness to a force ratio")
    p.add_argument("--fraction", type=float, default=0.46,
                   help="soft/rigid mean hold force ratio to hit")
    p.add_argument("-o", "--out", type=Path, default=None)

    p = sub.add_parser("export", help="export a stored session")
    p.add_argument("session_id")
    p.add_argument("-o", "--out", type=Path, default=None)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        return _dispatch(args, config)
    except (ValidationError, SessionNotFound, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args, config: AppConfig) -> int:
    if args.command == "serve":
        if args.host:
            config.serve.host = args.host
        if args.port:
            config.serve.port = args.port
        gateway.serve(config, seed=args.seed, log_dir=args.log_dir)
        return 0
    handler = {
        "simulate": _cmd_simulate,
        "train": _cmd_train,
        "eval": _cmd_eval,
        "encode": _cmd_encode,
        "decode": _cmd_decode,
        "render": _cmd_render,
        "calibrate-decoder": _cmd_calibrate_decoder,
        "calibrate-targets": _cmd_calibrate_targets,
        "export": _cmd_export,
    }[args.command]
    return handler(args, config)


def _cmd_simulate(args, config: AppConfig) -> int:
    scenario = json.loads(args.scenario.read_text())
    script = scenario.get("script")
    if not script:
        raise ValidationError("scenario file needs a non-empty 'script' list")
    if "safety_limit" in scenario:
        config.teleop.safety_limit = float(scenario["safety_limit"])

    target_spec = scenario.get("target", "soft")
    if isinstance(target_spec, str):
        target = gripsim.default_target(target_spec, config.targets)
    else:
        target = gripsim.GraspTarget(
            stiffness=float(target_spec["stiffness"]),
            radius=float(target_spec.get("radius", 0.03)),
            kind=target_spec.get("kind", "soft"),
            occlusion_factor=float(target_spec.get("occlusion_factor", 0.0)))

    model = None
    if any(isinstance(item, dict) and "glove" in item for item in script):
        model = gateway.default_model(config)

    start_phase = teleop.Phase(scenario.get("start_phase", "idle"))
    log = teleop.run_catch_scenario(
        script, config, target=target, model=model, seed=args.seed,
        max_ticks=scenario.get("max_ticks"), start_phase=start_phase)

    store = gateway.SessionStore(args.log_dir)
    session_id = args.session_id or store.unique_id(
        f"{args.scenario.stem}-seed{args.seed}")
    store.persist(session_id, log, config, overwrite=args.session_id is not None)
    out = args.out or args.log_dir
    jsonl_path, csv_path = store.export(session_id, out)
    print(f"session {session_id}: {json.dumps(log.summary(), sort_keys=True)}")
    print(f"log: {jsonl_path}")
    print(f"summary: {csv_path}")
    if not args.no_figures:
        fig = report.session_figure(log.steps, Path(out) / f"{session_id}.png")
        print(f"figure: {fig}")
    return 0


def _cmd_train(args, config: AppConfig) -> int:
    gt = config.gesture_train
    loops = args.loops if args.loops is not None else gt.loops
    lr = args.lr if args.lr is not None else gt.learning_rate
    if args.dataset:
        angles, labels = gesturenet.load_dataset_csv(args.dataset)
    else:
        angles, labels = gesturenet.synthetic_dataset(
            users=gt.users, repetitions=gt.repetitions,
            spread_deg=gt.cluster_spread_deg, seed=args.seed)
    model, curve = gesturenet.train(
        angles, labels, loops=loops, learning_rate=lr, seed=args.seed,
        holdout_fraction=gt.holdout_fraction, loop_unit=gt.loop_unit,
        hidden_units=gt.hidden_units)

    args.out.mkdir(parents=True, exist_ok=True)
    model_path = args.out / "model.json"
    model.save(model_path)
    (args.out / "curve.csv").write_text(report.training_curve_csv(curve))
    report.training_curve_figure(curve, args.out / "curve.png")
    final = curve[-1]
    print(f"trained {loops} loops (lr {lr}); "
          f"held-out accuracy {100.0 * final.holdout_accuracy:.1f}%")
    print(f"model: {model_path}")
    print(f"curve: {args.out / 'curve.csv'} (+ curve.png)")
    return 0


def _cmd_eval(args, config: AppConfig) -> int:
    model = gesturenet.MlpModel.load(args.model)
    gt = config.gesture_train
    if args.dataset:
        angles, labels = gesturenet.load_dataset_csv(args.dataset)
    else:
        spread = args.spread if args.spread is not None else gt.cluster_spread_deg
        angles, labels = gesturenet.synthetic_dataset(
            users=gt.users, repetitions=gt.repetitions,
            spread_deg=spread, seed=args.seed + 1)
    result = gesturenet.evaluate(model, angles, labels)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "recognition_rates.csv").write_text(result.to_csv())
    report.evaluation_figure(result, args.out / "recognition_rates.png")
    print(result.to_csv(), end="")
    if result.trivial:
        print("warning: single-class dataset, accuracy is uninformative",
              file=sys.stderr)
    print(f"report: {args.out / 'recognition_rates.csv'} (+ .png)")
    return 0


def _cmd_encode(args, config: AppConfig) -> int:
    row = sys.stdin.readline() if args.row == "-" else args.row
    parts = [p.strip() for p in row.strip().split(",") if p.strip() != ""]
    values = [float(p) for p in parts]
    if len(values) == 6:
        fsr, fsl = values[0:3], values[3:6]
    elif len(values) == 7:                      # t prefix
        fsr, fsl = values[1:4], values[4:7]
    elif len(values) == 13:                     # episode CSV row
        fsr, fsl = values[4:7], values[7:10]
    else:
        raise ValidationError("expected 6, 7 or 13 comma-separated values")
    frame = gripsim.SensorFrame(0.0, tuple(int(v) for v in fsr),
                                tuple(int(v) for v in fsl), (0.0, 0.0, 0.0))
    cmd = huecode.encode(frame)
    r, g, b = framegen.byte_hue_to_rgb(cmd.hue)
    print(f"hue={cmd.hue} rgb=({r},{g},{b}) "
          f"hue_fsr={cmd.hue_fsr!r} hue_fsl={cmd.hue_fsl!r}")
    return 0


def _cmd_decode(args, config: AppConfig) -> int:
    paths: list[Path] = []
    for entry in args.frames:
        if entry.is_dir():
            paths.extend(sorted(entry.glob("*.ppm")))
        else:
            paths.append(entry)
    if not paths:
        raise ValidationError("no PPM frames found")
    lines = ["frame,camera_hue,contour_area,force,valid"]
    for path in paths:
        est = cvforce.estimate(ppmio.read_ppm(path), config.decode)
        lines.append(f"{path.name},{est.camera_hue!r},{est.contour_area},"
                     f"{est.force!r},{est.valid}")
    text = "\n".join(lines) + "\n"
    if args.out:
        args.out.write_text(text)
        print(f"report: {args.out} ({len(paths)} frames)")
    else:
        print(text, end="")
    return 0


def _cmd_render(args, config: AppConfig) -> int:
    data = json.loads(args.scene.read_text())
    spec = framegen.SceneSpec(
        width=data.get("width", config.scene.width),
        height=data.get("height", config.scene.height),
        blob_center=tuple(data.get("blob_center", config.scene.blob_center)),
        blob_radius=data.get("blob_radius", config.scene.blob_radius),
        led_hue=data["led_hue"],
        background_color=tuple(data.get("background_color",
                                        config.scene.background_color)),
        occluder_color=tuple(data.get("occluder_color",
                                      config.scene.occluder_color)),
        reflection_color=tuple(data.get("reflection_color",
                                        config.scene.reflection_color)),
        reflection_width=data.get("reflection_width",
                                  config.scene.reflection_width),
        noise_amplitude=data.get("noise_amplitude", config.scene.noise_amplitude),
        occlusion_factor=data.get("occlusion_factor", 0.0))
    ppmio.write_ppm(args.out, framegen.render(spec, seed=args.seed))
    print(f"frame: {args.out}")
    return 0


def _cmd_calibrate_decoder(args, config: AppConfig) -> int:
    hue_low, hue_high = calibrate.calibrate_decoder(config)
    print(f"decode.hue_low = {hue_low!r}")
    print(f"decode.hue_high = {hue_high!r}")
    if args.out:
        config.decode.hue_low = hue_low
        config.decode.hue_high = hue_high
        config.save(args.out)
        print(f"config written: {args.out}")
    return 0


def _cmd_calibrate_targets(args, config: AppConfig) -> int:
    stiffness = calibrate.calibrate_soft_stiffness(config, args.fraction)
    print(f"targets.soft.stiffness_n_per_m = {stiffness!r}")
    if args.out:
        config.targets.soft.stiffness_n_per_m = stiffness
        config.save(args.out)
        print(f"config written: {args.out}")
    return 0


def _cmd_export(args, config: AppConfig) -> int:
    store = gateway.SessionStore(args.log_dir)
    try:
        record = store.load(args.session_id)
    except SessionNotFound:
        print(f"error: session not found: {args.session_id}", file=sys.stderr)
        return 1
    jsonl_path, csv_path = store.export(args.session_id, args.out)
    flag = " (partial)" if record.partial else ""
    print(f"exported {args.session_id}{flag}")
    print(f"log: {jsonl_path}")
    print(f"summary: {csv_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
