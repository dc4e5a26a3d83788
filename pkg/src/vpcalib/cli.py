"""Command-line interface.

Subcommands:
    calibrate  detections (JSON lines) -> calibration JSON
    evaluate   calibration + measurements -> ratio-error report
    synth      synthetic scene spec -> detections/measurements/ground truth
    augment    augmentation spec -> homography + warped box

Failures print a machine-readable ``{"error": ..., "message": ...}`` object
to stderr and exit nonzero; output files are only written on success.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .calibration import CameraCalibration
from .errors import InputFormatError, VPCalibError
from .evaluation import DistanceMeasurement, measured_distance
from .heatmap import bbox_normalize, bbox_normalize_direction
from .pipeline import (
    PipelineConfig,
    format_json,
    report_table,
    run_calibration,
    run_evaluation,
)
from .synthetic import AugmentationParams, SceneSpec, augment, generate_observations


def _load_config(path) -> PipelineConfig:
    return PipelineConfig.from_file(path) if path else PipelineConfig()


def _parse_scale_reference(text: str) -> DistanceMeasurement:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 5:
        raise InputFormatError(
            "--scale-reference expects 'ax,ay,bx,by,meters'"
        )
    return DistanceMeasurement(a=parts[0:2], b=parts[2:4], ground_truth=parts[4])


def cmd_calibrate(args) -> int:
    config = _load_config(args.config)
    if args.parallel:
        config = dataclasses.replace(config, parallel=True)
    image_size = tuple(args.image_size) if args.image_size else None
    result = run_calibration(args.detections, config, image_size)
    if args.scale_reference:
        reference = _parse_scale_reference(args.scale_reference)
        calibration = CameraCalibration.from_dict(result)
        result["delta"] = reference.ground_truth / measured_distance(reference, calibration)
    Path(args.out).write_text(format_json(result))
    return 0


def cmd_evaluate(args) -> int:
    config = _load_config(args.config)
    report = run_evaluation(args.calibration, args.measurements, config)
    Path(args.out).write_text(format_json(report))
    print(report_table(report))
    return 0


def cmd_synth(args) -> int:
    try:
        spec = SceneSpec.from_json(Path(args.spec).read_text())
    except (OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
        raise InputFormatError(f"cannot read scene spec {args.spec}: {exc}") from exc
    observations, measurements, truth = generate_observations(spec, parallel=args.parallel)

    lines = []
    for k, obs in enumerate(observations):
        record = {
            "frame": obs.frame_index * 10,
            "box": list(obs.box.as_tuple()),
            "confidence": 1.0 - 1e-4 * k,
        }
        pair = obs.pair
        if pair.first_is_direction:
            d = bbox_normalize_direction(pair.first, obs.box)
            record["vp_first_direction"] = (d / np.linalg.norm(d)).tolist()
        else:
            record["vp_first"] = bbox_normalize(pair.first, obs.box).tolist()
        if pair.second_is_direction:
            d = bbox_normalize_direction(pair.second, obs.box)
            record["vp_second_direction"] = (d / np.linalg.norm(d)).tolist()
        else:
            record["vp_second"] = bbox_normalize(pair.second, obs.box).tolist()
        lines.append(format_json(record).rstrip("\n"))

    measurement_items = [
        {"a": m.a.tolist(), "b": m.b.tolist(), "distance": m.ground_truth}
        for m in measurements
    ]
    truth_out = truth.to_dict()
    truth_out["scene_spec"] = spec.to_dict()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "detections.jsonl").write_text("\n".join(lines) + "\n")
    (out_dir / "measurements.json").write_text(format_json(measurement_items))
    (out_dir / "ground_truth.json").write_text(format_json(truth_out))
    return 0


def cmd_augment(args) -> int:
    try:
        data = json.loads(Path(args.spec).read_text())
        image_size = tuple(data["image_size"])
        box_points = data["bbox_3d"]
        params = AugmentationParams(
            corner_sigma=float(data.get("corner_sigma", 12.5)),
            bbox_jitter=float(data.get("bbox_jitter", 5.0)),
            flip_prob=float(data.get("flip_prob", 0.5)),
            rng_seed=int(data.get("rng_seed", 0)),
        )
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"cannot read augment spec {args.spec}: {exc}") from exc
    H, box, flipped = augment(image_size, box_points, params)
    result = {
        "homography": H.tolist(),
        "bbox": list(box.as_tuple()),
        "flipped": flipped,
    }
    Path(args.out).write_text(format_json(result))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vpcalib",
        description="Traffic camera calibration from vehicle vanishing points.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="estimate camera geometry from detections")
    p.add_argument("--detections", required=True, help="JSON-lines detections file")
    p.add_argument("--out", required=True, help="output calibration JSON")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument(
        "--image-size", type=float, nargs=2, metavar=("W", "H"),
        help="frame size in pixels (principal point defaults to the centre)",
    )
    p.add_argument(
        "--scale-reference",
        help="ax,ay,bx,by,meters: set the plane scale from one known distance",
    )
    p.add_argument("--parallel", action="store_true", help="decode records concurrently")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="score a calibration against tape measurements")
    p.add_argument("--calibration", required=True)
    p.add_argument("--measurements", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="pipeline config JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--spec", required=True, help="scene spec JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--parallel", action="store_true", help="generate vehicles concurrently")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("augment", help="sample one training augmentation transform")
    p.add_argument("--spec", required=True, help="augmentation spec JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_augment)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VPCalibError as exc:
        sys.stderr.write(
            format_json({"error": type(exc).__name__, "message": str(exc)})
        )
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
