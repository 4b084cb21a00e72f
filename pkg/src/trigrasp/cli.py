"""Command-line front end: `trigrasp <subcommand>`.

Every subcommand is a pure function of (flags, input files, seed); given
the same inputs, outputs are byte-identical between runs.  Directory
outputs include a run_config.json echoing every resolved setting.

Exit codes: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import counters
from .augment import CROP_SIZE, apply_augment, sample_params
from .dataset import (
    AngleCodec,
    AnnotationError,
    CornellError,
    ImageAnnotation,
    RegionAnnotation,
    load_cornell_rects,
    load_region_annotations,
    load_split,
    rasterize,
    save_object_map,
    save_region_annotations,
    write_label_gmap,
)
from .decode import (
    best_grasp,
    multi_grasps,
    prediction_from_label,
    read_prediction_gmap,
    write_prediction_gmap,
)
from .evaluate import evaluate_split, save_report
from .geometry import ConvexPolygon, intersect
from .gmap import GmapError, validate_gmap
from .grasp import WIDTH_SCALE, normalize_angle, oriented_box
from .synth import synth_fixture, write_corpus
from .viz import render_overlay


@dataclass
class Config:
    """Run settings; every default is echoed into run reports."""

    k: int = 36
    d: float = 40.0
    crop_size: int = CROP_SIZE
    threshold: float = 0.5
    peak_radius: int = 10
    zoom_min: float = 0.8
    zoom_max: float = 1.25
    angle_period: str = "pi"
    seed: int = 0


_CONFIG_FIELDS = tuple(Config.__dataclass_fields__)


def _resolve_config(args: argparse.Namespace) -> Config:
    """Precedence: explicit flags > --config file > built-in defaults."""
    base = Config()
    file_values = {}
    if getattr(args, "config", None):
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        unknown = set(raw) - set(_CONFIG_FIELDS)
        if unknown:
            raise AnnotationError(f"unknown config keys: {sorted(unknown)}")
        file_values = raw
    values = {}
    for name in _CONFIG_FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
        elif name in file_values:
            values[name] = file_values[name]
        else:
            values[name] = getattr(base, name)
    return Config(**values)


def _write_run_config(out_dir: Path, command: str, cfg: Config, extra: dict) -> None:
    payload = {"command": command, "config": asdict(cfg), **extra}
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "run_config.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _angle_period_value(cfg: Config) -> float:
    return math.pi if cfg.angle_period == "pi" else 2.0 * math.pi


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    cfg = _resolve_config(args)
    images, anns = synth_fixture(
        count=args.count,
        image_size=(args.image_size, args.image_size),
        seed=cfg.seed,
    )
    out = Path(args.out)
    write_corpus(out, images, anns)
    _write_run_config(out, "synth", cfg,
                      {"count": args.count, "image_size": args.image_size})
    print(f"wrote {len(images)} images to {out}")
    return 0


def cmd_rasterize(args) -> int:
    cfg = _resolve_config(args)
    anns = load_region_annotations(args.ann)
    codec = AngleCodec(cfg.k)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for ann in anns:
        maps = rasterize(ann, codec)
        path = out / f"{ann.image_id}.gmap"
        if args.kind == "label":
            write_label_gmap(path, maps)
        else:
            write_prediction_gmap(path, prediction_from_label(maps))
    _write_run_config(out, "rasterize", cfg,
                      {"ann": str(args.ann), "kind": args.kind,
                       "images": len(anns)})
    print(f"wrote {len(anns)} {args.kind} maps to {out}")
    return 0


def cmd_augment(args) -> int:
    cfg = _resolve_config(args)
    anns = load_region_annotations(args.ann)
    images_dir = Path(args.images)
    out = Path(args.out)
    (out / "images").mkdir(parents=True, exist_ok=True)
    out_anns = []
    drawn = []
    for index, ann in enumerate(anns):
        image_path = images_dir / f"{ann.image_id}.png"
        image = np.asarray(Image.open(image_path).convert("RGB"))
        params = sample_params(cfg.seed, index, (cfg.zoom_min, cfg.zoom_max))
        image, ann = apply_augment(image, ann, params)
        Image.fromarray(image).save(out / "images" / f"{ann.image_id}.png")
        out_anns.append(ann)
        drawn.append({"image_id": ann.image_id, "rotation": params.rotation,
                      "zoom": params.zoom})
    save_region_annotations(out / "annotations.json", out_anns)
    save_object_map(out / "objects.csv", out_anns)
    _write_run_config(out, "augment", cfg,
                      {"ann": str(args.ann), "images": str(args.images),
                       "params": drawn})
    print(f"augmented {len(out_anns)} images into {out}")
    return 0


def cmd_decode(args) -> int:
    cfg = _resolve_config(args)
    maps = read_prediction_gmap(args.gmap)
    if args.multi:
        grasps = multi_grasps(maps, threshold=cfg.threshold,
                              radius=cfg.peak_radius, d=cfg.d)
    else:
        top = best_grasp(maps, threshold=cfg.threshold, d=cfg.d)
        grasps = [] if top is None else [top]
    payload = {
        "config": asdict(cfg),
        "grasps": [
            {"x": s.grasp.x, "y": s.grasp.y, "omega": s.grasp.omega,
             "theta": s.grasp.theta, "d": s.grasp.d, "score": s.score}
            for s in grasps
        ],
    }
    print(json.dumps(payload, indent=2))
    return 0


def cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    anns = load_region_annotations(args.gt)
    split_mode = None
    test_ids = None
    if args.split:
        split = load_split(args.split)
        test_ids = split["test"]
        split_mode = split.get("mode")
    report = evaluate_split(
        args.pred,
        anns,
        test_ids=test_ids,
        threshold=cfg.threshold,
        angle_period=_angle_period_value(cfg),
        d=cfg.d,
        split_mode=split_mode,
    )
    if args.out:
        save_report(args.out, report)
    print(report.summary_text())
    print(f"accuracy {100.0 * report.accuracy:.1f}% "
          f"({report.correct}/{report.total})")
    return 0


def cmd_convert(args) -> int:
    cfg = _resolve_config(args)
    src = Path(args.cpos)
    files = sorted(src.glob("*cpos.txt")) if src.is_dir() else [src]
    if not files:
        raise AnnotationError(f"no cpos files under {src}")
    size = (args.height, args.width)
    frame = ConvexPolygon(np.array(
        [[0.0, 0.0], [size[1], 0.0], [size[1], size[0]], [0.0, size[0]]]
    ))
    anns = []
    for path in files:
        rects = load_cornell_rects(path)
        image_id = path.stem.removesuffix("cpos")
        regions = []
        for r in rects:
            omega = r.w
            if omega > WIDTH_SCALE:
                counters.bump("convert_width_clamp")
                omega = WIDTH_SCALE
            # approximate bootstrap: a thin central slab of the rectangle,
            # graspable from both directions along its axis
            slab = oriented_box(r.cx, r.cy, r.w / 3.0, r.h / 3.0, r.phi)
            clipped = intersect(slab, frame)
            if clipped is None:
                counters.bump("convert_region_dropped")
                continue
            regions.append(RegionAnnotation(
                polygon=clipped,
                angles=(normalize_angle(r.phi),
                        normalize_angle(r.phi + math.pi)),
                omega=omega,
            ))
        anns.append(ImageAnnotation(image_id=image_id, object_id=image_id,
                                    regions=tuple(regions), image_size=size))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_region_annotations(out / "annotations.json", anns)
    save_object_map(out / "objects.csv", anns)
    _write_run_config(out, "convert", cfg, {
        "cpos": str(src), "height": args.height, "width": args.width,
        "note": "approximate conversion; rectangle files carry no region labels",
    })
    print(f"converted {len(anns)} images to {out} (approximate regions)")
    return 0


def cmd_viz(args) -> int:
    cfg = _resolve_config(args)
    image = np.asarray(Image.open(args.image).convert("RGB"))
    maps = read_prediction_gmap(args.pred)
    if args.multi:
        grasps = multi_grasps(maps, threshold=cfg.threshold,
                              radius=cfg.peak_radius, d=cfg.d)
    else:
        top = best_grasp(maps, threshold=cfg.threshold, d=cfg.d)
        grasps = [] if top is None else [top]
    render_overlay(image, grasps, out=args.out)
    print(json.dumps({"config": asdict(cfg), "grasps": len(grasps),
                      "out": str(args.out)}, indent=2))
    return 0


def cmd_validate(args) -> int:
    report = validate_gmap(args.gmap)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0 if report["valid"] else 1


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_config_flags(p: argparse.ArgumentParser, *names: str) -> None:
    p.add_argument("--config", help="JSON config file (flags override it)")
    flags = {
        "k": lambda: p.add_argument("--k", type=int, help="angle bin count"),
        "d": lambda: p.add_argument("--d", type=float, help="triangle base (px)"),
        "threshold": lambda: p.add_argument("--threshold", type=float),
        "peak_radius": lambda: p.add_argument("--peak-radius", dest="peak_radius",
                                              type=int),
        "zoom_min": lambda: p.add_argument("--zoom-min", dest="zoom_min", type=float),
        "zoom_max": lambda: p.add_argument("--zoom-max", dest="zoom_max", type=float),
        "angle_period": lambda: p.add_argument("--angle-period", dest="angle_period",
                                               choices=["pi", "2pi"]),
        "seed": lambda: p.add_argument("--seed", type=int),
    }
    for name in names:
        flags[name]()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trigrasp",
        description="Oriented base-fixed triangle grasp toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a synthetic corpus")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--image-size", type=int, default=128)
    p.add_argument("--out", required=True)
    _add_config_flags(p, "seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("rasterize", help="region annotations -> GMAP maps")
    p.add_argument("--ann", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=["label", "prediction"], default="label",
                   help="prediction emits the ideal-prediction form of the labels")
    _add_config_flags(p, "k")
    p.set_defaults(func=cmd_rasterize)

    p = sub.add_parser("augment", help="crop/rotate/zoom a corpus")
    p.add_argument("--images", required=True)
    p.add_argument("--ann", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p, "seed", "zoom_min", "zoom_max")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("decode", help="prediction GMAP -> grasps (JSON)")
    p.add_argument("gmap")
    p.add_argument("--multi", action="store_true", help="local peaks, not just top-1")
    _add_config_flags(p, "threshold", "peak_radius", "d")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="score prediction GMAPs against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--split", help="split JSON; evaluates its 'test' ids")
    p.add_argument("--out", help="write the JSON report here")
    _add_config_flags(p, "threshold", "angle_period", "d")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("convert",
                       help="legacy rectangle files -> approximate region JSON")
    p.add_argument("--cpos", required=True, help="cpos.txt file or directory")
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("viz", help="overlay decoded grasps on an image")
    p.add_argument("--image", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--multi", action="store_true")
    _add_config_flags(p, "threshold", "peak_radius", "d")
    p.set_defaults(func=cmd_viz)

    p = sub.add_parser("validate", help="check one GMAP file (JSON verdict)")
    p.add_argument("gmap")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AnnotationError, CornellError, GmapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
