"""Python bindings for vcm-bench.

Functions returning structured data decode the JSON produced by the core.
"""

import json as _json

from . import _core
from ._core import (
    CodecError,
    DataError,
    bbox_iou,
    bd_metric,
    bd_rate,
    bitrate_of_run,
    iteration_defaults,
    psnr,
    rasterize_polygon as _rasterize_polygon,
    render_command,
    rle_decode as _rle_decode,
    run_cli,
    select_qp_subset,
)

__all__ = [
    "CodecError", "DataError", "bbox_iou", "bd_metric", "bd_rate", "bitrate_of_run", "build_manifest",
    "default_finetune_schedule", "evaluate", "iteration_defaults", "mask_iou", "psnr", "rasterize_polygon",
    "render_command", "rle_decode", "rle_encode", "run_cli", "run_selftest", "select_qp_subset",
]


def rle_encode(mask):
    return _json.loads(_core.rle_encode(mask))


def rle_decode(rle):
    return _rle_decode(_json.dumps(rle))


def mask_iou(a, b):
    return _core.mask_iou(_json.dumps(a), _json.dumps(b))


def rasterize_polygon(vertices, width, height):
    rle, warnings = _rasterize_polygon(vertices, width, height)
    return _json.loads(rle), warnings


def evaluate(gt, dets, kind="box", weight_mode="instances", min_gt_area=0.0):
    if not isinstance(gt, str):
        gt = _json.dumps(gt)
    if not isinstance(dets, str):
        dets = _json.dumps(dets)
    return _json.loads(_core.evaluate(gt, dets, kind, weight_mode, min_gt_area))


def default_finetune_schedule(detector):
    return _json.loads(_core.default_finetune_schedule(detector))


def build_manifest(mode, pristine_dir, runs, detector="faster_rcnn"):
    if not isinstance(runs, str):
        runs = _json.dumps(runs)
    return _json.loads(_core.build_manifest(mode, str(pristine_dir), runs, detector))


def run_selftest(out_dir, codec_dir="", n_images=8):
    return _json.loads(_core.run_selftest(str(out_dir), str(codec_dir), n_images))
