"""Bounding-box and mask annotations from per-frame trajectory points.

The heavy lifting lives in the compiled `_core` module; this package just
re-exports its public surface.
"""

from picbox._core import (
    OutsideFrameError,
    PicConfig,
    __version__,
    assign_split,
    bbox_from_mask,
    canonical_split_plan,
    emit_detection_label,
    emit_segmentation_label,
    expand,
    fixed_box,
    init_box,
    iou,
    mask_to_polygon,
    parse_detection_label,
    pic_box,
    rle_decode,
    rle_encode,
    sample_frames,
    threshold_box,
)

__all__ = [
    "OutsideFrameError",
    "PicConfig",
    "__version__",
    "assign_split",
    "bbox_from_mask",
    "canonical_split_plan",
    "emit_detection_label",
    "emit_segmentation_label",
    "expand",
    "fixed_box",
    "init_box",
    "iou",
    "mask_to_polygon",
    "parse_detection_label",
    "pic_box",
    "rle_decode",
    "rle_encode",
    "sample_frames",
    "threshold_box",
]
