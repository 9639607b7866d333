"""Depth proxies, condition checks and edit numerics."""

import json

from ._loosectl import (
    CameraIntrinsics,
    DecodeError,
    DegenerateInput,
    IoError,
    ValidationError,
    fit_min_obb_yaw,
    intrinsics_from_fov,
    jacobian_fd,
    lora_forward,
    run_cli,
    top_directions,
)
from . import _loosectl as _ext

__all__ = [
    "CameraIntrinsics",
    "DecodeError",
    "DegenerateInput",
    "IoError",
    "ValidationError",
    "boundary_proxy",
    "box_proxy",
    "canonical_scene",
    "check_boundary",
    "check_exact",
    "decode_depth",
    "encode_depth",
    "fit_min_obb_yaw",
    "intrinsics_from_fov",
    "jacobian_fd",
    "lora_forward",
    "render_scene",
    "run_cli",
    "top_directions",
]


def _text(scene):
    return scene if isinstance(scene, str) else json.dumps(scene)


def render_scene(scene, width=None):
    """Depth map (H x W float32, meters) of a scene document or dict."""
    return _ext._render_scene(_text(scene), width)


def canonical_scene(scene):
    """(canonical dict, notes) after validation."""
    text, notes = _ext._canonical_scene(_text(scene))
    return json.loads(text), list(notes)


def boundary_proxy(depth, fov_deg, include_ceiling=False, far_m=None):
    """(condition depth, scene dict)."""
    cond, scene = _ext._boundary_proxy(depth, fov_deg, include_ceiling, far_m)
    return cond, json.loads(scene)


def box_proxy(depth, segments, intrinsics, min_area=10000, k_mad=None):
    """(condition depth, {"boxes": [...], "skipped": [...]})."""
    cond, doc = _ext._box_proxy(depth, segments, intrinsics, min_area, k_mad)
    return cond, json.loads(doc)


def check_exact(gen, cond, tau_rel=0.05):
    return json.loads(_ext._check_exact(gen, cond, tau_rel))


def check_boundary(gen, cond, tau_rel=0.05, eta=0.01):
    """(report dict, per-pixel violation map)."""
    report, violation = _ext._check_boundary(gen, cond, tau_rel, eta)
    return json.loads(report), violation


def encode_depth(depth, intrinsics, format="pfm"):
    return _ext._encode_depth(depth, intrinsics, format)


def decode_depth(data):
    """(depth, format name, embedded intrinsics or None)."""
    return _ext._decode_depth(data)
