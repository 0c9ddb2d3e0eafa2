"""Panorama to bird's-eye-view projection with satellite footprint guidance."""

import json

from . import _cvbev
from ._cvbev import (
    CvbevError,
    alpha_from_ratio,
    angle_grid,
    block_ratios,
    depth_to_points,
    evaluate,
    fuse_aligned,
    interior_coverage,
    offset_magnitude,
    render_canonical,
    render_flat,
    sha256_file,
    warp,
    write_synthetic_pair,
)

__all__ = [
    "CvbevError",
    "alpha_from_ratio",
    "angle_grid",
    "block_ratios",
    "depth_to_points",
    "evaluate",
    "fuse_aligned",
    "interior_coverage",
    "offset_magnitude",
    "project",
    "render_canonical",
    "render_flat",
    "run_project",
    "sha256_file",
    "warp",
    "write_synthetic_pair",
]


def _config(config):
    return json.dumps(config) if config else ""


def project(depth, footprint=None, labels=None, *, gsd=70.0 / 256.0,
            offset_east=0.0, offset_north=0.0, config=None):
    """Project a depth panorama into a BEV grid.

    ``config`` takes the same keys as the CLI's ``--config`` JSON file.
    """
    return _cvbev.project(depth, footprint, labels, gsd, offset_east,
                          offset_north, _config(config))


def run_project(manifest, out_dir, config=None):
    """Run the batch ``project`` command; returns the written relative paths."""
    return _cvbev.run_project(manifest, out_dir, _config(config))
