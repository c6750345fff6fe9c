"""Normal integration with auxiliary edges and discontinuity optimization."""

from ._core import (
    NormintError,
    filter_response,
    local_maximumness,
    made,
    make_scene,
    optimize,
    poisson,
    read_depth_pfm,
    read_normal_map,
    reweight_value,
    write_depth_pfm,
    write_normal_map,
)

__all__ = [
    "NormintError",
    "filter_response",
    "local_maximumness",
    "made",
    "make_scene",
    "optimize",
    "poisson",
    "read_depth_pfm",
    "read_normal_map",
    "reweight_value",
    "write_depth_pfm",
    "write_normal_map",
]
