"""Octree-scaffolded IMLS surface reconstruction."""

from ._core import (
    Error,
    FitConfig,
    MlsSet,
    TriangleMesh,
    __version__,
    chamfer_l1,
    evaluate,
    extract_mesh,
    fit_mesh,
    make_icosphere,
    make_torus,
    read_mls,
    read_obj,
    reconstruct,
    sample_surface,
    set_num_threads,
    write_obj,
)

__all__ = [
    "Error",
    "FitConfig",
    "MlsSet",
    "TriangleMesh",
    "__version__",
    "chamfer_l1",
    "evaluate",
    "extract_mesh",
    "fit_mesh",
    "make_icosphere",
    "make_torus",
    "read_mls",
    "read_obj",
    "reconstruct",
    "sample_surface",
    "set_num_threads",
    "write_obj",
]
