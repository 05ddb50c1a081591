# app/core/config.py
import logging
import os

import yaml

VERSION = "0.1.0"

# Quadrature defaults
DEFAULT_VOLUME_RESOLUTION = 64
DEFAULT_SURFACE_RESOLUTION = 256
DEFAULT_REFINE_DEPTH = 2
MAX_REFINE_DEPTH = 8

# Cells per slab in voxel quadrature. Fixed so that reductions do not depend
# on the worker count.
SLAB_LAYERS = 8

# Angular distance (in units of the sector width) below which a point is on a
# sector wall.
WALL_TOLERANCE = 1e-12

# Rearrangement
DEFAULT_LEVEL_COUNT = 256

# Isoperimetric and Sobolev acceptance slack
ISOPERIMETRIC_SLACK = 0.01
SOBOLEV_SLACK = 0.02

# Solver defaults
DEFAULT_CG_TOLERANCE = 1e-12
DEFAULT_CG_MAX_ITERATIONS = 5000
DEFAULT_OUTER_TOLERANCE = 1e-6
DEFAULT_OUTER_MAX_ITERATIONS = 400
DEGENERACY_THRESHOLD = 1e-10

# Pohozaev residual denominator floor
POHOZAEV_EPSILON = 1e-14

# Grid file format
GRID_FILE_HEADER = "grushin-grid v1"
GRID_FILE_DIGITS = 17

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(verbose: bool = False) -> None:
    """
    Installs the root handler used by the CLI and the HTTP app.
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format=LOG_FORMAT,
    )


def load_yaml_config(file_path: str) -> dict:
    """
    Read a YAML key-value configuration file from disk.
    An empty file yields an empty mapping.
    """
    if not os.path.exists(file_path):
        raise FileNotFoundError(file_path)

    with open(file_path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"{file_path}: expected a mapping at top level")
    return data
