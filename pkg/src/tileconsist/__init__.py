"""Tile self-assembly simulation, shared-memory histories, and consistency checking."""

__version__ = "0.1.0"

from .tam import (
    Assembly,
    AssemblySequence,
    BindingRelation,
    Glue,
    TileAssemblySystem,
    TileType,
    binding_strength,
    check_local_determinism,
    frontier,
    is_terminal,
    run_atam,
    unique_terminal_bruteforce,
)
from .ktam import KineticParams, forward_rate, reverse_rate, run_ktam
from .dsm import (
    enumerate_atam_histories,
    extract_assembly_sequence,
    simulate_atam_dsm,
    simulate_ktam_dsm,
    verify_simulation,
)
from .consistency import (
    build_causality_order,
    check_binding_rule_determined,
    check_causal,
    check_concurrent_write_free,
    check_gdo,
    check_gpo,
    check_gwo,
    check_sequential,
    check_slow,
    classify,
)
from .stabilize import (
    heal,
    inject_hole,
    measure_error_rate,
    scale_result,
    transform_proofreading,
)
from .tileset_io import parse_tileset, render_ascii, render_svg, write_tileset

__all__ = [
    "Assembly", "AssemblySequence", "BindingRelation", "Glue",
    "TileAssemblySystem", "TileType", "binding_strength",
    "check_local_determinism", "frontier", "is_terminal", "run_atam",
    "unique_terminal_bruteforce", "KineticParams", "forward_rate",
    "reverse_rate", "run_ktam", "enumerate_atam_histories",
    "extract_assembly_sequence", "simulate_atam_dsm", "simulate_ktam_dsm",
    "verify_simulation", "build_causality_order",
    "check_binding_rule_determined", "check_causal",
    "check_concurrent_write_free", "check_gdo", "check_gpo", "check_gwo",
    "check_sequential", "check_slow", "classify", "heal", "inject_hole",
    "measure_error_rate", "scale_result", "transform_proofreading",
    "parse_tileset", "render_ascii", "render_svg", "write_tileset",
]
