"""Guide-driven anisotropic-diffusion super-resolution of gridded LST."""

from ._lstsr import (
    ClassGrid,
    CoefficientField,
    EdgeStoppingForm,
    GeoTransform,
    Grid2D,
    GuideParams,
    GuideStack,
    InitScheme,
    LstsrError,
    Node,
    PackedGrid,
    PackedHeader,
    RunConfig,
    ScaleParams,
    SolveReport,
    SolverParams,
    Station,
    SynthParams,
    TileGeometry,
    TilePlan,
    UtcTime,
    ValidationReport,
    Window,
    apply_mask,
    build_guide,
    coarsen_nan_aware,
    compute_report,
    diffuse_step,
    adjust_step,
    downscale,
    edge_coefficients,
    export_coefficients,
    extract,
    format_filename,
    generate,
    grid_difference_report,
    import_coefficients,
    load_station_table,
    matchup,
    minmax_scale,
    minmax_unscale,
    mode_downsample_landcover,
    normalize_guide,
    normalize_satellite,
    pack,
    parse_filename,
    plan,
    profile,
    read_npg,
    replicate_nearest,
    solve,
    stitch_average,
    unpack,
    upsample_bicubic,
    write_npg,
    write_scene_files,
)

__version__ = "1.0.0"

__all__ = [name for name in dir() if not name.startswith("_")]
