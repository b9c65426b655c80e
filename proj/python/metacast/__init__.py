"""Density-driven target selection for 3D point clouds."""

from ._core import (
    CombineMode,
    ConfusionStats,
    DensityGrid,
    FlowResult,
    GridSpec,
    InvalidInput,
    OutOfDomain,
    ParseError,
    ParticleCloud,
    Selection,
    Technique,
    adjust_threshold,
    ascend,
    baseline_brush,
    build_density,
    combine,
    confusion_stats,
    gen_dataset,
    load_cloud,
    load_field,
    meta_brush,
    meta_paint,
    meta_point,
    sample_density,
    sample_gradient,
    save_cloud,
    save_field,
)

__all__ = [name for name in dir() if not name.startswith("_")]
