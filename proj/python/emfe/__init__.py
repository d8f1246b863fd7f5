"""Python bindings for the emfe morphological feature pipeline."""

from ._emfe import (
    EmfeError,
    Model,
    count_holes,
    cross_validate,
    extract_file,
    load_model,
    load_table,
    mask_of,
    model_from_bytes,
    otsu_cut,
    report,
    run_cli,
    train,
)

__all__ = [
    "EmfeError",
    "Model",
    "count_holes",
    "cross_validate",
    "extract_file",
    "load_model",
    "load_table",
    "mask_of",
    "model_from_bytes",
    "otsu_cut",
    "report",
    "run_cli",
    "train",
]
