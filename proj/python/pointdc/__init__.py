"""Point-based nuclei detection and classification toolkit."""

from ._core import (
    __version__,
    bilinear_sample,
    conv2d,
    decode,
    f1_report,
    generate_dataset,
    load_dataset,
    match_one_to_one,
    run,
)

__all__ = [
    "__version__",
    "bilinear_sample",
    "conv2d",
    "decode",
    "f1_report",
    "generate_dataset",
    "load_dataset",
    "match_one_to_one",
    "run",
]
