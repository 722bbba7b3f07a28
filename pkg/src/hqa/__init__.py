"""Handwriting quality analysis.

Scores recorded pen trajectories against reference models on five criteria
(shape, direction, stroke order, kinematics, position relative to the
reference lines) and produces quantitative scores, fuzzy qualitative labels
and a six-class global verdict.
"""

from hqa.ink import InkPoint, InkSample, PenStroke, RefLines, Zone, read_sample, write_sample
from hqa.pipeline import PipelineConfig, TemplateSet, analyze, fit_templates

__version__ = "0.1.0"

__all__ = [
    "InkPoint",
    "PenStroke",
    "RefLines",
    "InkSample",
    "Zone",
    "read_sample",
    "write_sample",
    "PipelineConfig",
    "TemplateSet",
    "analyze",
    "fit_templates",
    "__version__",
]
