"""Reproducible experiment harnesses and their persistence formats."""

from .data import InitialData
from .report import (ExperimentReport, Verdict, persist_report, read_csv,
                     read_snapshot, write_snapshot)
from .studies import (SelfSimilaritySettings, angular_variance, decay_study,
                      eps_limit_study, evolve_run, norms_report, picard_certify,
                      radial_study, retained_band, ring_labels,
                      self_similarity_study, wrap_time)

__all__ = [
    "InitialData", "ExperimentReport", "Verdict", "persist_report", "read_csv",
    "read_snapshot", "write_snapshot", "SelfSimilaritySettings", "angular_variance",
    "decay_study", "eps_limit_study", "evolve_run", "norms_report", "picard_certify",
    "radial_study", "retained_band", "ring_labels", "self_similarity_study", "wrap_time",
]
