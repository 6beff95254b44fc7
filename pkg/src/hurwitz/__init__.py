"""Hurwitz maps: rational maps of the sphere with prescribed branch data."""

from .algebra import Partition, PermTuple, is_admissible
from .ffsearch import FFSolution, SearchOptions, SearchProblem, search
from .monodromy import MonodromyCertificate, RationalMap, conjugacy_witness, monodromy_of
from .padic import CoherentSystem, hensel_step, lift_solution
from .pipeline import HurwitzProblem, PipelineConfig, SolutionCertificate, run

__all__ = [
    "CoherentSystem",
    "FFSolution",
    "HurwitzProblem",
    "MonodromyCertificate",
    "Partition",
    "PermTuple",
    "PipelineConfig",
    "RationalMap",
    "SearchOptions",
    "SearchProblem",
    "SolutionCertificate",
    "conjugacy_witness",
    "hensel_step",
    "is_admissible",
    "lift_solution",
    "monodromy_of",
    "run",
    "search",
]
__version__ = "0.1.0"
