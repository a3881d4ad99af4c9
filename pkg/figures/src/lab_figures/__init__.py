"""Paper-style figures from adiabatic-lab CSV results."""

__version__ = "0.1.0"

from .jobs import FigureJob, JobInvalid, MissingInput, SchemaMismatch, load_job
from .render import render

__all__ = ["FigureJob", "JobInvalid", "MissingInput", "SchemaMismatch",
           "load_job", "render"]
