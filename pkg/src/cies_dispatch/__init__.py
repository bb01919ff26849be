"""Bi-level stochastic dispatch for a community energy system and EV station."""

from cies_dispatch.probseq import ProbSeq, discretize_pdf

__all__ = ["ProbSeq", "discretize_pdf"]
__version__ = "0.1.0"
