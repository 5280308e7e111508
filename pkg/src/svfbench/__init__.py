"""Evaluation, search and bounds for stochastic appointment sequencing."""

__version__ = "0.1.0"

from .dist import (DilationCertificate, Discrete, Exponential, Laplace, Lognormal, Negated,
                   Normal, ParetoII, PointMass, Scaled, Shifted, ThreePointSymmetric, TwoPoint,
                   Uniform, check_dilation_order, discretize, lognormal_from_mean_sd, moments,
                   quantile)
from .lindley import (CostBreakdown, Instance, evaluate_exact_discrete, evaluate_exact_expmix,
                      evaluate_mc, session_identity_residual)
from .pmf import GridPMF
from .sequence import SearchReport, enumerate_optimal, ratio_meanbased, ratio_optspaced, svf

__all__ = [
    "CostBreakdown", "DilationCertificate", "Discrete", "Exponential", "GridPMF", "Instance",
    "Laplace", "Lognormal", "Negated", "Normal", "ParetoII", "PointMass", "Scaled", "SearchReport",
    "Shifted", "ThreePointSymmetric", "TwoPoint", "Uniform", "check_dilation_order", "discretize",
    "enumerate_optimal", "evaluate_exact_discrete", "evaluate_exact_expmix", "evaluate_mc",
    "lognormal_from_mean_sd", "moments", "quantile", "ratio_meanbased", "ratio_optspaced",
    "session_identity_residual", "svf",
]
