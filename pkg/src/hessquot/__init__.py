"""Numerics for exterior Dirichlet problems of Hessian quotient equations."""
from .asymptotics import DecayFit, borderline_probe, fit_decay
from .barriers import BarrierSpec, assemble_envelope, obstruction_check, quadratic_barrier, solve_delta_for_c
from .profiles import envelope_build, integrate_H, integrate_h, solve_h0
from .radial import HqParams, dim2_solution, mu_of_alpha, radial_profile, solve_U, special_lagrangian_3d, thresholds
from .symmetric import Spectrum, elem_sym, exclusion_table, rank_one_sigma, t_bounds

__version__ = "0.1.0"

__all__ = [
    "BarrierSpec",
    "DecayFit",
    "HqParams",
    "Spectrum",
    "assemble_envelope",
    "borderline_probe",
    "dim2_solution",
    "elem_sym",
    "envelope_build",
    "exclusion_table",
    "fit_decay",
    "integrate_H",
    "integrate_h",
    "mu_of_alpha",
    "obstruction_check",
    "quadratic_barrier",
    "radial_profile",
    "rank_one_sigma",
    "solve_U",
    "solve_delta_for_c",
    "solve_h0",
    "special_lagrangian_3d",
    "t_bounds",
    "thresholds",
]
