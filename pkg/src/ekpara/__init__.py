"""Periodic paradifferential calculus and an Euler-Korteweg local solver.

Spectral fields on the torus, Bony-Weyl quantization and paraproducts,
symbol composition, the paralinearized Euler-Korteweg system in complex
coordinates, mollified linear flows with modified energies, and the
contractive iteration producing the nonlinear local solution.
"""

from .cutoff import CutoffParams, chi, chi_eps
from .grid import (FourierField, GridError, TorusGrid, dealiased_product,
                   holder_norm_estimate, homogeneous_norm, lp_block,
                   lp_block_count, project_low, project_zero_mean,
                   sobolev_norm)
from .symbols import (ParaOp, Symbol, SymbolError, assemble_bony_weyl,
                      assemble_standard, assemble_weyl, compose_symbol,
                      composition_remainder_probe, paraproduct_decompose,
                      seminorm_estimate, weyl_to_standard)
from .ek import (AdmissibilityError, DiagFrame, EKParams, ParameterError,
                 StateRP, StateU, diag_frame, diag_identity_residual,
                 ek_rhs_exact, from_complex, generator_matrix, involution_S,
                 jop_bw_matrix, lambda_of, mass, remainder_R, symbols_A1,
                 symbols_A2, to_complex, vec_norm)
from .flow import (EnergyProbe, FlowConfig, FlowError, Trajectory,
                   energy_growth_probe, energy_trace, fit_growth_constant,
                   max_stable_dt, modified_energy, modified_norm,
                   mollified_generator, solve_linear)
from .scheme import (IterationTrace, SchemeConfig, SolveReport,
                     continuity_probe, galerkin_study, initial_flow, iterate,
                     project_state, reference_solve, reversibility_check,
                     trajectory_mass_drift)

__all__ = [n for n in dir() if not n.startswith("_")]
