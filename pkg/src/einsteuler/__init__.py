"""Einstein-Euler equations in harmonic gauge as a first-order symmetric hyperbolic system.

Modules: ``geometry`` (metrics, Christoffel symbols, harmonic residual),
``fluid`` (Makino variable and symmetrized Euler blocks), ``reduction`` (the
coupled 55-component system), ``initial_data`` (gauge completion and
constraints), ``wsobolev`` (weighted fractional Sobolev norms), ``evolve``
(time stepping and monitors), ``scenario`` and ``cli``.
"""
from .errors import EinsteulerError
from .evolve import EvolutionConfig, MonitorRecord, gronwall_check, picard_iterate, run, step_direct, transport_epsilon
from .fluid import EquationOfState, FluidState
from .geometry import SpacetimeMetric
from .grid import GridSpec
from .reduction import SystemState, assemble_A0, assemble_Aa, assemble_block_system, time_derivative
from .scenario import Scenario, build_state, parse_scenario
from .wsobolev import DyadicFamily, NormSpec, norm_hs_delta

__all__ = [
    "DyadicFamily",
    "EinsteulerError",
    "EquationOfState",
    "EvolutionConfig",
    "FluidState",
    "GridSpec",
    "MonitorRecord",
    "NormSpec",
    "Scenario",
    "SpacetimeMetric",
    "SystemState",
    "assemble_A0",
    "assemble_Aa",
    "assemble_block_system",
    "build_state",
    "gronwall_check",
    "norm_hs_delta",
    "parse_scenario",
    "picard_iterate",
    "run",
    "step_direct",
    "time_derivative",
    "transport_epsilon",
]
