"""Exact simulator and invariant-torus certifier for x'' + sign(x) = p(t)."""

from .forcing import (
    PeriodicForcing, square_wave, sawtooth, sinusoid,
    forcing_from_config, load_forcing, AVG_TOL,
)
from .flow import (
    State, FlowSegment, Trajectory, flow_plus, flow_minus, branch_flow,
    next_crossing, evolve, time_T_map,
    DegenerateStart, DegenerateCrossing, X_TOL, Y_DEGENERATE,
)
from .torus import (
    TorusSpec, TorusMesh, y_boundary, chart_height, closure_check,
    build_mesh, contains, contains_many, nesting_check, SURFACE_TOL,
)
from .certify import (
    CondOutcome, CertificationReport, InvarianceReport,
    check_cond1, check_cond2, certify_torus, find_min_certified_n,
    linf_certificate, verify_invariance,
    NonZeroAverageError, InconclusiveError, UnboundedRepresentationError,
)
from .oracle import OracleConfig, rk_evolve, scan_conditions, quad_primitives

__version__ = "0.1.0"
