"""kinfp: finite-volume simulation and Lyapunov-drift certification for
confined kinetic Fokker-Planck equations with fat-tailed velocity equilibria."""

__version__ = "0.1.0"

from .grid import Field, PhaseGrid, build_grid
from .model import (
    ExpWeight,
    LyapunovSpec,
    ModelParams,
    PolyWeight,
    apply_Lstar_exact,
    asymptotic_density,
    energy,
    equilibrium,
    equilibrium_drift,
    grad_potential,
    grad_v_H,
    jbracket,
    lyapunov_H,
    lyapunov_weight,
    phi,
    potential,
    theta_decay,
)
from .solver import (
    SolverConfig,
    Sinks,
    cfl_timestep,
    default_initial_condition,
    run,
    steady_state_reference,
    strang_step,
    transport_rhs,
    velocity_rhs,
)
from .diagnostics import (
    DiagnosticsRecord,
    RateFit,
    density,
    energy_scatter,
    l1_distance,
    mass,
    rate_fit,
    reference_profile,
    tail_comparison,
)
from .verify import (
    CertificateReport,
    ScanConfig,
    apply_Lstar_fd,
    apply_Lstar_fd_richardson,
    equivalence_constants,
    find_certified_spec,
    scan_drift_inequality,
)

__all__ = [name for name in dir() if not name.startswith("_")]
