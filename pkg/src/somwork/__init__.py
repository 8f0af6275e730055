"""Work and heat exchange in spin-oscillator models."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    CutoffError,
    DimensionError,
    IntegrationError,
    SomError,
    TaintedTrajectoryError,
)
from .lembas import (  # noqa: E402
    FluxSample,
    FluxSeries,
    LembasSplit,
    effective_hamiltonian,
    flux_series,
    fluxes,
    h_eff_time_derivative,
    incoherent_generator,
    lembas_split,
    split_commuting,
)
from .measures import (  # noqa: E402
    QualityReport,
    breakdown_time,
    instantaneous_ratio,
    integral_quality,
    min_purity_bound,
    rwa_deviation,
    signed_integrals,
)
from .models import (  # noqa: E402
    ModelKind,
    SystemParams,
    build_hamiltonian,
    canonicalize_coupling,
    choose_cutoff,
    derived_constants,
    initial_state,
    som_hamiltonian,
)
from .oracles import (  # noqa: E402
    LimitKind,
    LimitSpec,
    analytic_purity,
    first_order_pt_state,
    limit_sweep,
    stroke_amplitude,
)
from .propagation import (  # noqa: E402
    TimeGrid,
    Trajectory,
    eigen_propagator,
    evolve,
    fa_evolve,
    jcm_closed_form_propagator,
    z_som_analytic_state,
)
from .quantum_core import (  # noqa: E402
    DensityMatrix,
    Operator,
    StateVector,
    coherent_state,
    partial_trace,
    purity,
    tensor,
)
