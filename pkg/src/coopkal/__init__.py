"""Cooperative Kalman filtering of time-varying signals across two sensor graphs.

The package models phase-cyclic stationary graph signals, transports
their Gaussian statistics between instants with optimal transport,
transfers power spectral densities across graphs through rational
kernels, and alternates Kalman estimation between two subgraphs so each
one only needs to be observed half the time. An experiment harness and
the ``coopkal`` command line drive the synthetic and CSV-backed studies.
"""

from .baselines import tikhonov_estimate, wiener_estimate
from .config import ExperimentConfig, load_config
from .errors import (
    ConfigError,
    ContractError,
    CoopkalError,
    DataError,
    DegenerateGeometryError,
    DegenerateSpectrumError,
    FitFailureError,
    FlatSignalWarning,
    InsufficientSamplesError,
    InvalidKernelError,
    NumericalError,
    SingularInnovationError,
    SingularSourceError,
    SingularSystemError,
)
from .fixtures import SST_LIKE, make_sst_fixture
from .graphs import (
    Eigensystem,
    Graph,
    build_knn_graph,
    eigendecompose,
    gft,
    igft,
    laplacian,
    load_graph,
    random_sensor_graph,
    save_graph,
)
from .kalman import (
    CoopSettings,
    KalmanTrack,
    ObservationModel,
    StateDynamics,
    SubgraphState,
    coop_step,
    gain,
    init_track,
    pi_control,
    predict,
    update,
)
from .harness import (
    RunReport,
    experiment_bank,
    generate_stream,
    load_coords,
    make_observation,
    mse,
    run_realdata_experiment,
    run_synthetic_experiment,
)
from .kernels import RationalKernel, adapt_kernel, discretize, fit_kernel, transfer_psd
from .reporting import render_figures, write_report
from .signals import (
    CyclicPsd,
    GaussianMoments,
    cgwss_signal,
    estimate_period,
    estimate_psd,
    load_signals,
    sample_cgwss,
    save_signals,
    synth_psd_bank,
)
from .slots import DataSlot, update_data_slot
from .transport import TransportMap, apply_map, ot_map_general, ot_map_spectral, wasserstein2

__version__ = "0.1.0"
