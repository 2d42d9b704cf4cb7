"""Two-colour interferometric vibrometry from raw detector timestamps.

The package simulates photon-counting interferometer outputs (an
entangled pair channel and a classical reference channel) driven by a
vibrating mirror, and estimates the vibration spectrum and waveform back
from the timestamp streams alone.
"""

from .core import (
    ClassicalFringeSpec,
    GeometryFactor,
    PhotonPairSpec,
    SPEED_OF_LIGHT,
    classical_port_probability,
    delay_to_displacement,
    displacement_to_delay,
    quadrature_delay,
    quantum_coincidence_probability,
)
from .errors import AnalysisError, ConfigError, StreamFormatError
from .estimate import (
    AnalysisOptions,
    ComponentEstimate,
    PipelineResult,
    ReconstructedSignal,
    SpectrumEstimate,
    calibrate_ratio,
    classical_pipeline,
    classical_reconstruct,
    combined_spectrum,
    detection_threshold,
    estimate_amplitudes,
    estimate_phase,
    frequency_grid,
    project_timestamps,
    quantum_pipeline,
    reconstruct,
    refine_frequency,
    scan_spectrum,
)
from .metrology import (
    AdvantageSetup,
    DelayStdResult,
    TrialScenario,
    TrialStatistics,
    background_advantage_setup,
    loss_advantage_setup,
    matched_exposures,
    monte_carlo_delay_std,
    qcrb_delay_std,
    qcrb_displacement_std,
    run_advantage_experiment,
    run_amplitude_trials,
    run_frequency_sweep,
)
from .simulate import (
    ChannelModel,
    ClassicalRun,
    GroundTruth,
    QuantumRun,
    SignalComponent,
    TimestampStream,
    VibrationSignal,
    classical_fluxes,
    quantum_fluxes,
    sample_inhomogeneous_poisson,
    simulate_classical_run,
    simulate_quantum_run,
)
from .streamio import (
    read_ground_truth,
    read_stream,
    write_ground_truth,
    write_stream_binary,
    write_stream_text,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
