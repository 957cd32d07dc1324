TRACE_FILENAME = "trace.csv"
FIT_FILENAME = "fit.csv"

TRACE_COLUMNS = (
    "time",
    "time_tau",
    "fx",
    "fy",
    "fz",
    "trace",
    "signal_noiseless",
    "signal_noisy",
    "envelope",
)

FIT_COLUMNS = (
    "one_over_e_time",
    "one_over_e_time_tau",
    "winning_model",
    "residual_ratio",
    "gaussian_timescale",
    "gaussian_residual_rms",
    "gaussian_reliable",
    "exponential_timescale",
    "exponential_residual_rms",
    "exponential_reliable",
    "t_revival",
    "t_revival_tau",
    "revival_amplitude_ratio",
    "revival_collapse_time",
    "revival_collapse_time_tau",
    "revival_at_boundary",
    "warnings",
)

SCAN_TAU_COLUMNS = (
    "scattering_time",
    "collapse_time",
    "collapse_time_tau",
    "gaussian_collapse_time",
    "gaussian_collapse_time_tau",
    "revival_time",
    "revival_time_tau",
    "revival_collapse_time",
    "revival_collapse_time_tau",
    "error",
)

SCAN_ANGLE_COLUMNS = (
    "angle_deg",
    "decay_time",
    "decay_time_tau",
    "winning_model",
    "residual_ratio",
    "error",
)

SCAN_CRITICAL_COLUMNS = (
    "scattering_time",
    "decay_time",
    "decay_time_tau",
    "decay_time_inhomogeneous",
    "decay_time_inhomogeneous_tau",
    "larmor_ratio",
    "rwa_deviation",
    "rwa_envelope_deviation",
    "error",
)
