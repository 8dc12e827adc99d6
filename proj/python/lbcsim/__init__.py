"""Multi-machine power-system transient simulator with decentralized
excitation and governor control.

The heavy lifting lives in the compiled ``_core`` extension; this package
re-exports its public surface.
"""

from ._core import (  # noqa: F401
    Certificate,
    CctResult,
    ConfigError,
    ControlError,
    DivergenceError,
    Error,
    FaultOutcome,
    InfeasibleError,
    LyapunovReport,
    NetworkError,
    NumericsError,
    ScenarioConfig,
    ScenarioResult,
    Trajectory,
    Verdict,
    __version__,
    cct_search,
    config_certificate,
    desk_config,
    desk_pr_config,
    desk_vr_config,
    export_result,
    fault_scenario,
    load_config,
    parse_config,
    pr_scenario,
    run,
    save_config,
    smib_config,
    vr_scenario,
)

__all__ = [
    "Certificate",
    "CctResult",
    "ConfigError",
    "ControlError",
    "DivergenceError",
    "Error",
    "FaultOutcome",
    "InfeasibleError",
    "LyapunovReport",
    "NetworkError",
    "NumericsError",
    "ScenarioConfig",
    "ScenarioResult",
    "Trajectory",
    "Verdict",
    "__version__",
    "cct_search",
    "config_certificate",
    "desk_config",
    "desk_pr_config",
    "desk_vr_config",
    "export_result",
    "fault_scenario",
    "load_config",
    "parse_config",
    "pr_scenario",
    "run",
    "save_config",
    "smib_config",
    "vr_scenario",
]
