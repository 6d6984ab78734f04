# config/settings.py
"""
Application configuration settings.
"""
from pydantic_settings import BaseSettings, SettingsConfigDict


class SolverSettings(BaseSettings):
    """LP solver configuration settings."""

    model_config = SettingsConfigDict(env_file=".env", env_prefix="SOLVER_", extra="ignore")

    # auto | simplex | highs
    backend: str = "auto"
    simplex_max_size: int = 400
    highs_method: str = "highs-ds"

    eps_feas: float = 1e-7
    eps_gap: float = 1e-7
    eps_cs: float = 1e-6
    pivot_tol: float = 1e-9

    bland_threshold: int = 50
    refactor_every: int = 50
    max_iterations: int = 50_000
    check_certificates: bool = True


class MaskingSettings(BaseSettings):
    """Masking key configuration settings."""

    model_config = SettingsConfigDict(env_file=".env", env_prefix="MASK_", extra="ignore")

    # diagonal | general
    mmatrix_mode: str = "diagonal"
    # dense | sparse | identity
    key_kind: str = "dense"
    extra_rows_d: int = 0
    extra_rows_e: int = 0
    permute: bool = False
    signed_xi: bool = False

    key_scale: float = 1.0
    eta_scale: float = 1.0
    max_resamples: int = 5
    rank_tol: float = 1e-10
    mmatrix_check_tol: float = 1e-9

    privacy_threshold: int = 2
    general_mode_attempts: int = 5


class NetworkSettings(BaseSettings):
    """Network model and instance generator settings."""

    model_config = SettingsConfigDict(env_file=".env", env_prefix="NET_", extra="ignore")

    max_breakpoints: int = 20

    capacity_low: int = 10
    capacity_high: int = 40
    products_low: int = 2
    products_high: int = 6
    fare_low: float = 80.0
    fare_high: float = 240.0
    interline_fraction: float = 0.5
    dirichlet_alpha: float = 1.0


class SimulationSettings(BaseSettings):
    """Booking simulation settings."""

    model_config = SettingsConfigDict(env_file=".env", env_prefix="SIM_", extra="ignore")

    horizon: int = 1000
    load_factor: float = 1.2
    segments: int = 5
    replications: int = 100
    workers: int = 1
    booking_limits: bool = True
    capacity_offset: float = 0.5


class BoardSettings(BaseSettings):
    """Message board (HTTP transport) settings."""

    model_config = SettingsConfigDict(env_file=".env", env_prefix="BOARD_", extra="ignore")

    title: str = "Bid-Price Message Board"
    description: str = "Relay for masked party payloads exchanged during the bid-price protocol"
    version: str = "1.0.0"
    host: str = "127.0.0.1"
    port: int = 8765
    debug: bool = False

    # Fault injection
    min_latency: float = 0.0
    max_latency: float = 0.0
    failure_rate: float = 0.0

    poll_interval: float = 0.05
    timeout: float = 30.0


# Global settings instances
solver_settings = SolverSettings()
masking_settings = MaskingSettings()
network_settings = NetworkSettings()
simulation_settings = SimulationSettings()
board_settings = BoardSettings()
