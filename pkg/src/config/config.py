import os
from dataclasses import dataclass, fields, replace
from typing import Callable, List, Optional, TypeVar

from dotenv import load_dotenv

from logger import logger  # Import the logger

# Load environment variables from .env file
load_dotenv()

T = TypeVar("T")


def _env(name: str, cast: Callable[[str], T], default: T) -> T:
    """Read NONNEG_<NAME> from the environment, falling back to default"""
    raw = os.getenv(f"NONNEG_{name.upper()}")
    if raw is None or raw == "":
        return default
    try:
        return cast(raw)
    except ValueError:
        logger.warning(f"Ignoring malformed NONNEG_{name.upper()}={raw!r}")
        return default


# Built-in defaults; any of them may be overridden through NONNEG_* variables.
_DEFAULTS = {
    # Polynomial
    "root_cluster_tol": 1e-7,
    "realness_tol": 1e-9,
    "coeff_truncation_tol": 1e-10,
    # Measure sign scan
    "scan_points": 10_000,
    "scan_decay_factor": 20.0,
    # Characteristic function
    "axis_tolerance": 1e-9,
    "contour_initial_points": 1024,
    "contour_max_points": 1 << 20,
    "cm_n_max": 8,
    "cm_tolerance": 1e-10,
    "max_derivative_order": 12,
    # Kernels
    "fft_points": 1 << 16,
    "horizon_factor": 40.0,
    "kernel_tolerance": 1e-6,
    # Simulation
    "burn_in_factor": 20.0,
    "tail_warning": 1e-4,
    "seed": 0,
    # CARMA region scans
    "region_step": 0.01,
    # Multivariate
    "max_dimension": 16,
    "condition_limit": 1e12,
    # Output
    "output_dir": "out",
}


@dataclass
class SDDEConfig:
    """Configuration class for the nonneg-sdde numerics"""

    # Polynomial configuration
    root_cluster_tol: Optional[float] = None
    realness_tol: Optional[float] = None
    coeff_truncation_tol: Optional[float] = None

    # Measure sign scan configuration
    scan_points: Optional[int] = None
    scan_decay_factor: Optional[float] = None

    # Characteristic function configuration
    axis_tolerance: Optional[float] = None
    contour_initial_points: Optional[int] = None
    contour_max_points: Optional[int] = None
    cm_n_max: Optional[int] = None
    cm_tolerance: Optional[float] = None
    max_derivative_order: Optional[int] = None

    # Kernel configuration
    fft_points: Optional[int] = None
    horizon_factor: Optional[float] = None
    kernel_tolerance: Optional[float] = None

    # Simulation configuration
    burn_in_factor: Optional[float] = None
    tail_warning: Optional[float] = None
    seed: Optional[int] = None

    # Region scan configuration
    region_step: Optional[float] = None

    # Multivariate configuration
    max_dimension: Optional[int] = None
    condition_limit: Optional[float] = None

    # Output configuration
    output_dir: Optional[str] = None

    def __post_init__(self):
        """Load environment variables if not provided"""
        for f in fields(self):
            if getattr(self, f.name) is None:
                default = _DEFAULTS[f.name]
                setattr(self, f.name, _env(f.name, type(default), default))

        logger.info("Configuration initialized.")

    def validate(self) -> bool:
        """Validate that every numeric setting is inside its documented range"""
        is_valid = not self.get_invalid_fields()
        if is_valid:
            logger.info("All configuration values are within range.")
        else:
            logger.warning(f"Invalid fields: {self.get_invalid_fields()}")
        return is_valid

    def get_invalid_fields(self) -> List[str]:
        """Get list of configuration fields outside their allowed range"""
        invalid = []
        positive = [
            "root_cluster_tol", "realness_tol", "coeff_truncation_tol",
            "scan_decay_factor", "axis_tolerance", "cm_tolerance",
            "horizon_factor", "kernel_tolerance", "burn_in_factor",
            "tail_warning", "region_step", "condition_limit",
        ]
        for name in positive:
            if not getattr(self, name) > 0:
                invalid.append(name)
        if self.scan_points < 2:
            invalid.append("scan_points")
        if self.contour_initial_points < 8:
            invalid.append("contour_initial_points")
        if self.contour_max_points < self.contour_initial_points:
            invalid.append("contour_max_points")
        if not 0 <= self.cm_n_max <= self.max_derivative_order:
            invalid.append("cm_n_max")
        if not 1 <= self.max_derivative_order <= 12:
            invalid.append("max_derivative_order")
        if self.fft_points < 2:
            invalid.append("fft_points")
        if self.seed < 0:
            invalid.append("seed")
        if not 2 <= self.max_dimension <= 64:
            invalid.append("max_dimension")
        return invalid


_config: Optional[SDDEConfig] = None


def get_config() -> SDDEConfig:
    """Process-wide configuration, created on first use"""
    global _config
    if _config is None:
        _config = SDDEConfig()
    return _config


def set_config(config: Optional[SDDEConfig] = None, **overrides) -> SDDEConfig:
    """Replace the process-wide configuration; keyword overrides win"""
    global _config
    base = config or get_config()
    _config = replace(base, **overrides) if overrides else base
    return _config
