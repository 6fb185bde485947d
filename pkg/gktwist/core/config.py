from functools import lru_cache
from pydantic_settings import BaseSettings

from gktwist.core.errors import ConfigError


class Settings(BaseSettings):
    log_level: str = "INFO"

    # Tolerance ladder
    tol_structure: float = 1e-12  # J^2 = -Id and skewness of fiber structures
    tol_algebraic: float = 1e-9  # algebraic identities on sampled points
    tol_definite: float = 1e-9  # smallest eigenvalue of a positive form
    tol_flat_nijenhuis: float = 1e-7
    tol_nonflat_floor: float = 1e-4  # smallest component that counts as curvature
    tol_closed_form: float = 1e-6  # closed form vs brute force
    tol_bracket_identity: float = 1e-7
    tol_flatness: float = 1e-9
    tol_fd: float = 1e-6  # exact vs central difference, relative
    tol_tensoriality: float = 1e-8
    tol_bihermitian: float = 1e-10
    tol_jpm_nijenhuis: float = 1e-8
    tol_witness_floor: float = 1e-3
    tol_golden: float = 1e-6
    tol_hyperboloid: float = 1e-9  # accepted drift off x1^2 - x2^2 - x3^2 = 1

    # Sample counts
    fiber_samples: int = 1000
    gks_samples: int = 100
    twistor_points: int = 30
    invariant_points: int = 50
    identity_vectors: int = 20
    plus_sheet_scan: int = 50
    grid_size: int = 9
    fd_step: float = 1e-5

    # Runs
    record_timing: bool = True

    model_config = {"env_prefix": "GKTWIST_", "env_file": ".env", "env_file_encoding": "utf-8"}


@lru_cache()
def get_settings() -> Settings:
    return Settings()


def tolerance_keys() -> list[str]:
    """Names accepted by config `tolerances` blocks and `--tol-override`."""
    return sorted(
        name.removeprefix("tol_") for name in Settings.model_fields if name.startswith("tol_")
    )


def resolve_tolerances(*overrides: dict[str, float]) -> dict[str, float]:
    """Settings defaults, then each override layer in order.

    Raises:
        ConfigError: for a key that names no tolerance.
    """
    settings = get_settings()
    resolved = {key: float(getattr(settings, f"tol_{key}")) for key in tolerance_keys()}
    for layer in overrides:
        for key, value in layer.items():
            if key not in resolved:
                raise ConfigError(f"tolerances.{key}: unknown tolerance (expected one of {', '.join(resolved)})")
            if not value > 0:
                raise ConfigError(f"tolerances.{key}: must be positive, got {value}")
            resolved[key] = float(value)
    return resolved
