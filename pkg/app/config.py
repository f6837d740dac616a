"""Configuration management for qmarginal.

Numerical tolerances and solver settings are read from environment
variables (optionally from a .env file) and can be overridden on the
command line.
"""

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional


def _env_float(name: str, default: float) -> float:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"Invalid value for environment variable {name}: {raw!r}")


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"Invalid value for environment variable {name}: {raw!r}")


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").lower() in ("true", "1", "yes")


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances used by the linear-algebra layer."""

    herm: float = 1e-9
    psd: float = 1e-9
    trace: float = 1e-9
    eig_floor: float = 1e-12  # eigenvalues below contribute 0 to entropies
    rank: float = 1e-10
    margin: float = 1e-8

    @classmethod
    def from_env(cls) -> "Tolerances":
        """Load tolerances from environment variables."""
        tol = _env_float("QMARGINAL_TOL", 1e-9)
        return cls(herm=tol, psd=tol, trace=tol)

    def with_overall(self, tol: float) -> "Tolerances":
        """Copy with herm/psd/trace tolerances replaced."""
        return Tolerances(
            herm=tol,
            psd=tol,
            trace=tol,
            eig_floor=self.eig_floor,
            rank=self.rank,
            margin=self.margin,
        )


@dataclass(frozen=True)
class SolverConfig:
    """Cone-program solver configuration."""

    solver: str = "CLARABEL"
    fallback: Optional[str] = "SCS"
    tol: float = 1e-8
    feas_tol: float = 1e-7  # verdict threshold around zero
    dim_cap: int = 128
    symmetric_reduction: bool = False
    sep_level: int = 2
    max_iters: int = 200_000

    @classmethod
    def from_env(cls) -> "SolverConfig":
        """Load solver config from environment variables."""
        dim_cap = _env_int("QMARGINAL_DIM_CAP", 128)
        if dim_cap < 1:
            raise ValueError(f"QMARGINAL_DIM_CAP must be positive, got {dim_cap}")
        return cls(
            solver=os.environ.get("QMARGINAL_SOLVER", "CLARABEL").upper(),
            tol=_env_float("QMARGINAL_SOLVER_TOL", 1e-8),
            dim_cap=dim_cap,
            symmetric_reduction=_env_flag("QMARGINAL_SYMMETRIC_REDUCTION"),
        )


@dataclass
class AppConfig:
    """Main application configuration."""

    tolerances: Tolerances = field(default_factory=Tolerances)
    solver: SolverConfig = field(default_factory=SolverConfig)
    seed: int = 0
    output_dir: Path = Path("out")
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "AppConfig":
        """Load all configuration from environment variables."""
        return cls(
            tolerances=Tolerances.from_env(),
            solver=SolverConfig.from_env(),
            seed=_env_int("QMARGINAL_SEED", 0),
            output_dir=Path(os.environ.get("OUTPUT_DIR", "out")),
            log_level=os.environ.get("LOG_LEVEL", "INFO"),
        )


DEFAULT_TOLERANCES = Tolerances()
DEFAULT_SOLVER = SolverConfig()


def load_config() -> AppConfig:
    """Load configuration from environment.

    This function loads .env file if it exists, then creates AppConfig.
    """
    from dotenv import load_dotenv

    env_path = Path.cwd() / ".env"
    if env_path.exists():
        load_dotenv(env_path)

    return AppConfig.from_env()
