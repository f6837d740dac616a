"""Run records for reproducibility.

Every JSON output carries the hashes of its inputs and configuration plus the
seed, so a rerun with the same record yields byte-identical output.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Iterable, Union

from app import __version__
from app.config import AppConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunRecord:
    """What a command was run on and with."""

    command: str
    input_hash: str
    config_hash: str
    seed: int
    app_version: str

    def to_json(self) -> dict:
        return asdict(self)


def compute_hash(data: Any) -> str:
    """SHA256 of ``data`` (strings as-is, anything else as canonical JSON), 16 hex chars."""
    if isinstance(data, str):
        content = data
    else:
        content = json.dumps(data, sort_keys=True, ensure_ascii=False, default=str)

    return hashlib.sha256(content.encode()).hexdigest()[:16]


def hash_inputs(paths: Iterable[Union[str, Path]]) -> str:
    """Hash of the concatenated input file contents, in the given order."""
    contents = []
    for path in paths:
        try:
            contents.append(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            logger.warning(f"Could not read {path} for hashing: {e}")
            contents.append(f"<unreadable:{path}>")
    return compute_hash(contents)


def config_fingerprint(config: AppConfig, extra: dict | None = None) -> dict:
    """Settings that can change a result; paths and log level are left out."""
    data = {
        "tolerances": asdict(config.tolerances),
        "solver": asdict(config.solver),
        "seed": config.seed,
    }
    if extra:
        data["extra"] = extra
    return data


def create_run_record(
    command: str,
    inputs: Iterable[Union[str, Path]],
    config: AppConfig,
    extra: dict | None = None,
) -> RunRecord:
    """Build the record for one CLI invocation.

    Args:
        command: Subcommand name
        inputs: Input files read by the command
        config: Effective configuration after CLI overrides
        extra: Command parameters that are not files (e.g. ``--free``)
    """
    return RunRecord(
        command=command,
        input_hash=hash_inputs(inputs),
        config_hash=compute_hash(config_fingerprint(config, extra)),
        seed=config.seed,
        app_version=__version__,
    )
