"""Run configuration shared by every command.

Values resolve from lowest to highest priority: field defaults, the YAML
file given with ``--config``, ``MOTIF_CONTROVERSY_*`` environment variables
(a ``.env`` file is loaded first), then command-line flags.
"""
from dataclasses import dataclass
from dataclasses import fields
from pathlib import Path
from typing import Any
from typing import Dict
from typing import Iterable
from typing import Optional

import yaml

ENV_PREFIX = "MOTIF_CONTROVERSY"
DEFAULT_SEED = 42
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass(frozen=True)
class Config:
    """Every setting a command may read."""

    threads: Optional[Path] = None
    follows: Optional[Path] = None
    model: Optional[Path] = None
    out: Path = Path("out")
    params: Optional[Path] = None
    k: int = 2
    mask: str = "all"
    rounds: int = 100
    folds: int = 5
    seed: int = DEFAULT_SEED
    strict: bool = False
    jobs: int = -1
    protocol: str = "cv"
    log_level: str = "WARNING"

    @classmethod
    def from_options(cls, **options: Any) -> "Config":
        """Build from parsed click options, ignoring unrelated ones.

        Options left unset (``None``) keep the field default.

        Args:
            options: Keyword arguments of a command.

        Returns:
            The configuration.
        """
        known = {f.name for f in fields(cls)}
        values = {k: v for k, v in options.items() if k in known and v is not None}
        return cls(**values)


def read_config_file(path: Path) -> Dict[str, Any]:
    """Flat option values from a YAML file.

    Keys use option names, dashes or underscores alike (``log-level`` or
    ``log_level``).

    Args:
        path: YAML document holding a mapping.

    Returns:
        Option name to value.

    Raises:
        ValueError: Not YAML, not a mapping, or an unknown key.
    """
    try:
        with path.open(encoding="utf-8") as stream:
            data = yaml.safe_load(stream) or {}
    except yaml.YAMLError as err:
        raise ValueError(f"{path}: unreadable configuration: {err}") from err
    if not isinstance(data, dict):
        raise ValueError(f"{path}: configuration must be a mapping")
    values = {str(k).replace("-", "_"): v for k, v in data.items()}
    known = {f.name for f in fields(Config)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ValueError(f"{path}: unknown configuration key(s) {unknown}")
    return values


def default_map(values: Dict[str, Any], commands: Iterable[str]) -> Dict[str, Any]:
    """Click ``default_map`` giving every subcommand the same values.

    Args:
        values: Flat option values.
        commands: Subcommand names.

    Returns:
        The nested map; options a command lacks are ignored by click.
    """
    return {name: dict(values) for name in commands}
