# cli/models.py
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field

# Keys accepted in a run configuration file
CONFIG_KEYS = ('energy', 'mass', 'charge', 'a', 'H', 'u0', 'N')
PHYSICAL_KEYS = ('energy', 'mass', 'charge', 'a', 'H')

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERIC = 0, 2, 3


class RunConfig(BaseModel):
    """Fully resolved parameters of one run (settings < config file < flags)"""

    model_config = ConfigDict(extra='forbid')

    subcommand: str
    out: str
    format: Literal['csv', 'json'] = 'csv'
    units: Literal['natural', 'cgs'] = 'natural'
    threads: int = Field(default=1, ge=1)
    config_file: Optional[str] = None

    energy: Optional[float] = None
    mass: Optional[float] = None
    charge: Optional[float] = None
    a: Optional[float] = None
    H: Optional[float] = None
    u0: Optional[float] = None
    N: Optional[int] = None

    alpha: Optional[float] = None
    nu: Optional[float] = None
    wall_energy_ratio: Optional[float] = None

    options: Dict[str, Any] = Field(default_factory=dict)

    @property
    def physical(self) -> bool:
        return all(getattr(self, key) is not None for key in PHYSICAL_KEYS)


class Manifest(BaseModel):
    """manifest.json; only wall_clock_seconds differs between identical runs"""

    model_config = ConfigDict(extra='forbid')

    schema_version: int
    subcommand: str
    status: Literal['ok', 'error']
    exit_code: int
    error: Optional[str] = None
    error_type: Optional[str] = None
    config: Optional[Dict[str, Any]] = None
    files: List[str] = Field(default_factory=list)
    versions: Dict[str, str] = Field(default_factory=dict)
    wall_clock_seconds: float = 0.0


@dataclass
class Table:
    """Rows for one data file, written as CSV or as a JSON list of records"""

    name: str
    columns: Sequence[str]
    rows: List[tuple] = field(default_factory=list)


@dataclass
class Document:
    """Nested payload always written as JSON"""

    name: str
    payload: Dict[str, Any]


@dataclass
class RunResult:
    artifacts: List[Any] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
