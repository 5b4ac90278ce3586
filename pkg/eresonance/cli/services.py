# cli/services.py
import csv
import json
import math
import logging
import platform
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import scipy
from decouple import Config, RepositoryEnv
from pydantic import ValidationError

from eresonance import settings
from core.exceptions import ConfigError
from core.models import Dimensionless, PhysicalSetup, UnitSystem
from core.services import derive_dimensionless, reduced
from .models import CONFIG_KEYS, Document, Manifest, RunConfig, Table

logger = logging.getLogger('eresonance.cli')


def _strip_comment(value: str) -> str:
    return value.split('#', 1)[0].strip()


def read_config_file(path: str) -> Dict[str, Any]:
    """key = value pairs from a run configuration file; unknown keys are rejected"""
    if not Path(path).is_file():
        raise ConfigError(f"no such file '{path}'", field='config')
    repository = RepositoryEnv(path)
    repository.data = {key: _strip_comment(value) for key, value in repository.data.items()}
    unknown = sorted(set(repository.data) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown keys {', '.join(unknown)}; allowed: {', '.join(CONFIG_KEYS)}",
                          field='config')

    source = Config(repository)
    values = {}
    for key in CONFIG_KEYS:
        if key not in repository.data:
            continue
        try:
            values[key] = source(key, cast=int if key == 'N' else float)
        except ValueError as e:
            raise ConfigError(f"invalid value {repository.data[key]!r}: {e}", field=key)
    logger.debug(f"Read {len(values)} entries from {path}")
    return values


def physical_setup(config: RunConfig) -> Optional[PhysicalSetup]:
    if not config.physical:
        return None
    units = UnitSystem.named(config.units)
    return PhysicalSetup(
        energy=config.energy, mass=config.mass, charge=config.charge, a=config.a, H=config.H,
        u0=config.u0, N=config.N, hbar=units.hbar, c=units.c,
    )


def resolve_config(subcommand: str, flags: Dict[str, Any],
                   options: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Merge settings defaults < config file < flags into a RunConfig

    Physical inputs yield alpha and nu unless --alpha/--nu are given; in the
    dimensionless route u0 is read as u0/|E|.
    """
    flags = {key: value for key, value in flags.items() if value is not None}
    values = {}
    if flags.get('config_file'):
        values.update(read_config_file(flags['config_file']))
    values.update(flags)
    values.setdefault('threads', settings.ER_THREADS)
    values.setdefault('N', settings.ER_DEFAULT_N)
    try:
        config = RunConfig(subcommand=subcommand, options=dict(options or {}), **values)
    except ValidationError as e:
        raise ConfigError(_validation_message(e), field='config')

    alpha, nu = config.alpha, config.nu
    if config.physical:
        if config.u0 is None:
            config.u0 = settings.ER_DEFAULT_U0 * config.energy
        dimensionless = derive_dimensionless(physical_setup(config))
        alpha = dimensionless.alpha if alpha is None else alpha
        nu = dimensionless.nu if nu is None else nu
        ratio = dimensionless.wall_energy_ratio
    else:
        ratio = settings.ER_DEFAULT_U0 if config.u0 is None else config.u0
    config.alpha = settings.ER_DEFAULT_ALPHA if alpha is None else alpha
    config.nu = settings.ER_DEFAULT_NU if nu is None else nu
    config.wall_energy_ratio = ratio
    return config


def _validation_message(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = '.'.join(str(part) for part in item['loc'])
        parts.append(f"{location}: {item['msg']}")
    return '; '.join(parts)


def dimensionless(config: RunConfig) -> Dimensionless:
    return reduced(config.alpha, config.nu, config.wall_energy_ratio, config.N)


# Output

def format_cell(value) -> str:
    """CSV text of one cell: 17 significant digits, empty for masked"""
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{settings.ER_CSV_DIGITS}g}"
    return str(value)


def plain(value):
    """JSON-safe copy: numpy scalars and arrays unwrapped, NaN as null"""
    if isinstance(value, dict):
        return {str(key): plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return [plain(item) for item in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _dump_json(payload) -> str:
    return json.dumps(plain(payload), sort_keys=True, indent=2, allow_nan=False) + '\n'


def write_csv(path: Path, columns: Sequence[str], rows) -> None:
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(cell) for cell in row])


def write_json(path: Path, payload) -> None:
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        handle.write(_dump_json(payload))


def write_artifacts(out: Path, artifacts: Sequence, fmt: str) -> List[str]:
    """Write tables and documents into `out`; returns the file names"""
    names = []
    for artifact in artifacts:
        if isinstance(artifact, Table):
            if fmt == 'csv':
                name = f"{artifact.name}.csv"
                write_csv(out / name, artifact.columns, artifact.rows)
            else:
                name = f"{artifact.name}.json"
                records = [dict(zip(artifact.columns, row)) for row in artifact.rows]
                write_json(out / name, records)
        elif isinstance(artifact, Document):
            name = f"{artifact.name}.json"
            write_json(out / name, artifact.payload)
        else:
            raise TypeError(f"cannot write {type(artifact).__name__}")
        names.append(name)
        logger.debug(f"Wrote {out / name}")
    return sorted(names)


def versions() -> Dict[str, str]:
    return {
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
    }


def write_manifest(out: Path, manifest: Manifest) -> None:
    write_json(out / 'manifest.json', manifest.model_dump())


def attach_log_file(out: Path) -> Optional[logging.Handler]:
    """File handler inside the output directory when ER_LOG_FILE names a bare file"""
    name = settings.ER_LOG_FILE
    if not name:
        return None
    if Path(name).name != name:
        raise ConfigError(f"must be a bare file name, got '{name}'", field='ER_LOG_FILE')
    handler = logging.FileHandler(out / name, encoding='utf-8')
    handler.setLevel(settings.ER_LOG_LEVEL)
    handler.setFormatter(logging.Formatter(settings.LOGGING['formatters']['plain']['format']))
    logging.getLogger('eresonance').addHandler(handler)
    return handler


def detach_log_file(handler: Optional[logging.Handler]) -> None:
    if handler is not None:
        logging.getLogger('eresonance').removeHandler(handler)
        handler.close()
