# cli/commands.py
import logging
import logging.config
import time
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import click
from threadpoolctl import threadpool_limits

from eresonance import settings
from core.exceptions import DomainError, EngineError, NoBounceError, NumericError
from .models import EXIT_DOMAIN, EXIT_NUMERIC, EXIT_OK, Manifest
from .reports import BUILDERS
from .services import (
    attach_log_file, detach_log_file, resolve_config, versions, write_artifacts, write_manifest,
)

logger = logging.getLogger('eresonance.cli')

COMMON_FLAGS = ('config_file', 'out', 'format', 'units', 'threads', 'energy', 'mass', 'charge',
                'a', 'H', 'u0', 'N', 'alpha', 'nu')


def _common(command):
    """Options shared by every subcommand"""
    options = [
        click.option('--config', 'config_file', type=click.Path(dir_okay=False),
                     help='key = value run configuration file'),
        click.option('--out', default='output', show_default=True, type=click.Path(file_okay=False),
                     help='Output directory'),
        click.option('--format', 'format', type=click.Choice(['csv', 'json']), default=None),
        click.option('--units', type=click.Choice(['natural', 'cgs']), default=None),
        click.option('--threads', type=int, default=None, help='Worker cap (ER_THREADS)'),
        click.option('--energy', type=float, help='|E|'),
        click.option('--mass', type=float),
        click.option('--charge', type=float, help='|e|'),
        click.option('--a', 'a', type=float, help='Wall half-width'),
        click.option('--H', 'H', type=float, help='Magnetic field'),
        click.option('--u0', type=float, help='Wall strength (u0/|E| without physical inputs)'),
        click.option('--N', 'N', type=int, help='Wall exponent'),
        click.option('--alpha', type=float, help='a/L, overrides the physical inputs'),
        click.option('--nu', type=float, help='2|E|/hbar omega_c, overrides the physical inputs'),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _split(kwargs: Dict[str, Any]):
    flags = {name: kwargs.pop(name) for name in COMMON_FLAGS}
    return flags, kwargs


def run(subcommand: str, flags: Dict[str, Any], options: Dict[str, Any]) -> int:
    """Resolve the configuration, build the data products and write them with a manifest"""
    start = time.perf_counter()
    out = Path(flags['out'])
    out.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(schema_version=settings.MANIFEST_SCHEMA_VERSION, subcommand=subcommand,
                        status='ok', exit_code=EXIT_OK)
    manifest.versions = versions()
    handler = None
    try:
        handler = attach_log_file(out)
        config = resolve_config(subcommand, flags, options)
        manifest.config = config.model_dump()
        logger.info(f"Running {subcommand} at alpha={config.alpha:.6g}, nu={config.nu:.6g}")
        with threadpool_limits(limits=config.threads):
            result = BUILDERS[subcommand](config)
        manifest.files = write_artifacts(out, result.artifacts, config.format)
        for key, value in result.summary.items():
            click.echo(f"{key} = {value}")

    except (DomainError, NoBounceError) as e:
        manifest.status, manifest.exit_code = 'error', EXIT_DOMAIN
        manifest.error, manifest.error_type = str(e), type(e).__name__
        logger.error(f"{subcommand} rejected: {e}")
        click.echo(f"error: {e}", err=True)

    except NumericError as e:
        manifest.status, manifest.exit_code = 'error', EXIT_NUMERIC
        manifest.error, manifest.error_type = str(e), type(e).__name__
        logger.error(f"{subcommand} did not converge: {e} (history {e.history[-5:]})")
        click.echo(f"error: {e}", err=True)

    except EngineError as e:
        manifest.status, manifest.exit_code = 'error', EXIT_DOMAIN
        manifest.error, manifest.error_type = str(e), type(e).__name__
        click.echo(f"error: {e}", err=True)

    except Exception as e:
        manifest.status, manifest.exit_code = 'error', 1
        manifest.error, manifest.error_type = str(e), type(e).__name__
        raise

    finally:
        manifest.wall_clock_seconds = time.perf_counter() - start
        write_manifest(out, manifest)
        detach_log_file(handler)
    return manifest.exit_code


@click.group()
def main():
    """Euclidean-resonance magnetotunneling engine"""


@main.command()
@_common
@click.option('--tol', type=float, default=None, help='Root tolerance')
def resonance(**kwargs):
    """alpha_R, Delta x/a, the near-resonance coefficient and H_R"""
    flags, options = _split(kwargs)
    return run('resonance', flags, options)


@main.command()
@_common
@click.option('--alphas', default=None, help='Comma-separated alpha values')
@click.option('--alpha-min', type=float, default=None)
@click.option('--alpha-max', type=float, default=None)
@click.option('--points', type=int, default=None)
@click.option('--kappa', type=float, default=None, help='Hold alpha nu fixed (H varies)')
def action(**kwargs):
    """Decay exponent per period over alpha"""
    flags, options = _split(kwargs)
    return run('action', flags, options)


@main.command()
@_common
@click.option('--periods', type=int, default=None)
@click.option('--points', type=int, default=None, help='Samples per period')
def profile(**kwargs):
    """|psi(x, 0)| along the axis with region shifts"""
    flags, options = _split(kwargs)
    return run('profile', flags, options)


@main.command()
@_common
@click.option('--periods', type=int, default=None)
@click.option('--points', type=int, default=None)
def regions(**kwargs):
    """Boundary curves of the reflectionless regions"""
    flags, options = _split(kwargs)
    return run('regions', flags, options)


@main.command()
@_common
@click.option('--source', type=click.Choice(['semiclassical', 'oracle']), default=None)
@click.option('--nx', type=int, default=None)
@click.option('--ny', type=int, default=None)
@click.option('--loop-half-width', type=float, default=None)
def field(**kwargs):
    """Grid amplitudes, Q and currents; vortex loops for oracle fields"""
    flags, options = _split(kwargs)
    return run('field', flags, options)


@main.command()
@_common
@click.option('--samples', type=int, default=None, help='Samples per half period')
def bounce(**kwargs):
    """Imaginary-time bounce trajectory and action"""
    flags, options = _split(kwargs)
    return run('bounce', flags, options)


@main.command()
@_common
@click.option('--policy', type=click.Choice(['fixed-count', 'fixed-spacing']), default=None)
@click.option('--nx', type=int, default=None)
@click.option('--ny', type=int, default=None)
@click.option('--self-consistent', is_flag=True, default=False)
@click.option('--loop-half-width', type=float, default=None)
def oracle(**kwargs):
    """Direct eigensolve and the comparison report"""
    flags, options = _split(kwargs)
    return run('oracle', flags, options)


@main.command()
@_common
@click.option('--depth', type=float, default=None, help='Well depth in |E| (default 2 alpha^2)')
@click.option('--periods', type=int, default=None)
@click.option('--points', type=int, default=None)
@click.option('--window', type=float, default=None, help='Half-width of the level window around -1')
@click.option('--tolerance', type=float, default=None, help='Coincidence neighbourhood of -1')
@click.option('--sweep-depth', type=float, default=None, help='Sweep well depths up to this value')
@click.option('--sweep-steps', type=int, default=None)
@click.option('--oracle', 'oracle', is_flag=True, default=False, help='Also extract U from an eigensolve')
def effpot(**kwargs):
    """Effective potential profiles and levels"""
    flags, options = _split(kwargs)
    return run('effpot', flags, options)


@main.command()
@_common
@click.option('--alphas', default=None, help='Comma-separated alpha values')
@click.option('--alpha-min', type=float, default=None)
@click.option('--alpha-max', type=float, default=None)
@click.option('--points', type=int, default=None)
@click.option('--policy', type=click.Choice(['fixed-count', 'fixed-spacing']), default=None)
@click.option('--broker', default=None, help='Celery broker URL for distributed points')
def scan(**kwargs):
    """Measured against predicted suppression over alpha"""
    flags, options = _split(kwargs)
    return run('scan', flags, options)


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; returns 0, 2 (domain/validation) or 3 (non-convergence)"""
    logging.config.dictConfig(settings.LOGGING)
    try:
        code = main.main(args=list(argv) if argv is not None else None, standalone_mode=False)
    except click.exceptions.UsageError as e:
        e.show()
        return EXIT_DOMAIN
    except click.exceptions.Abort:
        click.echo('Aborted', err=True)
        return 1
    return EXIT_OK if code is None else int(code)
