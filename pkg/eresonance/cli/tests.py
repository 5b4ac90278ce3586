# cli/tests.py
import io
import json
import os
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path
from unittest import mock

from pydantic import ValidationError

from core.exceptions import ConfigError, NumericError
from .commands import dispatch
from .models import RunConfig
from .services import format_cell, read_config_file, resolve_config


def run_cli(*argv):
    stdout, stderr = io.StringIO(), io.StringIO()
    with redirect_stdout(stdout), redirect_stderr(stderr):
        code = dispatch(list(argv))
    return code, stdout.getvalue(), stderr.getvalue()


def header(path: Path) -> str:
    with open(path, encoding='utf-8') as handle:
        return handle.readline().rstrip('\n')


def manifest(out: Path) -> dict:
    with open(out / 'manifest.json', encoding='utf-8') as handle:
        return json.load(handle)


class CliTestCase(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)
        self.out = self.root / 'out'

    def tearDown(self):
        self.tmp.cleanup()

    def write_config(self, text: str) -> str:
        path = self.root / 'run.ini'
        path.write_text(text, encoding='utf-8')
        return str(path)


class ResonanceCommandTest(CliTestCase):

    def test_alpha_R_line(self):
        code, stdout, _ = run_cli('resonance', '--tol', '1e-10', '--out', str(self.out))
        self.assertEqual(code, 0)
        line = next(item for item in stdout.splitlines() if item.startswith('alpha_R = '))
        self.assertEqual(f"{float(line.split('=')[1]):.2f}", '1.66')
        self.assertEqual(header(self.out / 'resonance.csv'),
                         'alpha_R,delta_x_over_a,coefficient,coefficient_closed_form,'
                         'coefficient_finite_difference,H_R')

    def test_config_file_gives_resonance_field(self):
        path = self.write_config(
            '# electron-like inputs\n'
            'energy = 1.0  # |E|\n'
            'mass = 1.0\n'
            'charge = 1.0\n'
            'a = 2.0\n'
            'H = 0.5\n'
            'N = 4\n'
        )
        code, stdout, _ = run_cli('resonance', '--config', path, '--out', str(self.out))
        self.assertEqual(code, 0)
        self.assertIn('H_R = ', stdout)
        recorded = manifest(self.out)['config']
        self.assertEqual(recorded['a'], 2.0)
        self.assertEqual(recorded['config_file'], path)

    def test_unknown_config_key(self):
        path = self.write_config('energy = 1.0\nwidth = 3\n')
        code, _, stderr = run_cli('resonance', '--config', path, '--out', str(self.out))
        self.assertEqual(code, 2)
        self.assertIn('width', stderr)
        self.assertEqual(manifest(self.out)['error_type'], 'ConfigError')


class ActionCommandTest(CliTestCase):

    def test_zero_alpha_exits_with_domain_error(self):
        code, stdout, stderr = run_cli('action', '--alpha', '0', '--out', str(self.out))
        self.assertEqual(code, 2)
        self.assertIn('alpha', stderr)
        self.assertEqual(stdout, '')
        record = manifest(self.out)
        self.assertEqual(record['status'], 'error')
        self.assertEqual(record['exit_code'], 2)
        self.assertEqual(record['files'], [])

    def test_byte_identical_reruns(self):
        outputs = []
        for name in ('first', 'second'):
            out = self.root / name
            code, _, _ = run_cli('action', '--alpha-min', '0.2', '--alpha-max', '2.0', '--points', '10',
                                 '--threads', '1', '--out', str(out))
            self.assertEqual(code, 0)
            outputs.append(out)
        first, second = outputs
        self.assertEqual((first / 'action.csv').read_bytes(), (second / 'action.csv').read_bytes())
        a, b = manifest(first), manifest(second)
        for record in (a, b):
            record.pop('wall_clock_seconds')
            record['config'].pop('out')
        self.assertEqual(a, b)

    def test_csv_layout(self):
        run_cli('action', '--alphas', '0.5,1.0', '--nu', '4', '--out', str(self.out))
        raw = (self.out / 'action.csv').read_bytes()
        self.assertNotIn(b'\r', raw)
        lines = raw.decode('utf-8').splitlines()
        self.assertEqual(lines[0], 'alpha,nu,a_wkb,transverse,total,relative,suppression')
        self.assertEqual(len(lines), 3)
        self.assertTrue(lines[1].startswith('0.5,4,'))

    def test_json_format(self):
        code, _, _ = run_cli('action', '--alphas', '1.0', '--format', 'json', '--out', str(self.out))
        self.assertEqual(code, 0)
        with open(self.out / 'action.json', encoding='utf-8') as handle:
            records = json.load(handle)
        self.assertEqual(len(records), 1)
        self.assertEqual(sorted(records[0]), sorted(
            ['alpha', 'nu', 'a_wkb', 'transverse', 'total', 'relative', 'suppression']))

    def test_writes_only_inside_output_directory(self):
        run_cli('action', '--alpha', '1.0', '--out', str(self.out))
        self.assertEqual(sorted(os.listdir(self.root)), ['out'])
        self.assertEqual(sorted(os.listdir(self.out)), ['action.csv', 'manifest.json'])

    def test_unknown_flag(self):
        code, _, _ = run_cli('action', '--width', '3', '--out', str(self.out))
        self.assertEqual(code, 2)


class DataProductTest(CliTestCase):

    def test_profile_header(self):
        code, _, _ = run_cli('profile', '--periods', '2', '--points', '50', '--out', str(self.out))
        self.assertEqual(code, 0)
        self.assertEqual(header(self.out / 'profile.csv'), 'x,region,abs_psi,log_abs_psi,logarithmic')

    def test_regions_header(self):
        code, _, _ = run_cli('regions', '--periods', '2', '--points', '21', '--out', str(self.out))
        self.assertEqual(code, 0)
        self.assertEqual(header(self.out / 'regions.csv'), 'region,x,y')

    def test_field_files(self):
        code, _, _ = run_cli('field', '--nx', '40', '--ny', '20', '--out', str(self.out))
        self.assertEqual(code, 0)
        self.assertEqual(header(self.out / 'field.csv'), 'x,y,re_psi,im_psi,abs_psi,chi,Qx,Qy,region')
        self.assertEqual(header(self.out / 'current.csv'), 'x,y,jx,jy')
        self.assertEqual(manifest(self.out)['files'], ['current.csv', 'field.csv', 'vortices.json'])

    def test_bounce_files(self):
        code, _, _ = run_cli('bounce', '--u0', '1000', '--N', '8', '--out', str(self.out))
        self.assertEqual(code, 0)
        self.assertEqual(header(self.out / 'bounce.csv'), 'tau,eta,velocity')
        with open(self.out / 'bounce_action.json', encoding='utf-8') as handle:
            summary = json.load(handle)
        self.assertLess(summary['total_action'], summary['a_wkb'])

    def test_weak_wall_exits_with_domain_code(self):
        code, _, _ = run_cli('bounce', '--u0', '1e-8', '--out', str(self.out))
        self.assertEqual(code, 2)
        self.assertEqual(manifest(self.out)['error_type'], 'NoBounceError')

    def test_effpot_files(self):
        code, _, _ = run_cli('effpot', '--out', str(self.out))
        self.assertEqual(code, 0)
        self.assertEqual(header(self.out / 'potential.csv'), 'x,U,variant,masked')
        with open(self.out / 'levels.json', encoding='utf-8') as handle:
            levels = json.load(handle)
        self.assertEqual(levels['window'], [-1.5, -0.5])
        self.assertIn('coincident', levels['coincidence'])

    def test_oracle_self_consistent(self):
        code, _, stderr = run_cli('oracle', '--self-consistent', '--policy', 'fixed-spacing',
                                  '--out', str(self.out))
        self.assertEqual(code, 0, stderr)
        with open(self.out / 'eigen.json', encoding='utf-8') as handle:
            eigen = json.load(handle)
        self.assertAlmostEqual(eigen['eigenvalue'], -1.0, places=6)
        self.assertLess(eigen['problem']['target_energy'], -1.0)
        with open(self.out / 'report.json', encoding='utf-8') as handle:
            report = json.load(handle)
        self.assertIn('suppression', report['deferred'])

    def test_non_convergence_exit_code(self):
        with mock.patch('cli.reports.integrate_bounce', side_effect=NumericError('stalled', [1.0, 2.0])):
            code, _, stderr = run_cli('bounce', '--out', str(self.out))
        self.assertEqual(code, 3)
        self.assertIn('stalled', stderr)
        self.assertEqual(manifest(self.out)['exit_code'], 3)


class ConfigTest(CliTestCase):

    def test_inline_comments_stripped(self):
        path = self.write_config('energy = 2.5   # in erg\n# a comment line\nN = 6\n')
        self.assertEqual(read_config_file(path), {'energy': 2.5, 'N': 6})

    def test_bad_value(self):
        path = self.write_config('N = four\n')
        with self.assertRaises(ConfigError) as caught:
            read_config_file(path)
        self.assertEqual(caught.exception.field, 'N')

    def test_flags_override_file(self):
        path = self.write_config('energy = 1\nmass = 1\ncharge = 1\na = 2\nH = 0.5\n')
        config = resolve_config('action', {'config_file': path, 'out': 'x', 'a': 1.0}, {})
        self.assertEqual(config.a, 1.0)
        # L = sqrt(2 |E| / m) / omega_c = 2sqrt(2) at H = 0.5
        self.assertAlmostEqual(config.alpha, 1.0 / (2.0 * 2.0 ** 0.5))

    def test_dimensionless_flags_take_precedence(self):
        path = self.write_config('energy = 1\nmass = 1\ncharge = 1\na = 2\nH = 0.5\n')
        config = resolve_config('action', {'config_file': path, 'out': 'x', 'alpha': 1.3}, {})
        self.assertEqual(config.alpha, 1.3)

    def test_unknown_field_rejected_by_schema(self):
        with self.assertRaises(ValidationError):
            RunConfig(subcommand='action', out='x', width=3)

    def test_bad_thread_count(self):
        with self.assertRaises(ConfigError):
            resolve_config('action', {'out': 'x', 'threads': 0}, {})

    def test_cell_format(self):
        self.assertEqual(format_cell(0.1), '0.10000000000000001')
        self.assertEqual(format_cell(None), '')
        self.assertEqual(format_cell(3), '3')
        self.assertEqual(format_cell(True), '1')
