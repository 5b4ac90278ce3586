#!/usr/bin/env python
"""Command-line utility for the resonance engine."""
import os
import sys

APPS = ('core', 'hjsolver', 'bounce', 'field', 'oracle', 'effpot', 'cli')


def run_tests(labels):
    """Run the apps' tests.py modules, like `manage.py test [app ...]`"""
    import unittest

    base = os.path.dirname(os.path.abspath(__file__))
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    for label in labels or APPS:
        suite.addTests(loader.discover(os.path.join(base, label), pattern='tests.py', top_level_dir=base))
    result = unittest.TextTestRunner(verbosity=2).run(suite)
    return 0 if result.wasSuccessful() else 1


def main():
    """Run a subcommand or the test suite."""
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    argv = sys.argv[1:]
    if argv and argv[0] == 'test':
        sys.exit(run_tests(argv[1:]))
    try:
        from cli.commands import dispatch
    except ImportError as exc:
        raise ImportError(
            "Couldn't import the engine's dependencies. Are they installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    sys.exit(dispatch(argv))


if __name__ == '__main__':
    main()
