"""Two-species Vlasov-Fokker-Planck front stability toolkit."""

import json as _json
import os as _os

from ._core import *  # noqa: F401,F403
from ._core import __version__, _run_experiment


def run(experiment="pipeline", out="out", config=None, **overrides):
    """Run an experiment like the command-line tool.

    Keyword overrides use the configuration key names, with ``_`` in place of
    ``-``. Returns ``(manifest, exit_code)`` where ``manifest`` is the parsed
    manifest.json document.
    """
    overrides = dict(overrides, experiment=experiment, out=_os.fspath(out))
    text, code = _run_experiment(_os.fspath(config) if config else "", overrides)
    return _json.loads(text), code
