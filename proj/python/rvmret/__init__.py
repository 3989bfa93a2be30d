"""Retarded relativistic Vlasov-Maxwell solver: Python bindings.

Commands (simulate, diagnose, verify_lemma4, verify_lemma_a, probe, report) return the
exit code as the first tuple element, using the same codes as the command line tool.
"""

import os as _os

# uninstalled build tree: the extension lives in <build>/python/rvmret
_ext = _os.environ.get("RVMRET_EXT_DIR")
if _ext and _ext not in __path__:
    __path__.append(_ext)

from ._rvmret import *  # noqa: E402,F401,F403
from ._rvmret import Error, read_table  # noqa: E402


def load_run(run_dir):
    """Axes and values of the final field table of a run directory."""
    return read_table(final_table_path(run_dir))  # noqa: F405
