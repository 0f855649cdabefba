"""Backend selection for the hot quadrature kernels.

Two implementations of the same batched panel rule exist: a numba-compiled
one and a pure-numpy one.  The numpy path is authoritative for semantics;
the compiled path must agree with it to rounding (checked in the test
suite).  Selection happens once at import time:

  * if numba is importable and OSCIMAX_NO_NUMBA is unset/falsy -> compiled
  * otherwise -> numpy

Set OSCIMAX_NO_NUMBA=1 to force the numpy path.
"""

import os

_flag = os.environ.get("OSCIMAX_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag not in ("", "0", "false", "no")

HAS_NUMBA = False
if not NUMBA_DISABLED:
    try:
        import numba  # noqa: F401

        HAS_NUMBA = True
    except ImportError:
        HAS_NUMBA = False

USING_NUMBA = HAS_NUMBA and not NUMBA_DISABLED


def backend_name():
    return "numba" if USING_NUMBA else "numpy"
