"""Select the compiled RK4 kernel when available, else the Python fallback.

Set ``CHARMAT_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _rk4py

if os.environ.get("CHARMAT_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _rk4core as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
rk4_linear = _compiled.rk4_linear if _compiled is not None else _rk4py.rk4_linear
rk4_linear_py = _rk4py.rk4_linear
rk4_linear_compiled = _compiled.rk4_linear if _compiled is not None else None
