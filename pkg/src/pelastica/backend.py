"""Kernel backend selection.

The hot inner-loop kernels exist twice: a numpy reference
(``_kernels_py``) and an optional compiled extension (``_kernels_c``).
They agree bitwise.  Selection happens once at import:

* ``PELASTICA_KERNELS=py``    -- force the numpy reference,
* ``PELASTICA_KERNELS=c``     -- require the compiled extension,
* unset or ``auto``           -- compiled if available, else numpy.
"""

import os

from . import _kernels_py

_choice = os.environ.get("PELASTICA_KERNELS", "auto").lower()

if _choice in ("auto", "c"):
    try:
        from . import _kernels_c as _impl
        BACKEND = "c"
    except ImportError:
        if _choice == "c":
            raise
        _impl = _kernels_py
        BACKEND = "py"
elif _choice == "py":
    _impl = _kernels_py
    BACKEND = "py"
else:
    raise ValueError(
        f"PELASTICA_KERNELS must be 'auto', 'py' or 'c', got {_choice!r}")

d1 = _impl.d1
d2 = _impl.d2
d1s = _impl.d1s
d2s = _impl.d2s
rowdot = _impl.rowdot
speeds = _impl.speeds
curvature = _impl.curvature
catmull_rom = _impl.catmull_rom
invert_monotone = _impl.invert_monotone
