"""Backend selection for the hot kernels.

The compiled ``_core`` extension is used when it imports; otherwise, or when
the environment variable ``FAILRATE_PURE_PYTHON`` is set to a non-empty
value, the numpy versions in ``_fallback`` are used. Both expose
``binom_thresholds`` and ``binom_compound_pmf`` with identical signatures.
"""

import os

from . import _fallback

if os.environ.get("FAILRATE_PURE_PYTHON"):
    _impl = _fallback
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _fallback

BACKEND = "cython" if _impl is not _fallback else "python"

binom_thresholds = _impl.binom_thresholds
binom_compound_pmf = _impl.binom_compound_pmf
