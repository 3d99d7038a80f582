"""Select the compiled gradient kernel when available, else the numpy one.

Set ``NCHARDY_PURE=1`` in the environment to force the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "numpy"
grad_sum = _kernels_py.grad_sum
ext_sum = _kernels_py.ext_sum

if os.environ.get("NCHARDY_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        # numpy's vectorized arctan beats the scalar loop, so ext_sum stays numpy
        grad_sum = _ckernels.grad_sum
        BACKEND = "cython"
