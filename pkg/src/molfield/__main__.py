import os
import sys


def _cap_threads(argv) -> None:
    # must happen before numpy loads its BLAS
    n = "1"
    for i, a in enumerate(argv):
        if a == "--threads" and i + 1 < len(argv):
            n = argv[i + 1]
        elif a.startswith("--threads="):
            n = a.split("=", 1)[1]
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMBA_NUM_THREADS"):
        os.environ.setdefault(var, n)


_cap_threads(sys.argv[1:])

from .cli import run  # noqa: E402

sys.exit(run())
