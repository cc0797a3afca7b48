"""Numba dispatch.

Hot kernels are written once as plain Python over numpy arrays and wrapped
with :func:`kernel`. Setting ``GRAPHON_RD_DISABLE_NUMBA=1`` in the
environment (before import) runs the uncompiled functions instead.
"""
import os

DISABLE_ENV = "GRAPHON_RD_DISABLE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _requested():
    return os.environ.get(DISABLE_ENV, "").strip().lower() not in ("1", "true", "yes", "on")


USE_NUMBA = HAVE_NUMBA and _requested()


def kernel(fn=None, **options):
    """Compile ``fn`` with ``numba.njit`` when acceleration is on.

    The undecorated function stays reachable as ``.py_func`` in both modes,
    which is what the benchmarks and the cross-path tests call.
    """

    def wrap(f):
        if USE_NUMBA:
            opts = {"cache": True, "nogil": True}
            opts.update(options)
            return numba.njit(**opts)(f)
        f.py_func = f
        return f

    if fn is None:
        return wrap
    return wrap(fn)


def backend():
    return "numba" if USE_NUMBA else "python"
