"""Dwell-time stability analysis for linear positive impulsive and switched systems."""

try:
    from ._posidwell import *  # noqa: F401,F403
    from . import _posidwell as _impl
except ImportError:
    # Fall back to a bare extension module on the path (plain CMake builds).
    from _posidwell import *  # noqa: F401,F403
    import _posidwell as _impl

__version__ = "0.1.0"
__all__ = [name for name in dir(_impl) if not name.startswith("_")]
