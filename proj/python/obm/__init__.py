"""Sound/maximal two-choice fractional online bipartite matching, lossless
online rounding, and bounded-independence randomness, backed by the C++ core.

Exact rationals cross the C++ boundary as "p/q" strings; use frac() to turn
them into fractions.Fraction.
"""

from fractions import Fraction

try:
    from ._core import *  # noqa: F401,F403  (installed wheel layout)
    from . import _core as _impl
except ImportError:  # in-tree use: the build directory is on sys.path
    from _core import *  # noqa: F401,F403
    import _core as _impl


def frac(value):
    """Converts a "p/q" string from the core into a Fraction."""
    return Fraction(value)


__all__ = [name for name in dir(_impl) if not name.startswith("_")] + ["frac"]
