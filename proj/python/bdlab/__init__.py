"""Python interface to the bdlab C++ core.

Everything lives in the compiled extension; this package just re-exports
it so `import bdlab` works without touching the build layout.
"""

from ._core import *  # noqa: F401,F403

__version__ = "0.1.0"
