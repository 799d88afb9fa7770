"""Make the src layout importable when the package is not installed."""

import pathlib
import sys

_src = pathlib.Path(__file__).parent / "src"
if str(_src) not in sys.path:
    sys.path.insert(0, str(_src))
