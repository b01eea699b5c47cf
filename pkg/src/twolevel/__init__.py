"""Two-level robot reasoning: non-monotonic logical planning over a coarse
domain, probabilistic execution of each step over a fine one."""
from pathlib import Path

__version__ = "0.1.0"

_DATA = Path(__file__).parent / "data"


def data_path(name: str) -> Path:
    """Path of a bundled data file (``office_hl.al``, ``office_ll.al``, ``office_world.json``)."""
    return _DATA / name
