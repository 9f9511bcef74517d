"""Compact monitors: lock/unlock/wait/notify over a single-word lock cell.

Every monitor is one atomic word.  Unlocked monitors carry their identity
hash in the word; locked monitors point the word at the tail of a queue of
per-thread nodes that carry everything else (owner, recursion, waiters,
displaced hash).  See the README for the wire-level encoding and protocol
notes.

>>> from cjm import MonitorRuntime
>>> rt = MonitorRuntime()
>>> m = rt.new_monitor("demo")
>>> with rt.locked(m):
...     pass
"""

from .errors import IllegalMonitorStateError
from .markword import Monitor
from .node import ThreadContext
from .runtime import CHAIN, EXTERNAL, MonitorConfig, MonitorRuntime
from .waitset import WaitResult

__version__ = "0.1.0"

__all__ = [
    "CHAIN",
    "EXTERNAL",
    "IllegalMonitorStateError",
    "Monitor",
    "MonitorConfig",
    "MonitorRuntime",
    "ThreadContext",
    "WaitResult",
    "__version__",
]
