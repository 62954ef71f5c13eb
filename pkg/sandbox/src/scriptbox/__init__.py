"""Script-execution worker speaking a line-delimited JSON protocol on stdio."""

from .protocol import PROTOCOL_VERSION, ExecOutcome
from .runner import execute
from .worker import serve

__version__ = "0.1.0"
