"""Exception types shared across the package."""


class StepvoteError(Exception):
    """Base class for all package errors."""


class ConfigError(StepvoteError):
    """Invalid or missing configuration (CLI args, env vars, run config)."""


class GatewayError(StepvoteError):
    """A model backend failed: transport errors, retry exhaustion, bad payloads."""


class MockScriptError(StepvoteError):
    """A scripted mock backend was asked for a response it does not define."""


class DatasetError(StepvoteError):
    """A dataset or run-log file is malformed."""


class ToolError(StepvoteError):
    """A tool client failed at the transport level (not a tool-reported failure)."""
