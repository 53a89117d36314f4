"""Error taxonomy mirroring the CLI exit-code contract: data problems map
to exit 2, usage problems are argparse's."""


class ProbeExtractError(Exception):
    """Base class for all errors raised by this package."""


class DataError(ProbeExtractError):
    """Unusable input: missing folders, no readable images, too few rows."""


class ConfigError(DataError):
    """Infeasible or inconsistent job configuration."""
