"""Exception hierarchy shared across the package."""


class BlockforgeError(Exception):
    """Base class for all package errors."""


class EmptyLayout(BlockforgeError):
    """Operation requires at least one non-empty box."""


class DegenerateSize(BlockforgeError):
    """A box size component is zero or negative."""


class TooManyBoxes(BlockforgeError):
    """Layout exceeds the configured maximum box count."""


class BadShape(BlockforgeError):
    """Tensor or array has the wrong dimensions."""


class ParseError(BlockforgeError):
    """Malformed document; message carries line number and field path."""


class UnknownCategory(ParseError):
    """Category name not present in the taxonomy."""


class BadScheduleParams(BlockforgeError):
    """Invalid noise-schedule parameters."""


class EmptyDataset(BlockforgeError):
    """Training requires a non-empty dataset."""


class NoAssetForCategory(BlockforgeError):
    """Asset database holds no generator for the requested category."""


class OpeningOutsideWall(BlockforgeError):
    """Carve opening does not overlap the wall."""


class FrameTooThick(BlockforgeError):
    """Window frame thickness exceeds half the smaller in-plane extent."""


class TooFewSamples(BlockforgeError):
    """Distribution metric needs more feature vectors."""


class OracleUnavailable(BlockforgeError):
    """Remote style oracle could not be reached."""


class OracleMalformedResponse(BlockforgeError):
    """Remote style oracle returned a response outside the wire contract."""
