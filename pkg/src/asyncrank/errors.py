"""Exception hierarchy shared across the package."""


class RankError(Exception):
    """Base class for every error raised by asyncrank."""


class ParseError(RankError, ValueError):
    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class RangeError(RankError, ValueError):
    pass


class ParameterError(RankError, ValueError):
    pass


class ShapeError(RankError, ValueError):
    pass


class DegenerateInputError(RankError, ValueError):
    pass


class SizeError(RankError, ValueError):
    pass


class ProtocolError(RankError):
    pass


class ScriptError(RankError, ValueError):
    pass


class TransportError(RankError):
    def __init__(self, message, ue_id=None):
        if ue_id is not None:
            message = f"UE {ue_id}: {message}"
        super().__init__(message)
        self.ue_id = ue_id


class FrameError(RankError, ValueError):
    """A wire frame could not be decoded."""


class ChecksumError(FrameError):
    pass


class ConfigError(RankError, ValueError):
    def __init__(self, message, key=None, line_number=None):
        parts = []
        if line_number is not None:
            parts.append(f"line {line_number}")
        if key is not None:
            parts.append(f"key {key!r}")
        prefix = ", ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.key = key
        self.line_number = line_number
