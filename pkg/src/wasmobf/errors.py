"""Exception types shared across the toolkit."""


class WasmobfError(Exception):
    """Base class for all toolkit errors."""


class ParseError(WasmobfError):
    """Input is not in the supported ECMAScript grammar."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class OversizeError(WasmobfError):
    """Script exceeds the ingest size limit."""


class RangeError(WasmobfError):
    """Span does not fit inside the owning script."""


class EmitError(WasmobfError):
    """IR cannot be encoded into a WebAssembly module."""


class DecodeError(WasmobfError):
    """Binary module is malformed; carries the byte offset of the fault."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class AssembleError(WasmobfError):
    """Glue references a symbol absent from the synthesized module."""


class ExtractError(WasmobfError):
    """Embedded module bytes could not be located in an output script."""


class TranslatorUnavailable(WasmobfError):
    """Translation service could not be reached in strict mode."""


class HarnessUnavailable(WasmobfError):
    """Stage-3 execution requested but no runtime harness is configured."""
