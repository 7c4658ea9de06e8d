from .encoder import MemoryLayout, WasmModuleImage, synthesize  # noqa: F401
from .decoder import DecodeError, ModuleSummary, decode, validate_module  # noqa: F401
from .astext import emit_assemblyscript_text  # noqa: F401
