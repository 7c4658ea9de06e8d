"""wasmobf: JS-to-WASM obfuscation toolkit.

Rewrites fingerprinting-relevant fragments of ECMAScript programs into a
synthesized WebAssembly module plus glue bindings, with validation,
metrics, corpus tooling, and signal analysis around the pipeline.
"""

__version__ = "0.1.0"

from .scripts import SourceScript, Span  # noqa: F401
