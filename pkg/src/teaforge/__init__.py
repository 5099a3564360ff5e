"""teaforge: a TeaDSL compiler toolchain with API documentation analytics."""

__version__ = "0.1.0"
