"""Binary-level mutation testing for x86-64 ELF executables."""

__version__ = "0.1.0"
