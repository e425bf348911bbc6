"""Reversal- and register-bounded verification of machines on series-parallel graph grammars."""

__version__ = "0.1.0"
