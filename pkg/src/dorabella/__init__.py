"""Trigram language models over symbolic alphabets and a hill-climbing
substitution cipher solver, applied to reading the Dorabella cipher as melody."""

__version__ = "0.1.0"
