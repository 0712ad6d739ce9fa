"""Cryptosystem leakage audits: neural MI estimation and IND-CPA distinguishing games."""

__version__ = "0.1.0"
