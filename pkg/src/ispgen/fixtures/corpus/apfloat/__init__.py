"""Tiny arbitrary-precision-flavoured complex arithmetic, used as a test subject."""

from .core import Apcomplex, Apfloat

__all__ = ["Apcomplex", "Apfloat"]
