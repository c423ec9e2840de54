from __future__ import annotations

from ._decl import throws
from .core import Apcomplex, Apfloat


@throws(ArithmeticError)
def check_pow(z: Apcomplex, w: Apcomplex, precision: int) -> Apcomplex | None:
    """Shortcut results of ``z ** w`` for trivial operands, else None."""
    if w.is_zero():
        if z.is_zero():
            raise ArithmeticError("zero to the power of zero")
        return Apcomplex(Apfloat(1.0), Apfloat(0.0))
    if z.is_zero() and w.real().signum() > 0:
        return z
    return None
