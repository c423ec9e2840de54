from __future__ import annotations

import cmath

from ._decl import throws
from .core import Apcomplex, Apfloat
from .helper import check_pow


def exp(z: Apcomplex) -> Apcomplex:
    value = cmath.exp(complex(z._re, z._im))
    return Apcomplex(Apfloat(value.real), Apfloat(value.imag))


def log(z: Apcomplex) -> Apcomplex:
    value = cmath.log(complex(z._re, z._im))
    return Apcomplex(Apfloat(value.real), Apfloat(value.imag))


@throws(ArithmeticError)
def pow(z: Apcomplex, w: Apcomplex) -> Apcomplex:
    """Raise ``z`` to the complex power ``w``."""
    result = check_pow(z, w, min(z.precision(), w.precision()))
    if result is not None:
        return result
    elif z.real().signum() >= 0 and z.imag().signum() == 0:
        x = z.real()
        return exp(w.multiply(log(x)))
    else:
        return exp(w.multiply(log(z)))
