from __future__ import annotations

import numbers
from typing import overload


class Apcomplex(numbers.Number):
    """A complex number with a real and an imaginary part."""

    @overload
    def __init__(self, real: Apfloat, imag: Apfloat) -> None: ...

    @overload
    def __init__(self, value: str) -> None: ...

    def __init__(self, *args):
        if len(args) == 1 and isinstance(args[0], str):
            parsed = complex(args[0].replace(" ", "").replace("i", "j"))
            self._re, self._im = parsed.real, parsed.imag
        elif len(args) == 2 and all(isinstance(a, Apcomplex) for a in args):
            self._re, self._im = args[0]._re, args[1]._re
        else:
            raise TypeError(f"no Apcomplex constructor accepts {args!r}")
        self._precision = 16

    def real(self) -> Apfloat:
        return Apfloat(self._re)

    def imag(self) -> Apfloat:
        return Apfloat(self._im)

    def precision(self) -> int:
        return self._precision

    def is_zero(self) -> bool:
        return complex(self._re, self._im) == 0

    def multiply(self, other: Apcomplex) -> Apcomplex:
        product = complex(self._re, self._im) * complex(other._re, other._im)
        return Apcomplex(Apfloat(product.real), Apfloat(product.imag))

    def __repr__(self) -> str:
        return f"Apcomplex({self._re!r}, {self._im!r})"


class Apfloat(Apcomplex):
    """A real number; an Apcomplex whose imaginary part is zero."""

    @overload
    def __init__(self, value: float) -> None: ...

    @overload
    def __init__(self, value: str, precision: int) -> None: ...

    def __init__(self, value, precision=16):
        self._re = float(value)
        self._im = 0.0
        self._precision = precision

    def signum(self) -> int:
        return (self._re > 0) - (self._re < 0)
