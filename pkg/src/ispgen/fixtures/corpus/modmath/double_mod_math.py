class DoubleModMath:
    """Modular arithmetic over doubles with a fixed modulus."""

    def __init__(self, modulus: float):
        self.modulus = modulus

    def get_modulus(self) -> float:
        return self.modulus

    def mod_pow(self, a: float, n: float) -> float:
        """Compute ``a ** n mod m``; negative exponents rely on Fermat's little theorem."""
        if n == 0:
            return 1.0
        elif n < 0:
            return self.mod_pow(a, self.get_modulus() - 1 + n)
        m = self.get_modulus()
        r = 1.0
        base = a % m
        while n > 0:
            if int(n) % 2 == 1:
                r = (r * base) % m
            base = (base * base) % m
            n = n // 2
        return r
