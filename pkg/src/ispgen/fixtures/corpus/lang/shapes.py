from abc import ABC, abstractmethod


class Shape(ABC):
    @abstractmethod
    def area(self) -> float: ...

    def describe(self) -> str:
        if self.area() > 100:
            return "large"
        return "small"


class Square(Shape):
    def __init__(self, side: float):
        self.side = side

    def area(self) -> float:
        return self.side * self.side

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Square) and other.side == self.side

    def __hash__(self) -> int:
        return hash(self.side)
