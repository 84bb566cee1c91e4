"""Иерархия исключений движка вывода родственных связей."""


class KinshipError(Exception):
    """Базовое исключение для всех ошибок движка."""


class UnknownSymbolError(KinshipError, ValueError):
    """Символ кода родства отсутствует в реестре."""

    def __init__(self, position: int, symbol: str):
        self.position = position
        self.symbol = symbol
        super().__init__(f"Unknown relation symbol {symbol!r} at position {position}")


class NotInvertibleError(KinshipError, ValueError):
    """У примитива пустой класс обратных символов."""

    def __init__(self, symbol: str):
        self.symbol = symbol
        super().__init__(f"Relation symbol {symbol!r} has no inverse")


class RegistryError(KinshipError, ValueError):
    """Некорректная строка или нарушение инвариантов реестра."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"Registry error at line {line}: {reason}")


class DimensionMismatchError(KinshipError, ValueError):
    """Операнды матричного произведения разного размера."""

    def __init__(self, left: int, right: int):
        self.left = left
        self.right = right
        super().__init__(f"Matrix dimensions do not match: {left} vs {right}")


class PersonOutOfRangeError(KinshipError, ValueError):
    """Индекс персоны вне диапазона 1..n."""

    def __init__(self, person: int, n: int):
        self.person = person
        self.n = n
        super().__init__(f"Person index {person} is out of range 1..{n}")


class NegativeWeightError(KinshipError, ValueError):
    """Отрицательный вес пользовательской метрики."""

    def __init__(self, name: str, value: float):
        self.name = name
        self.value = value
        super().__init__(f"Weight {name} must be non-negative, got {value}")


class BoundExceededError(KinshipError, ValueError):
    """Граница перебора путей превышает допустимую."""

    def __init__(self, bound: int, limit: int):
        self.bound = bound
        self.limit = limit
        super().__init__(f"Path bound {bound} exceeds the limit of {limit} edges")


class ParseError(KinshipError, ValueError):
    """Ошибка разбора входного файла рёбер."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"Parse error at line {line}: {reason}")


class UnknownPersonError(KinshipError, ValueError):
    """Внешний идентификатор персоны не встречается в загруженных данных."""

    def __init__(self, external_id: str):
        self.external_id = external_id
        super().__init__(f"Unknown person id {external_id!r}")
