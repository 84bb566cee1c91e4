import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from kinship.core.exceptions import NotInvertibleError, RegistryError, UnknownSymbolError

logger = logging.getLogger(__name__)


class Gender(str, Enum):
    """Пол персоны, на которую указывает примитивный шаг."""

    MALE = "m"
    FEMALE = "f"


class PrimitiveStep(BaseModel):
    """Примитивный шаг родства: символ, g-len, s-len и класс обратных символов."""

    symbol: str = Field(..., description="Одна заглавная латинская буква")
    glen: int = Field(..., description="Смещение по поколениям (+ = более раннее)")
    slen: int = Field(..., ge=0, description="Боковое смещение")
    inverses: Tuple[str, ...] = Field(
        default=(), description="Символы, описывающие обратное направление"
    )
    gender: Optional[Gender] = Field(
        None, description="Пол персоны, на которую указывает шаг (если известен)"
    )

    model_config = ConfigDict(frozen=True)

    @field_validator("symbol")
    def validate_symbol(cls, v):
        """Символ обязан быть одной заглавной буквой."""
        if len(v) != 1 or not ("A" <= v <= "Z"):
            raise ValueError(f"Symbol must be a single uppercase letter, got {v!r}")
        return v


BUILTIN_STEPS: Tuple[PrimitiveStep, ...] = (
    PrimitiveStep(symbol="F", glen=1, slen=0, inverses=("S", "D"), gender=Gender.MALE),
    PrimitiveStep(symbol="M", glen=1, slen=0, inverses=("S", "D"), gender=Gender.FEMALE),
    PrimitiveStep(symbol="S", glen=-1, slen=0, inverses=("F", "M"), gender=Gender.MALE),
    PrimitiveStep(
        symbol="D", glen=-1, slen=0, inverses=("F", "M"), gender=Gender.FEMALE
    ),
    PrimitiveStep(symbol="H", glen=0, slen=1, inverses=("W",), gender=Gender.MALE),
    PrimitiveStep(symbol="W", glen=0, slen=1, inverses=("H",), gender=Gender.FEMALE),
    PrimitiveStep(symbol="B", glen=0, slen=1, inverses=("B", "Z"), gender=Gender.MALE),
    PrimitiveStep(
        symbol="Z", glen=0, slen=1, inverses=("B", "Z"), gender=Gender.FEMALE
    ),
)


@dataclass(frozen=True, order=True)
class RelationCode:
    """
    Составной код родства: упорядоченная непустая последовательность символов.

    Порядок сравнения совпадает с лексикографическим порядком строкового вида,
    так как каждый примитив записывается одной буквой.
    """

    steps: Tuple[str, ...]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("Relation code must contain at least one step")

    def __str__(self) -> str:
        return "".join(self.steps)

    def __len__(self) -> int:
        return len(self.steps)


class RelationRegistry:
    """
    Таблица примитивных шагов. Неизменяема после построения.

    Проверяет при создании:
    - уникальность символов;
    - что каждый обратный символ зарегистрирован;
    - glen(t) = -glen(s) и slen(t) = slen(s) для каждого обратного t символа s;
    - симметричность классов обратных символов (t обратен s, значит s обратен t).
    """

    def __init__(self, steps: Iterable[PrimitiveStep]):
        entries: Dict[str, PrimitiveStep] = {}
        for step in steps:
            if step.symbol in entries:
                raise RegistryError(0, f"Duplicate symbol {step.symbol!r}")
            entries[step.symbol] = step
        self._entries = entries
        self._validate()

    def _validate(self) -> None:
        for step in self._entries.values():
            for inverse in step.inverses:
                other = self._entries.get(inverse)
                if other is None:
                    raise RegistryError(
                        0, f"Inverse {inverse!r} of {step.symbol!r} is not registered"
                    )
                if other.glen != -step.glen:
                    raise RegistryError(
                        0,
                        f"glen({inverse})={other.glen} is not the negation of "
                        f"glen({step.symbol})={step.glen}",
                    )
                if other.slen != step.slen:
                    raise RegistryError(
                        0,
                        f"slen({inverse})={other.slen} differs from "
                        f"slen({step.symbol})={step.slen}",
                    )
                if step.symbol not in other.inverses:
                    raise RegistryError(
                        0,
                        f"Inverse classes are not symmetric: {inverse!r} inverts "
                        f"{step.symbol!r} but not the other way round",
                    )

    @classmethod
    def builtin(cls) -> "RelationRegistry":
        """Реестр встроенного алфавита F, M, S, D, H, W, B, Z."""
        return cls(BUILTIN_STEPS)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "RelationRegistry":
        """
        Загружает встроенный алфавит и расширяет его записями из файла.

        Формат строки: ``SYMBOL glen slen inverse1[,inverse2...] [m|f|-]``,
        ``#`` начинает комментарий. Переопределение встроенных символов запрещено.

        Raises:
            RegistryError: Некорректная строка или нарушение инвариантов реестра.
        """
        builtin_symbols = {step.symbol for step in BUILTIN_STEPS}
        steps = list(BUILTIN_STEPS)
        seen: Dict[str, int] = {}
        with open(path, encoding="utf-8") as handle:
            for line_no, raw in enumerate(handle, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                step = _parse_registry_line(line, line_no)
                if step.symbol in builtin_symbols:
                    raise RegistryError(
                        line_no, f"Built-in symbol {step.symbol!r} cannot be redefined"
                    )
                if step.symbol in seen:
                    raise RegistryError(
                        line_no,
                        f"Symbol {step.symbol!r} already defined at line {seen[step.symbol]}",
                    )
                seen[step.symbol] = line_no
                steps.append(step)

        # Обратные символы могут ссылаться вперёд, поэтому проверяем после чтения
        try:
            registry = cls(steps)
        except RegistryError as e:
            raise RegistryError(seen.get(_blamed_symbol(e.reason, seen), 0), e.reason)
        logger.info(f"Loaded {len(seen)} extra relation symbols from {path}")
        return registry

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def symbols(self) -> Tuple[str, ...]:
        return tuple(sorted(self._entries))

    def get(self, symbol: str) -> PrimitiveStep:
        return self._entries[symbol]

    def inverse_class(self, symbol: str) -> Tuple[str, ...]:
        return self._entries[symbol].inverses


def _parse_registry_line(line: str, line_no: int) -> PrimitiveStep:
    parts = line.split()
    if len(parts) not in (4, 5):
        raise RegistryError(
            line_no, "Expected 'SYMBOL glen slen inverse1[,inverse2...] [m|f|-]'"
        )
    symbol, glen_text, slen_text, inverses_text = parts[:4]
    gender_text = parts[4] if len(parts) == 5 else "-"
    inverses = (
        () if inverses_text == "-" else tuple(s for s in inverses_text.split(",") if s)
    )
    try:
        return PrimitiveStep(
            symbol=symbol,
            glen=int(glen_text),
            slen=int(slen_text),
            inverses=inverses,
            gender=None if gender_text == "-" else gender_text.lower(),
        )
    except ValidationError as e:
        raise RegistryError(line_no, e.errors()[0]["msg"])
    except ValueError as e:
        raise RegistryError(line_no, str(e))


def _blamed_symbol(reason: str, seen: Dict[str, int]) -> Optional[str]:
    """Находит в сообщении об ошибке символ из файла, чтобы указать его строку."""
    for symbol in seen:
        if f"'{symbol}'" in reason or f"({symbol})" in reason:
            return symbol
    return None


# --- Операции над кодами ---


def parse_code(text: str, reg: RelationRegistry) -> RelationCode:
    """
    Разбирает строку кода на примитивы.

    Raises:
        ValueError: Пустая строка.
        UnknownSymbolError: Символ не найден в реестре (позиция с нуля).
    """
    if not text:
        raise ValueError("Relation code must be non-empty")
    for position, symbol in enumerate(text):
        if symbol not in reg:
            raise UnknownSymbolError(position, symbol)
    return RelationCode(tuple(text))


def render(code: RelationCode) -> str:
    return str(code)


def glen(code: RelationCode, reg: RelationRegistry) -> int:
    """Сумма g-len примитивов кода."""
    return sum(reg.get(symbol).glen for symbol in code.steps)


def slen(code: RelationCode, reg: RelationRegistry) -> int:
    """Сумма s-len примитивов кода."""
    return sum(reg.get(symbol).slen for symbol in code.steps)


def concat(a: RelationCode, b: RelationCode) -> RelationCode:
    return RelationCode(a.steps + b.steps)


def _inverse_options(
    code: RelationCode, reg: RelationRegistry
) -> Tuple[List[Tuple[str, ...]], List[int]]:
    options: List[Tuple[str, ...]] = []
    inconsistent: List[int] = []
    for i, symbol in enumerate(code.steps):
        candidates = reg.inverse_class(symbol)
        if not candidates:
            raise NotInvertibleError(symbol)
        if i > 0:
            known = reg.get(code.steps[i - 1]).gender
            if known is not None:
                filtered = tuple(
                    t for t in candidates if reg.get(t).gender in (None, known)
                )
                if filtered:
                    candidates = filtered
                else:
                    inconsistent.append(i)
        options.append(candidates)
    return options, inconsistent


def gender_conflicts(code: RelationCode, reg: RelationRegistry) -> Tuple[int, ...]:
    """Номера шагов, где пол персоны исключает весь класс обратных символов."""
    return tuple(_inverse_options(code, reg)[1])


def invert(code: RelationCode, reg: RelationRegistry) -> FrozenSet[RelationCode]:
    """
    Все коды, описывающие обратное направление.

    Шаги идут в обратном порядке, каждый заменяется членом своего класса
    обратных символов. Пол персоны, из которой выходит шаг, известен для всех
    шагов кроме первого (это цель предыдущего шага), и класс фильтруется по нему.
    Пол эго неизвестен, поэтому результат в общем случае - множество.
    Если фильтр опустошает класс, берётся весь класс (см. gender_conflicts).

    Raises:
        NotInvertibleError: У символа пустой класс обратных символов.
    """
    options, inconsistent = _inverse_options(code, reg)
    for i in inconsistent:
        logger.warning(
            f"Code {code} is gender-inconsistent at step {i}; "
            f"using the full inverse class of {code.steps[i]!r}"
        )
    return frozenset(
        RelationCode(tuple(combo)) for combo in itertools.product(*reversed(options))
    )


def canonical_inverse(
    code: RelationCode, reg: RelationRegistry
) -> Tuple[RelationCode, Tuple[RelationCode, ...]]:
    """Лексикографически наименьший обратный код и остальные кандидаты."""
    first, *rest = sorted(invert(code, reg))
    return first, tuple(rest)
