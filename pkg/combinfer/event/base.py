from typing import Any, Callable, ClassVar, Iterable, List
from typing_extensions import Self

from ..logger import logger


class Event(object):
    __slots__ = []

    __handlers__: ClassVar[List[Callable[[Self], Any]]] = []

    @classmethod
    def add_handler(cls, handler: Callable[[Self], Any]) -> Callable[[Self], Any]:
        cls.__handlers__.append(handler)
        return handler

    @classmethod
    def remove_handler(cls, handler: Callable[[Self], Any]) -> None:
        cls.__handlers__.remove(handler)

    def call_handler(self, handler: Callable[[Self], Any]) -> None:
        handler(self)

    def trigger(self, extra: Iterable[Callable[[Self], Any]] = ()) -> None:
        logger.debug(f"trigger event {self.__class__.__name__}")
        for i in self.__handlers__:
            self.call_handler(i)
        for i in extra:
            self.call_handler(i)

    def __init_subclass__(cls) -> None:
        if "__handlers__" not in cls.__dict__:
            cls.__handlers__ = cls.__handlers__.copy()
