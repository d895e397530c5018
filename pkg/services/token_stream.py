"""
Token stream shared by the LEF and DEF readers
"""
import re
from decimal import Decimal, InvalidOperation, ROUND_HALF_EVEN
from typing import List, Optional, Tuple

from exceptions import ParseError

_TOKEN = re.compile(r'"[^"\n]*"|[();]|[^\s();]+')
_INT = re.compile(r"^[+-]?\d+$")
_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
COORD_LIMIT = 2 ** 62


def tokenize(text: str) -> List[Tuple[str, int]]:
    tokens: List[Tuple[str, int]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        for match in _TOKEN.finditer(line):
            tok = match.group(0)
            if tok.startswith("#"):
                break
            tokens.append((tok, lineno))
    return tokens


class TokenStream:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.last_line = self.tokens[-1][1] if self.tokens else 1

    @property
    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    @property
    def line(self) -> int:
        if self.at_end:
            return self.last_line
        return self.tokens[self.pos][1]

    def error(self, message: str, cls=ParseError) -> ParseError:
        return cls(message, self.line)

    def peek(self, offset: int = 0) -> Optional[str]:
        i = self.pos + offset
        return self.tokens[i][0] if i < len(self.tokens) else None

    def next(self) -> str:
        if self.at_end:
            raise self.error("unexpected end of input")
        tok = self.tokens[self.pos][0]
        self.pos += 1
        return tok

    def expect(self, value: str) -> str:
        tok = self.next()
        if tok.upper() != value.upper():
            self.pos -= 1
            raise self.error(f"expected '{value}', found '{tok}'")
        return tok

    def accept(self, value: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.upper() == value.upper():
            self.pos += 1
            return True
        return False

    def statement(self) -> List[str]:
        """Tokens up to (and consuming) the next ';'."""
        out = []
        while True:
            tok = self.next()
            if tok == ";":
                return out
            out.append(tok)

    def skip_block(self, name: Optional[str]) -> None:
        """Skip to `END name` (or a bare END when name is None)."""
        while True:
            tok = self.next()
            if tok.upper() != "END":
                continue
            if name is None:
                return
            if self.peek() == name:
                self.pos += 1
                return

    def integer(self) -> int:
        tok = self.next()
        return self.parse_int(tok)

    def parse_int(self, tok: str) -> int:
        if not _INT.match(tok):
            raise self.error(f"expected an integer, found '{tok}'")
        value = int(tok)
        if abs(value) > COORD_LIMIT:
            raise self.error(f"integer {tok} out of range")
        return value

    def decimal(self) -> Decimal:
        tok = self.next()
        return self.parse_decimal(tok)

    def parse_decimal(self, tok: str) -> Decimal:
        if not _NUMBER.match(tok):
            raise self.error(f"expected a number, found '{tok}'")
        try:
            value = Decimal(tok)
        except InvalidOperation:
            raise self.error(f"malformed number '{tok}'")
        if not value.is_finite():
            raise self.error(f"non-finite number '{tok}'")
        return value

    def microns(self, dbu: int) -> int:
        return self.to_dbu(self.decimal(), dbu)

    def to_dbu(self, value: Decimal, dbu: int) -> int:
        if value.adjusted() > 30 or abs(value) * dbu > COORD_LIMIT:
            raise self.error(f"value {value} out of range")
        return int((value * dbu).to_integral_value(rounding=ROUND_HALF_EVEN))

    def point(self, prev: Optional[Tuple[int, int]] = None) -> Tuple[int, int]:
        """`( x y [ext] )` with `*` repeating the previous coordinate."""
        self.expect("(")
        coords = []
        for axis in range(2):
            tok = self.next()
            if tok == "*":
                if prev is None:
                    raise self.error("'*' without a previous point")
                coords.append(prev[axis])
            else:
                coords.append(self.parse_int(tok))
        if self.peek() != ")":
            self.next()  # wire extension value
        self.expect(")")
        return coords[0], coords[1]
