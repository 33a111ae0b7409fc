"""
Expression Parser
=================

This module provides `ExpressionParser`, a recursive-descent parser for the
symbol expression language used in experiment configurations:

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := atom ('^' integer)?
    atom   := number | 'x' | 'theta' | 'i' | func '(' expr ')' | '(' expr ')'
    func   := sin | cos | exp | abs | sqrt | re | im

Values are complex throughout and whitespace is ignored. A parsed expression
evaluates vectorized over numpy arrays of x and theta.
"""

import logging
import re
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..models.errors import (
    ArityError,
    ExpressionSyntaxError,
    UnknownIdentifierError,
)
from ..models.symbol_function import SymbolFunction

logger = logging.getLogger(__name__)

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "abs": np.abs,
    "sqrt": np.sqrt,
    "re": np.real,
    "im": np.imag,
}
VARIABLES = ("x", "theta")
CONSTANTS = {"i": 1j}

ATOM_START = frozenset({"number", "x", "theta", "i", "("} | set(FUNCTIONS))

_TOKEN_PATTERN = re.compile(
    r"\s*(?:(?P<number>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)

Node = Callable[[NDArray[np.float64], NDArray[np.float64]], NDArray[np.complex128]]


class Token(NamedTuple):
    kind: str
    text: str
    position: int


def tokenize(text: str) -> List[Token]:
    """
    Splits the text into number, name and operator tokens, ending with "end".

    Raises:
        ExpressionSyntaxError: On a character no token starts with.
    """
    tokens = []
    position = 0
    while True:
        while position < len(text) and text[position].isspace():
            position += 1
        if position >= len(text):
            break
        match = _TOKEN_PATTERN.match(text, position)
        if match is None or match.end() == position:
            raise ExpressionSyntaxError(
                f"Unexpected character '{text[position]}'", position, ATOM_START | {"+", "-", "*", "/", "^", ")"}
            )
        kind = match.lastgroup or "op"
        value = match.group(kind)
        tokens.append(Token(kind, value, match.start(kind)))
        position = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


@dataclass(frozen=True)
class ParsedExpression:
    """
    A compiled expression.

    Attributes:
        text: The source text.
        node: Vectorized evaluator (x, theta) -> complex array.
        uses_x: Whether the expression mentions x.
        uses_theta: Whether the expression mentions theta.
    """

    text: str
    node: Node
    uses_x: bool
    uses_theta: bool

    def evaluate(self, x: ArrayLike, theta: ArrayLike) -> NDArray[np.complex128]:
        xs, thetas = np.broadcast_arrays(
            np.asarray(x, dtype=np.float64), np.asarray(theta, dtype=np.float64)
        )
        with np.errstate(all="ignore"):
            return np.broadcast_to(np.asarray(self.node(xs, thetas), dtype=np.complex128), xs.shape)

    def to_symbol(self, label: Optional[str] = None) -> SymbolFunction:
        return SymbolFunction(self.evaluate, label or self.text)

    def to_diag_function(self) -> Callable[[ArrayLike], NDArray[np.complex128]]:
        """
        The expression as a function of x alone.

        Raises:
            UnknownIdentifierError: If the expression mentions theta.
        """
        if self.uses_theta:
            raise UnknownIdentifierError(
                "A diagonal function may only depend on x", self.text.find("theta")
            )
        evaluate = self.evaluate

        def function(x: ArrayLike) -> NDArray[np.complex128]:
            return evaluate(x, np.zeros(np.shape(x)))

        function.label = self.text  # type: ignore[attr-defined]
        return function

    def to_theta_function(self) -> Callable[[ArrayLike], NDArray[np.complex128]]:
        """
        The expression as a function of theta alone.

        Raises:
            UnknownIdentifierError: If the expression mentions x.
        """
        if self.uses_x:
            raise UnknownIdentifierError(
                "A Toeplitz generating function may only depend on theta",
                _find_name(self.text, "x"),
            )
        evaluate = self.evaluate
        return lambda theta: evaluate(np.zeros(np.shape(theta)), theta)


class ExpressionParser:
    """
    Parses symbol expressions into vectorized evaluators.
    """

    def parse(self, text: str) -> ParsedExpression:
        """
        Parses `text`.

        Raises:
            ExpressionSyntaxError: On a malformed token stream; carries the
                0-based position and the set of expected tokens.
            UnknownIdentifierError: On a name that is neither a variable, the
                constant i nor a known function.
            ArityError: When a function is not called with one argument.
        """
        state = _ParseState(tokenize(text))
        node = state.expr()
        state.expect_end()
        logger.debug(f"Parsed expression '{text}'")
        return ParsedExpression(text, node, "x" in state.names, "theta" in state.names)


class _ParseState:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.index = 0
        self.names = set()

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.current
        self.index += 1
        return token

    def fail(self, expected) -> None:
        token = self.current
        found = "end of input" if token.kind == "end" else f"'{token.text}'"
        raise ExpressionSyntaxError(f"Unexpected {found}", token.position, expected)

    def expect_end(self) -> None:
        if self.current.kind != "end":
            self.fail({"+", "-", "*", "/", "^", "end"})

    def expr(self) -> Node:
        node = self.term()
        while self.current.text in ("+", "-") and self.current.kind == "op":
            op = self.advance().text
            right = self.term()
            node = _binary(node, right, np.add if op == "+" else np.subtract)
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.current.text in ("*", "/") and self.current.kind == "op":
            op = self.advance().text
            right = self.factor()
            node = _binary(node, right, np.multiply if op == "*" else np.divide)
        return node

    def factor(self) -> Node:
        node = self.atom()
        if self.current.kind == "op" and self.current.text == "^":
            self.advance()
            if self.current.kind != "number" or not self.current.text.isdigit():
                self.fail({"integer"})
            exponent = int(self.advance().text)
            base = node
            node = lambda x, t: np.power(base(x, t), exponent)  # noqa: E731
        return node

    def atom(self) -> Node:
        token = self.current
        if token.kind == "number":
            self.advance()
            value = complex(float(token.text))
            return lambda x, t: np.full(x.shape, value)
        if token.kind == "name":
            return self.name()
        if token.kind == "op" and token.text == "(":
            self.advance()
            node = self.expr()
            if not (self.current.kind == "op" and self.current.text == ")"):
                self.fail({")", "+", "-", "*", "/", "^"})
            self.advance()
            return node
        self.fail(ATOM_START)
        raise AssertionError("unreachable")

    def name(self) -> Node:
        token = self.advance()
        if token.text == "x":
            self.names.add("x")
            return lambda x, t: x.astype(np.complex128)
        if token.text == "theta":
            self.names.add("theta")
            return lambda x, t: t.astype(np.complex128)
        if token.text in CONSTANTS:
            value = CONSTANTS[token.text]
            return lambda x, t: np.full(x.shape, value)
        if token.text not in FUNCTIONS:
            raise UnknownIdentifierError(f"Unknown identifier '{token.text}'", token.position)

        function = FUNCTIONS[token.text]
        if not (self.current.kind == "op" and self.current.text == "("):
            self.fail({"("})
        self.advance()
        if self.current.kind == "op" and self.current.text == ")":
            raise ArityError(f"{token.text}() takes exactly 1 argument, got 0", self.current.position)
        argument = self.expr()
        if self.current.kind == "op" and self.current.text == ",":
            raise ArityError(
                f"{token.text}() takes exactly 1 argument, got more", self.current.position
            )
        if not (self.current.kind == "op" and self.current.text == ")"):
            self.fail({")", "+", "-", "*", "/", "^"})
        self.advance()
        return lambda x, t: np.asarray(function(argument(x, t)), dtype=np.complex128)


def _binary(left: Node, right: Node, op) -> Node:
    return lambda x, t: op(left(x, t), right(x, t))


def _find_name(text: str, name: str) -> int:
    match = re.search(rf"\b{name}\b", text)
    return match.start() if match else 0
