"""Closed-form scalar fields psi(u1, ..., un) with exact value, gradient and Hessian.

Expressions are parsed by a small Pratt parser into an immutable tree and
evaluated with second-order forward-mode automatic differentiation: every
intermediate carries its value, gradient and Hessian for a whole batch of
points at once (arrays of shape (N,), (N, n) and (N, n, n)).

Grammar::

    expr   := expr ('+' | '-') expr | expr ('*' | '/') expr
            | '-' expr | expr '^' constant | atom
    atom   := number | 'pi' | 'u' index | func '(' expr ')' | '(' expr ')'
    func   := sqrt | exp | log | sin | cos | sinh | cosh | asinh
"""
import logging
import math
import re
from dataclasses import dataclass

import numpy as np

from lorentz_heinz.errors import ExpressionArityError, ExpressionDomainError, ExpressionSyntaxError

logger = logging.getLogger(__name__)

FUNCTIONS = ("sqrt", "exp", "log", "sin", "cos", "sinh", "cosh", "asinh")

_TOKEN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)
_VARIABLE = re.compile(r"u(\d+)$")


# AST

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: object  # variable-free subtree
    power: float


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


@dataclass(frozen=True)
class Expression:
    """Parsed field of arity n; immutable and safe to share between workers"""

    ast: object
    arity: int
    text: str

    def render(self) -> str:
        return render(self)

    def variables(self) -> set[int]:
        return _variables(self.ast)


def _variables(node) -> set[int]:
    match node:
        case Var(index=i):
            return {i}
        case Const():
            return set()
        case Neg(arg=a) | Call(arg=a):
            return _variables(a)
        case Pow(base=b):
            return _variables(b)
        case BinOp(left=left, right=right):
            return _variables(left) | _variables(right)
    raise TypeError(f"unknown node {node!r}")


# Parsing

@dataclass(frozen=True)
class _Token:
    kind: str  # number | name | op | end
    text: str
    position: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    position = 0
    while position < len(text):
        if text[position:].strip() == "":
            break
        match = _TOKEN.match(text, position)
        if match is None or match.end() == position:
            offset = position + len(text[position:]) - len(text[position:].lstrip())
            raise ExpressionSyntaxError(f"unexpected character '{text[offset]}'", offset)
        kind = match.lastgroup
        tokens.append(_Token(kind, match.group(kind), match.start(kind)))
        position = match.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    """Pratt parser: binding powers drive precedence, '^' is right-associative"""

    BINDING = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
    PREFIX_MINUS = 25

    def __init__(self, text: str, arity: int):
        self.text = text
        self.arity = arity
        self.tokens = _tokenize(text)
        self.index = 0

    @property
    def token(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        token = self.token
        self.index += 1
        return token

    def expect(self, text: str):
        if self.token.text != text:
            found = self.token.text or "end of input"
            raise ExpressionSyntaxError(f"expected '{text}' but found '{found}'", self.token.position)
        self.advance()

    def parse(self):
        if self.token.kind == "end":
            raise ExpressionSyntaxError("empty expression", 0)
        node = self.expression(0)
        if self.token.kind != "end":
            raise ExpressionSyntaxError(f"unexpected '{self.token.text}'", self.token.position)
        return node

    def expression(self, rbp: int):
        left = self.nud(self.advance())
        while rbp < self.lbp(self.token):
            left = self.led(self.advance(), left)
        return left

    def lbp(self, token: _Token) -> int:
        if token.kind == "op":
            return self.BINDING.get(token.text, 0)
        return 0

    def nud(self, token: _Token):
        if token.kind == "number":
            value = float(token.text)
            if not math.isfinite(value):
                raise ExpressionSyntaxError(f"number '{token.text}' is not finite", token.position)
            return Const(value)
        if token.kind == "name":
            return self.name(token)
        if token.text == "(":
            node = self.expression(0)
            self.expect(")")
            return node
        if token.text == "-":
            return Neg(self.expression(self.PREFIX_MINUS))
        if token.text == "+":
            return self.expression(self.PREFIX_MINUS)
        found = token.text or "end of input"
        raise ExpressionSyntaxError(f"unexpected '{found}'", token.position)

    def name(self, token: _Token):
        if token.text == "pi":
            return Const(math.pi)
        if token.text in FUNCTIONS:
            self.expect("(")
            arg = self.expression(0)
            self.expect(")")
            return Call(token.text, arg)
        variable = _VARIABLE.match(token.text)
        if variable:
            index = int(variable.group(1))
            if not 1 <= index <= self.arity:
                raise ExpressionArityError(
                    f"variable index out of range: '{token.text}' with n = {self.arity} "
                    f"(position {token.position})"
                )
            return Var(index)
        raise ExpressionSyntaxError(f"unknown identifier '{token.text}'", token.position)

    def led(self, token: _Token, left):
        if token.text == "^":
            position = self.token.position
            exponent = self.expression(self.BINDING["^"] - 1)
            if _variables(exponent):
                raise ExpressionSyntaxError("exponent must be a constant", position)
            return Pow(left, exponent, _constant_value(exponent, position))
        right = self.expression(self.BINDING[token.text])
        return BinOp(token.text, left, right)


def _constant_value(node, position: int) -> float:
    try:
        value = float(_evaluate(node, np.zeros((1, 0))).values[0])
    except ExpressionDomainError as exc:
        raise ExpressionSyntaxError(f"exponent is undefined ({exc})", position) from None
    return value


def parse(text: str, n: int) -> Expression:
    """Parse infix text over u1..un into an Expression of arity n"""
    if not isinstance(n, int) or n < 1:
        raise ExpressionArityError(f"arity must be a positive integer, got {n!r}")
    ast = _Parser(text, n).parse()
    return Expression(ast, n, text)


def render(expr) -> str:
    """Fully parenthesised text that parses back into the same tree"""
    node = expr.ast if isinstance(expr, Expression) else expr
    match node:
        case Const(value=v):
            return repr(float(v))
        case Var(index=i):
            return f"u{i}"
        case Neg(arg=a):
            return f"(-{render(a)})"
        case BinOp(op=op, left=left, right=right):
            return f"({render(left)} {op} {render(right)})"
        case Pow(base=b, exponent=e):
            return f"({render(b)})^({render(e)})"
        case Call(func=f, arg=a):
            return f"{f}({render(a)})"
    raise TypeError(f"unknown node {node!r}")


# Second-order forward-mode evaluation

@dataclass(frozen=True, eq=False)
class Jet:
    """Value, gradient and Hessian of a field at one point"""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray

    @property
    def grad_norm_sq(self) -> float:
        return float(self.gradient @ self.gradient)


@dataclass(frozen=True, eq=False)
class JetBatch:
    """Jets for N points: values (N,), gradients (N, n), hessians (N, n, n)"""

    values: np.ndarray
    gradients: np.ndarray
    hessians: np.ndarray

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, i: int) -> Jet:
        return Jet(float(self.values[i]), self.gradients[i].copy(), self.hessians[i].copy())

    @property
    def grad_norm_sq(self) -> np.ndarray:
        return np.einsum("ki,ki->k", self.gradients, self.gradients)

    @classmethod
    def concatenate(cls, batches: list["JetBatch"]) -> "JetBatch":
        return cls(
            np.concatenate([b.values for b in batches]),
            np.concatenate([b.gradients for b in batches]),
            np.concatenate([b.hessians for b in batches]),
        )


class _Dual:
    """Batched hyper-dual number carrying value, gradient and Hessian"""

    __slots__ = ("v", "g", "h")

    def __init__(self, v, g, h):
        self.v = v
        self.g = g
        self.h = h

    @classmethod
    def constant(cls, value: float, size: int, n: int) -> "_Dual":
        return cls(np.full(size, value), np.zeros((size, n)), np.zeros((size, n, n)))

    def __add__(self, other: "_Dual") -> "_Dual":
        return _Dual(self.v + other.v, self.g + other.g, self.h + other.h)

    def __sub__(self, other: "_Dual") -> "_Dual":
        return _Dual(self.v - other.v, self.g - other.g, self.h - other.h)

    def __neg__(self) -> "_Dual":
        return _Dual(-self.v, -self.g, -self.h)

    def __mul__(self, other: "_Dual") -> "_Dual":
        cross = np.einsum("ki,kj->kij", self.g, other.g)
        return _Dual(
            self.v * other.v,
            self.g * other.v[:, None] + other.g * self.v[:, None],
            self.h * other.v[:, None, None] + other.h * self.v[:, None, None]
            + cross + cross.transpose(0, 2, 1),
        )

    def chain(self, f0, f1, f2) -> "_Dual":
        """Compose with a scalar function given its value and first two derivatives"""
        outer = np.einsum("ki,kj->kij", self.g, self.g)
        return _Dual(
            f0,
            f1[:, None] * self.g,
            f1[:, None, None] * self.h + f2[:, None, None] * outer,
        )


def _domain_check(ok: np.ndarray, message: str, node, points: np.ndarray):
    if not np.all(ok):
        first = int(np.flatnonzero(~ok)[0])
        raise ExpressionDomainError(message, render(node), points[first])


def _unary(func: str, a: _Dual, node, points):
    x = a.v
    if func == "sqrt":
        _domain_check(x > 0, "sqrt of non-positive value", node, points)
        root = np.sqrt(x)
        return a.chain(root, 0.5 / root, -0.25 / (x * root))
    if func == "log":
        _domain_check(x > 0, "log of non-positive value", node, points)
        return a.chain(np.log(x), 1.0 / x, -1.0 / (x * x))
    if func == "exp":
        e = np.exp(x)
        return a.chain(e, e, e)
    if func == "sin":
        s, c = np.sin(x), np.cos(x)
        return a.chain(s, c, -s)
    if func == "cos":
        s, c = np.sin(x), np.cos(x)
        return a.chain(c, -s, -c)
    if func == "sinh":
        s, c = np.sinh(x), np.cosh(x)
        return a.chain(s, c, s)
    if func == "cosh":
        s, c = np.sinh(x), np.cosh(x)
        return a.chain(c, s, c)
    if func == "asinh":
        q = 1.0 + x * x
        return a.chain(np.arcsinh(x), 1.0 / np.sqrt(q), -x / (q * np.sqrt(q)))
    raise TypeError(f"unknown function {func}")


def _power(a: _Dual, p: float, node, points):
    x = a.v
    if p == 0.0:
        return a.chain(np.ones_like(x), np.zeros_like(x), np.zeros_like(x))
    if p.is_integer():
        if p < 0:
            _domain_check(x != 0, "negative power of zero", node, points)
        f1 = p * x ** (p - 1) if p != 1 else np.ones_like(x)
        f2 = p * (p - 1) * x ** (p - 2) if p not in (1.0, 2.0) else np.full_like(x, p * (p - 1))
        return a.chain(x**p, f1, f2)
    # non-integer powers need a positive base, or zero when the Hessian stays finite
    _domain_check((x > 0) | ((x == 0) & (p >= 2)), "non-integer power of non-positive value", node, points)
    return a.chain(x**p, p * x ** (p - 1), p * (p - 1) * x ** (p - 2))


def _finite(d: _Dual, node, points) -> _Dual:
    ok = np.isfinite(d.v) & np.all(np.isfinite(d.g), axis=1) & np.all(np.isfinite(d.h), axis=(1, 2))
    _domain_check(ok, "non-finite value or derivative", node, points)
    return d


def _evaluate_node(node, points: np.ndarray) -> _Dual:
    size, n = points.shape
    match node:
        case Const(value=v):
            return _Dual.constant(v, size, n)
        case Var(index=i):
            g = np.zeros((size, n))
            g[:, i - 1] = 1.0
            return _Dual(points[:, i - 1].copy(), g, np.zeros((size, n, n)))
        case Neg(arg=a):
            return -_evaluate_node(a, points)
        case BinOp(op=op, left=left, right=right):
            a = _evaluate_node(left, points)
            b = _evaluate_node(right, points)
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return _finite(a * b, node, points)
            _domain_check(b.v != 0, "division by zero", node, points)
            x = b.v
            return _finite(a * b.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)), node, points)
        case Pow(base=b, power=p):
            return _finite(_power(_evaluate_node(b, points), p, node, points), node, points)
        case Call(func=f, arg=a):
            return _finite(_unary(f, _evaluate_node(a, points), node, points), node, points)
    raise TypeError(f"unknown node {node!r}")


def _evaluate(node, points: np.ndarray) -> JetBatch:
    with np.errstate(all="ignore"):
        d = _finite(_evaluate_node(node, points), node, points)
    return JetBatch(d.v, d.g, d.h)


def _as_points(expr: Expression, points) -> np.ndarray:
    array = np.asarray(points, dtype=float)
    if array.ndim == 1:
        array = array[None, :]
    if array.ndim != 2 or array.shape[1] != expr.arity:
        raise ExpressionArityError(
            f"arity mismatch: expression has n = {expr.arity}, points have shape {np.shape(points)}"
        )
    return array


def evaluate_jets(expr: Expression, points) -> JetBatch:
    """Value/gradient/Hessian at every row of an (N, n) array of points"""
    array = _as_points(expr, points)
    logger.debug("evaluating %d jets of '%s'", array.shape[0], expr.text)
    return _evaluate(expr.ast, array)


def evaluate_jet(expr: Expression, point) -> Jet:
    """Value/gradient/Hessian at a single point of length n"""
    point = np.asarray(point, dtype=float)
    if point.ndim != 1:
        raise ExpressionArityError(f"a point must be a flat sequence of {expr.arity} reals")
    return evaluate_jets(expr, point)[0]
