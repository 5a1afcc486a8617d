"""Expression trees, a precedence-climbing parser, and forward-mode gradients.

Grammar (whitespace-insensitive, ``#`` comments to end of line)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative, binds tighter than '-'
    atom   := number | 'pi' | 'e' | x<k> | func '(' expr ')' | '(' expr ')'

``**`` is accepted as a synonym for ``^``. Functions: sin, cos, exp, log, sqrt.
``abs`` is deliberately absent: every function must be C^1.

Differentiability of ``sqrt`` at 0 cannot be checked syntactically; gradients
there raise :class:`DomainError` and it is up to the user not to put a
candidate point on such a kink.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParseError, UnknownIdentifier, VariableOutOfRange

__all__ = [
    "Expr", "Const", "Var", "Neg", "Add", "Sub", "Mul", "Div", "Pow", "Call",
    "DualScalar", "ProblemSpec",
    "parse_expression", "parse_problem_file", "load_problem",
    "eval_value", "eval_gradient",
]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
CONSTANTS = {"pi": math.pi, "e": math.e}

# beyond this, integer powers go through the generic real-power path
_MAX_INT_EXPONENT = 2**31


# ---------------------------------------------------------------------------
# forward-mode dual numbers
# ---------------------------------------------------------------------------

class DualScalar:
    """A value together with its gradient with respect to all d variables."""

    __slots__ = ("value", "partials")

    def __init__(self, value: float, partials: np.ndarray):
        self.value = float(value)
        self.partials = partials

    @classmethod
    def constant(cls, value: float, d: int) -> DualScalar:
        return cls(value, np.zeros(d))

    @classmethod
    def variable(cls, value: float, index: int, d: int) -> DualScalar:
        p = np.zeros(d)
        p[index] = 1.0
        return cls(value, p)

    def _lift(self, other) -> DualScalar:
        if isinstance(other, DualScalar):
            return other
        return DualScalar(float(other), np.zeros_like(self.partials))

    def __add__(self, other):
        o = self._lift(other)
        return DualScalar(self.value + o.value, self.partials + o.partials)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        return DualScalar(self.value - o.value, self.partials - o.partials)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return DualScalar(-self.value, -self.partials)

    def __mul__(self, other):
        o = self._lift(other)
        return DualScalar(self.value * o.value,
                          self.value * o.partials + o.value * self.partials)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o.value == 0.0:
            raise DomainError("division by zero")
        q = self.value / o.value
        return DualScalar(q, (self.partials - q * o.partials) / o.value)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, other):
        return _pow(self, self._lift(other))

    def __repr__(self) -> str:
        return f"DualScalar({self.value!r}, {self.partials!r})"


def _int_exponent(b: float) -> int | None:
    if b == math.floor(b) and abs(b) <= _MAX_INT_EXPONENT:
        return int(b)
    return None


def _ipow(a, k: int):
    """a**k by repeated squaring; works for negative bases and for duals."""
    if k < 0:
        if (a.value if isinstance(a, DualScalar) else a) == 0.0:
            raise DomainError("zero raised to a negative power")
        return 1.0 / _ipow(a, -k)
    result = None
    base = a
    while k:
        if k & 1:
            result = base if result is None else result * base
        k >>= 1
        if k:
            base = base * base
    if result is None:
        return DualScalar.constant(1.0, a.partials.size) if isinstance(a, DualScalar) else 1.0
    return result


def _fpow(a: float, b: float) -> float:
    k = _int_exponent(b)
    if k is not None:
        return float(_ipow(a, k))
    if a <= 0.0:
        raise DomainError(f"non-integer power {b!r} of non-positive base {a!r}")
    return a**b


def _pow(a: DualScalar, b: DualScalar) -> DualScalar:
    k = _int_exponent(b.value)
    exponent_varies = bool(np.any(b.partials))
    if k is not None:
        out = _ipow(a, k)
        if not exponent_varies:
            return out
        if a.value <= 0.0:
            raise DomainError("variable exponent requires a positive base")
        return DualScalar(out.value, out.partials + out.value * math.log(a.value) * b.partials)
    if a.value <= 0.0:
        raise DomainError(f"non-integer power {b.value!r} of non-positive base {a.value!r}")
    val = a.value**b.value
    partials = b.value * a.value ** (b.value - 1.0) * a.partials
    if exponent_varies:
        partials = partials + val * math.log(a.value) * b.partials
    return DualScalar(val, partials)


def _fcall(name: str, u: float) -> float:
    if name == "sin":
        return math.sin(u)
    if name == "cos":
        return math.cos(u)
    if name == "exp":
        return math.exp(u)
    if name == "log":
        if u <= 0.0:
            raise DomainError(f"log of non-positive value {u!r}")
        return math.log(u)
    if name == "sqrt":
        if u < 0.0:
            raise DomainError(f"sqrt of negative value {u!r}")
        return math.sqrt(u)
    raise AssertionError(name)


def _dcall(name: str, u: DualScalar) -> DualScalar:
    v = u.value
    if name == "sin":
        return DualScalar(math.sin(v), math.cos(v) * u.partials)
    if name == "cos":
        return DualScalar(math.cos(v), -math.sin(v) * u.partials)
    if name == "exp":
        ev = math.exp(v)
        return DualScalar(ev, ev * u.partials)
    if name == "log":
        if v <= 0.0:
            raise DomainError(f"log of non-positive value {v!r}")
        return DualScalar(math.log(v), u.partials / v)
    if name == "sqrt":
        if v < 0.0:
            raise DomainError(f"sqrt of negative value {v!r}")
        if v == 0.0:
            raise DomainError("sqrt is not differentiable at 0")
        r = math.sqrt(v)
        return DualScalar(r, u.partials / (2.0 * r))
    raise AssertionError(name)


# ---------------------------------------------------------------------------
# expression tree
# ---------------------------------------------------------------------------

class Expr:
    """Base class of the immutable expression tree."""

    __slots__ = ()
    precedence = 100

    def value(self, x) -> float:
        raise NotImplementedError

    def dual(self, x, d: int) -> DualScalar:
        raise NotImplementedError

    def max_index(self) -> int:
        """Largest variable index referenced, or -1."""
        raise NotImplementedError


@dataclass(frozen=True, slots=True)
class Const(Expr):
    val: float

    def value(self, x):
        return self.val

    def dual(self, x, d):
        return DualScalar.constant(self.val, d)

    def max_index(self):
        return -1

    def __str__(self):
        if self.val == math.pi:
            return "pi"
        if self.val == math.e:
            return "e"
        return repr(self.val) if self.val != int(self.val) or abs(self.val) > 1e15 else str(int(self.val))


@dataclass(frozen=True, slots=True)
class Var(Expr):
    index: int

    def value(self, x):
        return float(x[self.index])

    def dual(self, x, d):
        return DualScalar.variable(x[self.index], self.index, d)

    def max_index(self):
        return self.index

    def __str__(self):
        return f"x{self.index}"


@dataclass(frozen=True, slots=True)
class Neg(Expr):
    operand: Expr
    precedence = 3

    def value(self, x):
        return -self.operand.value(x)

    def dual(self, x, d):
        return -self.operand.dual(x, d)

    def max_index(self):
        return self.operand.max_index()

    def __str__(self):
        return f"-{_wrap(self.operand, self.precedence)}"


@dataclass(frozen=True, slots=True)
class BinOp(Expr):
    left: Expr
    right: Expr
    symbol = "?"

    def max_index(self):
        return max(self.left.max_index(), self.right.max_index())

    def __str__(self):
        # left-associative ops need parentheses on an equal-precedence right operand
        return (f"{_wrap(self.left, self.precedence)} {self.symbol} "
                f"{_wrap(self.right, self.precedence + 1)}")


@dataclass(frozen=True, slots=True)
class Add(BinOp):
    symbol = "+"
    precedence = 1

    def value(self, x):
        return self.left.value(x) + self.right.value(x)

    def dual(self, x, d):
        return self.left.dual(x, d) + self.right.dual(x, d)


@dataclass(frozen=True, slots=True)
class Sub(BinOp):
    symbol = "-"
    precedence = 1

    def value(self, x):
        return self.left.value(x) - self.right.value(x)

    def dual(self, x, d):
        return self.left.dual(x, d) - self.right.dual(x, d)


@dataclass(frozen=True, slots=True)
class Mul(BinOp):
    symbol = "*"
    precedence = 2

    def value(self, x):
        return self.left.value(x) * self.right.value(x)

    def dual(self, x, d):
        return self.left.dual(x, d) * self.right.dual(x, d)


@dataclass(frozen=True, slots=True)
class Div(BinOp):
    symbol = "/"
    precedence = 2

    def value(self, x):
        den = self.right.value(x)
        if den == 0.0:
            raise DomainError("division by zero")
        return self.left.value(x) / den

    def dual(self, x, d):
        return self.left.dual(x, d) / self.right.dual(x, d)


@dataclass(frozen=True, slots=True)
class Pow(BinOp):
    symbol = "^"
    precedence = 4

    def value(self, x):
        return _fpow(self.left.value(x), self.right.value(x))

    def dual(self, x, d):
        return _pow(self.left.dual(x, d), self.right.dual(x, d))

    def __str__(self):
        # right-associative
        return f"{_wrap(self.left, self.precedence + 1)}^{_wrap(self.right, self.precedence)}"


@dataclass(frozen=True, slots=True)
class Call(Expr):
    func: str
    arg: Expr

    def value(self, x):
        return _fcall(self.func, self.arg.value(x))

    def dual(self, x, d):
        return _dcall(self.func, self.arg.dual(x, d))

    def max_index(self):
        return self.arg.max_index()

    def __str__(self):
        return f"{self.func}({self.arg})"


def _wrap(e: Expr, min_prec: int) -> str:
    s = str(e)
    if e.precedence < min_prec or (isinstance(e, Const) and e.val < 0):
        return f"({s})"
    return s


# ---------------------------------------------------------------------------
# evaluation entry points
# ---------------------------------------------------------------------------

def _as_point(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("point must be a 1-d vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("point must be finite")
    return x


def eval_value(e: Expr, x) -> float:
    """Evaluate ``e`` at ``x``; domain violations raise :class:`DomainError`."""
    x = _as_point(x)
    if e.max_index() >= x.size:
        raise ValueError(f"expression uses x{e.max_index()} but point has length {x.size}")
    try:
        v = e.value(x)
    except (OverflowError, ZeroDivisionError) as err:
        raise DomainError(str(err)) from err
    if not math.isfinite(v):
        raise DomainError("non-finite result")
    return v


def eval_gradient(e: Expr, x) -> tuple[float, np.ndarray]:
    """Value and exact (forward-mode) gradient of ``e`` at ``x``."""
    x = _as_point(x)
    if e.max_index() >= x.size:
        raise ValueError(f"expression uses x{e.max_index()} but point has length {x.size}")
    try:
        with np.errstate(all="ignore"):
            r = e.dual(x, x.size)
    except (OverflowError, ZeroDivisionError) as err:
        raise DomainError(str(err)) from err
    if not (math.isfinite(r.value) and np.all(np.isfinite(r.partials))):
        raise DomainError("non-finite result")
    return r.value, r.partials.copy()


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),])
""", re.VERBOSE)

_VAR = re.compile(r"x(\d+)")


@dataclass(frozen=True, slots=True)
class _Tok:
    kind: str  # num | name | op | end
    text: str
    pos: int   # character offset


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", offset=_byte_offset(text, pos))
        kind = m.lastgroup
        if kind != "ws":
            tok = m.group()
            toks.append(_Tok(kind, "^" if tok == "**" else tok, pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, text: str, d: int):
        self.text = text
        self.d = d
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message, tok=None, cls=ParseError):
        tok = tok or self.tok
        return cls(message, offset=_byte_offset(self.text, tok.pos))

    def expect(self, text):
        if self.tok.text != text or self.tok.kind != "op":
            found = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
            raise self.error(f"syntax error: expected {text!r}, found {found}")
        self.i += 1

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"syntax error: unexpected {self.tok.text!r}")
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            right = self.term()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            right = self.unary()
            left = Mul(left, right) if op == "*" else Div(left, right)
        return left

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.i += 1
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.i += 1
            return Pow(base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Const(float(tok.text))
        if tok.kind == "name":
            self.i += 1
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg)
            if tok.text in CONSTANTS:
                return Const(CONSTANTS[tok.text])
            m = _VAR.fullmatch(tok.text)
            if m:
                k = int(m.group(1))
                if k >= self.d:
                    raise self.error(f"variable index out of range: x{k} with {self.d} variables",
                                     tok, VariableOutOfRange)
                return Var(k)
            raise self.error(f"unknown identifier {tok.text!r}", tok, UnknownIdentifier)
        if tok.kind == "op" and tok.text == "(":
            self.i += 1
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise self.error(f"syntax error: expected operand, found {found}")


def parse_expression(text: str, d: int) -> Expr:
    """Parse ``text`` into an expression over variables ``x0 .. x{d-1}``.

    >>> parse_expression("x0 + x1", 2)
    Add(left=Var(index=0), right=Var(index=1))
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    return _Parser(text, d).parse()


# ---------------------------------------------------------------------------
# problems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProblemSpec:
    """minimize objective(x) s.t. equalities == 0, inequalities <= 0, x in an open box.

    Constraints are numbered 1..n+m, equalities first, matching the
    ``f_1 .. f_{n+m}`` convention used throughout the package.
    """

    d: int
    objective: Expr
    equalities: tuple[Expr, ...] = ()
    inequalities: tuple[Expr, ...] = ()
    domain_box: tuple[tuple[float, float], ...] | None = None
    point: tuple[float, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        object.__setattr__(self, "equalities", tuple(self.equalities))
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        for e in (self.objective, *self.equalities, *self.inequalities):
            if e.max_index() >= self.d:
                raise VariableOutOfRange(f"x{e.max_index()} used with d = {self.d}")
        if self.domain_box is not None:
            box = tuple((float(lo), float(hi)) for lo, hi in self.domain_box)
            if len(box) != self.d:
                raise ValueError("domain_box needs one interval per coordinate")
            for lo, hi in box:
                if not lo < hi:
                    raise ValueError(f"empty box interval ({lo}, {hi})")
            object.__setattr__(self, "domain_box", box)
        if self.point is not None:
            pt = tuple(float(v) for v in self.point)
            if len(pt) != self.d:
                raise ValueError(f"point has {len(pt)} coordinates, expected {self.d}")
            object.__setattr__(self, "point", pt)

    @classmethod
    def from_strings(cls, d, objective, equalities=(), inequalities=(), **kw) -> ProblemSpec:
        return cls(
            d,
            parse_expression(objective, d),
            tuple(parse_expression(s, d) for s in equalities),
            tuple(parse_expression(s, d) for s in inequalities),
            **kw,
        )

    @property
    def n(self) -> int:
        return len(self.equalities)

    @property
    def m(self) -> int:
        return len(self.inequalities)

    @property
    def constraints(self) -> tuple[Expr, ...]:
        return self.equalities + self.inequalities

    def constraint(self, i: int) -> Expr:
        """f_i for 1 <= i <= n + m; f_0 is the objective."""
        if i == 0:
            return self.objective
        if not 1 <= i <= self.n + self.m:
            raise IndexError(f"constraint index {i} outside 1..{self.n + self.m}")
        return self.constraints[i - 1]

    def is_equality(self, i: int) -> bool:
        return 1 <= i <= self.n

    def in_domain(self, x) -> bool:
        if self.domain_box is None:
            return True
        return all(lo < xi < hi for xi, (lo, hi) in zip(x, self.domain_box))


def _parse_real(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"not a real number: {tok!r}", line=lineno) from None


def parse_problem_file(text: str) -> ProblemSpec:
    """Parse the line-oriented problem format::

        vars 2
        minimize x0 + x1
        eq   x0^2 + x1^2 - 2     # f = 0
        ineq -x1                 # f <= 0
        box  0 -inf 10           # open interval on x0
        point -1 -1
    """
    d = None
    objective = None
    eqs: list[Expr] = []
    ineqs: list[Expr] = []
    box: dict[int, tuple[float, float]] = {}
    point = None

    def expr_at(src: str, lineno: int) -> Expr:
        try:
            return parse_expression(src, d)
        except ParseError as err:
            raise type(err)(err.reason, offset=err.offset, line=lineno) from None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, _, rest = line.partition(" ")
        keyword = keyword.strip()
        rest = rest.strip()
        if d is None and keyword != "vars":
            raise ParseError("missing vars declaration: the first line must be 'vars <d>'",
                             line=lineno)
        if keyword == "vars":
            if d is not None:
                raise ParseError("duplicate vars declaration", line=lineno)
            if not rest.isdigit() or int(rest) < 1:
                raise ParseError(f"vars expects a positive integer, got {rest!r}", line=lineno)
            d = int(rest)
        elif keyword == "minimize":
            if objective is not None:
                raise ParseError("duplicate minimize line", line=lineno)
            if not rest:
                raise ParseError("minimize needs an expression", line=lineno)
            objective = expr_at(rest, lineno)
        elif keyword in ("eq", "ineq"):
            if not rest:
                raise ParseError(f"{keyword} needs an expression", line=lineno)
            (eqs if keyword == "eq" else ineqs).append(expr_at(rest, lineno))
        elif keyword == "box":
            parts = rest.split()
            if len(parts) != 3 or not parts[0].isdigit():
                raise ParseError("box expects '<k> <lo> <hi>'", line=lineno)
            k = int(parts[0])
            if k >= d:
                raise ParseError(f"box coordinate {k} out of range", line=lineno)
            if k in box:
                raise ParseError(f"duplicate box for coordinate {k}", line=lineno)
            lo, hi = _parse_real(parts[1], lineno), _parse_real(parts[2], lineno)
            if not lo < hi:
                raise ParseError(f"empty box interval ({lo}, {hi})", line=lineno)
            box[k] = (lo, hi)
        elif keyword == "point":
            if point is not None:
                raise ParseError("duplicate point line", line=lineno)
            vals = [_parse_real(t, lineno) for t in rest.replace(",", " ").split()]
            if len(vals) != d or not all(math.isfinite(v) for v in vals):
                raise ParseError(f"point needs {d} finite coordinates", line=lineno)
            point = tuple(vals)
        else:
            raise ParseError(f"malformed line: unknown keyword {keyword!r}", line=lineno)

    if d is None:
        raise ParseError("missing vars declaration")
    if objective is None:
        raise ParseError("missing minimize line")
    domain_box = None
    if box:
        inf = math.inf
        domain_box = tuple(box.get(k, (-inf, inf)) for k in range(d))
    return ProblemSpec(d, objective, tuple(eqs), tuple(ineqs), domain_box, point)


def load_problem(path) -> ProblemSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_problem_file(fh.read())
