"""Integrand/tail-rule expression DSL: parser, evaluator, truncation.

Grammar (EBNF, whitespace-insensitive)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | atom ('^' factor)?
    atom   := NUMBER | 'x[' expr ']' | IDENT | IDENT '(' args ')'
            | '(' expr ')'

'+', '-', '*', '/' are left-associative, '^' right-associative, unary
minus sits at factor level.  IDENT is one of the functions exp, log,
cosh, sqrt, abs, the keyword inf (aggregator bound only), the
aggregators sum/prod, or an index variable bound by an enclosing
aggregator.  Aggregators are written ``sum(i, lo, hi, body)`` /
``prod(i, lo, hi, body)`` with ``hi`` an expression or ``inf``.  There
is no implicit multiplication.

Evaluation is vectorized over a batch of points.  A point is a finite
coordinate block plus an optional tail provider giving x_i for indices
beyond the block, which is how limits of infinite aggregators are
evaluated at structured points (finitely supported ones use the zero
tail).
"""

import re
from dataclasses import dataclass

import numpy as np

from .config import ConvergenceConfig
from .errors import DomainError, OutOfRange, ParseError, UnboundIndex

__all__ = [
    "Num", "IndexVar", "Coord", "Unary", "Bin", "Call", "Agg", "INF",
    "parse", "pretty", "truncate", "eval_batch", "eval_point",
    "ZeroTail", "ConstantTail", "FunctionTail", "FUNCTIONS",
]


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------

class _Inf:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "inf"


INF = _Inf()


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class IndexVar:
    name: str


@dataclass(frozen=True)
class Coord:
    index: object  # expression over index variables


@dataclass(frozen=True)
class Unary:
    op: str  # '-'
    operand: object


@dataclass(frozen=True)
class Bin:
    op: str  # + - * / ^
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Call:
    fn: str  # exp log cosh sqrt abs
    arg: object


@dataclass(frozen=True)
class Agg:
    kind: str  # 'sum' | 'prod'
    var: str
    lo: object
    hi: object  # expression or INF
    body: object


FUNCTIONS = ("exp", "log", "cosh", "sqrt", "abs")
_KEYWORDS = set(FUNCTIONS) | {"sum", "prod", "inf", "x"}


# --------------------------------------------------------------------------
# Tokenizer
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()\[\],]))")


def _tokenize(src):
    tokens = []
    pos = 0
    n = len(src)
    while pos < n:
        m = _TOKEN_RE.match(src, pos)
        if m is None or m.end() == pos:
            # skip pure whitespace tail
            rest = src[pos:]
            if rest.strip() == "":
                break
            bad = pos + len(rest) - len(rest.lstrip())
            raise ParseError(bad, f"unexpected character {src[bad]!r}",
                             expected=("number", "identifier", "operator"))
        if m.group("num") is not None:
            tokens.append(("num", float(m.group("num")), m.start("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", None, n))
    return tokens


# --------------------------------------------------------------------------
# Parser (recursive descent)
# --------------------------------------------------------------------------

class _Parser:
    def __init__(self, src):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0
        self.bound = []  # stack of aggregator index variables

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val, pos = self.peek()
        if kind != "op" or val != op:
            raise ParseError(pos, f"expected {op!r}", expected=(op,))
        return self.advance()

    def parse(self):
        ast = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(pos, f"unexpected trailing input {val!r}",
                             expected=("end of input",))
        return ast

    def expr(self):
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                node = Bin(val, node, self.term())
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                node = Bin(val, node, self.factor())
            else:
                return node

    def factor(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Unary("-", self.factor())
        node = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            return Bin("^", node, self.factor())
        return node

    def atom(self):
        kind, val, pos = self.peek()
        if kind == "num":
            self.advance()
            return Num(val)
        if kind == "op" and val == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "ident":
            self.advance()
            if val == "x":
                self.expect_op("[")
                idx = self.expr()
                self.expect_op("]")
                return Coord(idx)
            if val in ("sum", "prod"):
                return self.aggregator(val, pos)
            if val in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(val, arg)
            if val == "inf":
                raise ParseError(pos, "'inf' is only valid as an "
                                 "aggregator upper bound")
            if val in self.bound:
                return IndexVar(val)
            raise UnboundIndex(
                f"index variable {val!r} is not bound by any enclosing "
                f"sum/prod (at offset {pos})")
        raise ParseError(pos, "expected expression",
                         expected=("number", "x[...]", "identifier", "("))

    def aggregator(self, agg_kind, agg_pos):
        self.expect_op("(")
        kind, var, pos = self.peek()
        if kind != "ident" or var in _KEYWORDS:
            raise ParseError(pos, "expected index variable name",
                             expected=("identifier",))
        if var in self.bound:
            raise ParseError(pos, f"index variable {var!r} already bound")
        self.advance()
        self.expect_op(",")
        lo = self.expr()
        self.expect_op(",")
        kind, val, _ = self.peek()
        if kind == "ident" and val == "inf":
            self.advance()
            hi = INF
        else:
            hi = self.expr()
        self.expect_op(",")
        self.bound.append(var)
        try:
            body = self.expr()
        finally:
            self.bound.pop()
        self.expect_op(")")
        return Agg(agg_kind, var, lo, hi, body)


def parse(src):
    """Parse source text into an AST.

    Raises ParseError on malformed input (with byte offset) and
    UnboundIndex when an index variable escapes every aggregator.
    """
    return _Parser(src).parse()


# --------------------------------------------------------------------------
# Pretty printer (round-trips through parse)
# --------------------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _fmt_num(v):
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _pp(node, prec):
    if isinstance(node, Num):
        s, p = _fmt_num(node.value), _PREC_ATOM
    elif isinstance(node, IndexVar):
        s, p = node.name, _PREC_ATOM
    elif isinstance(node, Coord):
        s, p = f"x[{_pp(node.index, 0)}]", _PREC_ATOM
    elif isinstance(node, Call):
        s, p = f"{node.fn}({_pp(node.arg, 0)})", _PREC_ATOM
    elif isinstance(node, Agg):
        hi = "inf" if node.hi is INF else _pp(node.hi, 0)
        s = (f"{node.kind}({node.var},{_pp(node.lo, 0)},{hi},"
             f"{_pp(node.body, 0)})")
        p = _PREC_ATOM
    elif isinstance(node, Unary):
        s, p = "-" + _pp(node.operand, _PREC_UNARY), _PREC_UNARY
    elif isinstance(node, Bin):
        if node.op in "+-":
            p = _PREC_ADD
            s = f"{_pp(node.lhs, p)} {node.op} {_pp(node.rhs, p + 1)}"
        elif node.op in "*/":
            p = _PREC_MUL
            s = f"{_pp(node.lhs, p)}{node.op}{_pp(node.rhs, p + 1)}"
        else:  # '^', right-associative, binds tighter than unary minus
            p = _PREC_POW
            s = f"{_pp(node.lhs, p + 1)}^{_pp(node.rhs, p)}"
    else:
        raise TypeError(f"not an AST node: {node!r}")
    return f"({s})" if p < prec else s


def pretty(ast):
    """Render an AST as parseable source text."""
    return _pp(ast, 0)


# --------------------------------------------------------------------------
# Truncation
# --------------------------------------------------------------------------

def truncate(ast, n):
    """Truncate to the first n coordinates.

    Infinite aggregators are capped at n; free coordinates x[j] with a
    literal index j > n are replaced by 0.  Bodies whose coordinate
    index is the aggregator variable stay in range automatically once
    the bound is capped.  Result references only x[1..n] for the
    supported index shapes; idempotent.
    """
    if isinstance(ast, (Num, IndexVar)):
        return ast
    if isinstance(ast, Coord):
        if isinstance(ast.index, Num) and ast.index.value > n:
            return Num(0.0)
        return ast
    if isinstance(ast, Unary):
        return Unary(ast.op, truncate(ast.operand, n))
    if isinstance(ast, Call):
        return Call(ast.fn, truncate(ast.arg, n))
    if isinstance(ast, Bin):
        return Bin(ast.op, truncate(ast.lhs, n), truncate(ast.rhs, n))
    if isinstance(ast, Agg):
        hi = ast.hi
        if hi is INF:
            hi = Num(float(n))
        else:
            hi = truncate(hi, n)
        if isinstance(ast.lo, Num) and ast.lo.value > n and ast.hi is INF:
            return Num(0.0 if ast.kind == "sum" else 1.0)
        return Agg(ast.kind, ast.var, truncate(ast.lo, n), hi,
                   truncate(ast.body, n))
    raise TypeError(f"not an AST node: {ast!r}")


# --------------------------------------------------------------------------
# Tail providers: x_i for indices beyond the explicit coordinate block
# --------------------------------------------------------------------------

class ZeroTail:
    cache_key = "zero"

    def block(self, i0, i1):
        return np.zeros(i1 - i0)


class ConstantTail:
    def __init__(self, value):
        self.value = float(value)
        self.cache_key = ("const", self.value)

    def block(self, i0, i1):
        return np.full(i1 - i0, self.value)


class FunctionTail:
    """Tail coordinates given by a vectorized rule i -> x_i."""

    def __init__(self, fn, key):
        self.fn = fn
        self.cache_key = ("fn", key)

    def block(self, i0, i1):
        return np.asarray(self.fn(np.arange(i0, i1, dtype=float)),
                          dtype=float)


_ZERO_TAIL = ZeroTail()

# Budget for numerically accumulated aggregator tails at structured
# points.  Sup-gap estimation needs ~1e-6 absolute accuracy, not the
# integration tolerance, so the budget is deliberately modest.
EVAL_TAIL_CFG = ConvergenceConfig(tol=1e-9, max_terms=2**22, window=6)


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------

class _Ctx:
    __slots__ = ("coords", "npts", "ncols", "tail", "env", "cfg", "cache")

    def __init__(self, coords, tail, env, cfg, cache):
        self.coords = coords
        self.npts, self.ncols = coords.shape
        self.tail = tail
        self.env = env
        self.cfg = cfg
        self.cache = cache


def _check_pow(base, expo):
    b = np.asarray(base)
    e = np.asarray(expo)
    if np.any(b < 0):
        ints = np.equal(np.mod(e, 1.0), 0.0)
        if not np.all(np.logical_or(b >= 0, ints)):
            raise DomainError("negative base with non-integer exponent")
    if np.any(np.logical_and(b == 0, e < 0)):
        raise DomainError("0 raised to a negative power")


def _apply_call(fn, val):
    if fn == "exp":
        return np.exp(val)
    if fn == "log":
        if np.any(np.asarray(val) <= 0):
            raise DomainError("log of a nonpositive value")
        return np.log(val)
    if fn == "cosh":
        return np.cosh(val)
    if fn == "sqrt":
        if np.any(np.asarray(val) < 0):
            raise DomainError("sqrt of a negative value")
        return np.sqrt(val)
    if fn == "abs":
        return np.abs(val)
    raise DomainError(f"unknown function {fn!r}")


def _ev_index(node, env):
    """Evaluate an index expression to scalars/vectors of integers."""
    v = _ev_scalar(node, env)
    r = np.round(v)
    if np.any(np.abs(v - r) > 1e-9):
        raise OutOfRange(f"non-integer coordinate index {v!r}")
    return r.astype(np.int64) if isinstance(r, np.ndarray) else int(r)


def _ev_scalar(node, env):
    """Evaluate index-level expressions (no coordinate references)."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, IndexVar):
        try:
            return env[node.name]
        except KeyError:
            raise UnboundIndex(f"unbound index variable {node.name!r}")
    if isinstance(node, Unary):
        return -_ev_scalar(node.operand, env)
    if isinstance(node, Call):
        return _apply_call(node.fn, _ev_scalar(node.arg, env))
    if isinstance(node, Bin):
        a = _ev_scalar(node.lhs, env)
        b = _ev_scalar(node.rhs, env)
        return _apply_bin(node.op, a, b)
    if isinstance(node, Coord):
        raise OutOfRange("coordinate reference inside an index expression")
    if isinstance(node, Agg):
        raise OutOfRange("aggregator inside an index expression")
    raise TypeError(f"not an AST node: {node!r}")


def _apply_bin(op, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if np.any(np.asarray(b) == 0):
            raise DomainError("division by zero")
        return a / b
    if op == "^":
        _check_pow(a, b)
        # huge intermediate bases (e.g. 2^i deep in a tail) may overflow
        # to inf; downstream 1/inf -> 0 is the intended limit value
        with np.errstate(over="ignore"):
            return np.power(a, b)
    raise DomainError(f"unknown operator {op!r}")


def _vectorizable(node, var):
    """True when an aggregator body can be evaluated on an (npts, m)
    grid in one pass: coordinates indexed only by the aggregator
    variable or literals, no nested aggregators."""
    if isinstance(node, (Num, IndexVar)):
        return True
    if isinstance(node, Coord):
        return isinstance(node.index, (IndexVar, Num))
    if isinstance(node, Unary):
        return _vectorizable(node.operand, var)
    if isinstance(node, Call):
        return _vectorizable(node.arg, var)
    if isinstance(node, Bin):
        return (_vectorizable(node.lhs, var)
                and _vectorizable(node.rhs, var))
    if isinstance(node, Agg):
        return False
    return False


def _gather_columns(ctx, idx):
    """Columns x_idx as an (npts, m) matrix, idx an int64 vector."""
    if np.any(idx < 1):
        raise OutOfRange(f"coordinate index {int(idx.min())} < 1")
    out = np.empty((ctx.npts, idx.size))
    inside = idx <= ctx.ncols
    if np.any(inside):
        out[:, inside] = ctx.coords[:, idx[inside] - 1]
    if not np.all(inside):
        if ctx.tail is None:
            raise OutOfRange(
                f"coordinate index {int(idx[~inside][0])} beyond the "
                f"{ctx.ncols}-column point block (no tail rule)")
        outside = idx[~inside]
        lo, hi = int(outside.min()), int(outside.max())
        vals = ctx.tail.block(lo, hi + 1)[outside - lo]
        out[:, ~inside] = vals[np.newaxis, :]
    return out


def _ev(node, ctx):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, IndexVar):
        return _ev_scalar(node, ctx.env)
    if isinstance(node, Coord):
        idx = _ev_index(node.index, ctx.env)
        if isinstance(idx, np.ndarray):
            return _gather_columns(ctx, idx)
        return _gather_columns(ctx, np.array([idx], dtype=np.int64))[:, 0]
    if isinstance(node, Unary):
        return -_ev(node.operand, ctx)
    if isinstance(node, Call):
        return _apply_call(node.fn, _ev(node.arg, ctx))
    if isinstance(node, Bin):
        return _apply_bin(node.op, _ev(node.lhs, ctx), _ev(node.rhs, ctx))
    if isinstance(node, Agg):
        return _ev_agg(node, ctx)
    raise TypeError(f"not an AST node: {node!r}")


def _ev_agg(node, ctx):
    lo = _ev_index(node.lo, ctx.env)
    if isinstance(lo, np.ndarray):
        raise OutOfRange("aggregator bound must be a scalar")
    if node.hi is INF:
        hi = None
    else:
        hi = _ev_index(node.hi, ctx.env)
        if isinstance(hi, np.ndarray):
            raise OutOfRange("aggregator bound must be a scalar")

    is_sum = node.kind == "sum"
    explicit_hi = hi if hi is not None else ctx.ncols
    acc = _agg_explicit(node, ctx, lo, explicit_hi, is_sum)
    if hi is None:
        tail = _agg_tail(node, ctx, max(lo, ctx.ncols + 1), is_sum)
        acc = acc + tail if is_sum else acc * tail
    return acc


def _agg_explicit(node, ctx, lo, hi, is_sum):
    if hi < lo:
        return 0.0 if is_sum else 1.0
    if _vectorizable(node.body, node.var):
        env = dict(ctx.env)
        env[node.var] = np.arange(lo, hi + 1, dtype=float)
        sub = _Ctx(ctx.coords, ctx.tail, env, ctx.cfg, ctx.cache)
        vals = _ev(node.body, sub)
        vals = np.broadcast_to(np.asarray(vals, dtype=float),
                               (ctx.npts, hi - lo + 1))
        return vals.sum(axis=1) if is_sum else vals.prod(axis=1)
    acc = np.full(ctx.npts, 0.0 if is_sum else 1.0)
    for i in range(lo, hi + 1):
        env = dict(ctx.env)
        env[node.var] = float(i)
        sub = _Ctx(ctx.coords, ctx.tail, env, ctx.cfg, ctx.cache)
        v = _ev(node.body, sub)
        acc = acc + v if is_sum else acc * v
    return acc


def _agg_tail(node, ctx, lo, is_sum):
    """Scalar limit of the aggregator over indices beyond the point
    block, where coordinates come from the tail provider."""
    if ctx.tail is None:
        raise OutOfRange(
            "infinite aggregator needs a tail rule beyond the point block")
    if not _vectorizable(node.body, node.var):
        raise OutOfRange(
            "infinite aggregator tail requires a body indexed only by "
            "the aggregator variable")
    key = (id(node), ctx.tail.cache_key, ctx.ncols, lo,
           tuple(sorted((k, v) for k, v in ctx.env.items()
                        if np.isscalar(v))))
    if key in ctx.cache:
        return ctx.cache[key]

    empty = np.zeros((1, ctx.ncols))

    def block(i0, i1):
        env = dict(ctx.env)
        env[node.var] = np.arange(i0, i1, dtype=float)
        sub = _Ctx(empty, ctx.tail, env, ctx.cfg, ctx.cache)
        return np.broadcast_to(np.asarray(_ev(node.body, sub), dtype=float),
                               (1, i1 - i0))[0]

    val = _scalar_limit(block, lo, is_sum, ctx.cfg)
    ctx.cache[key] = val
    return val


def _scalar_limit(block, lo, is_sum, cfg):
    """Plain doubling-Cauchy accumulation of a scalar sum/product tail."""
    acc = 0.0 if is_sum else 1.0
    prev = None
    hits = 0
    i = lo
    chk = max(2 * lo, lo + 2)
    step = 2**14
    while i - lo < cfg.max_terms:
        j = min(chk, i + step)
        vals = block(i, j)
        if is_sum:
            acc += float(np.sum(vals))
        else:
            acc *= float(np.prod(vals))
            if acc == 0.0:
                return 0.0
        i = j
        if i >= chk:
            if prev is not None:
                if abs(acc - prev) < cfg.tol * max(1.0, abs(acc)):
                    hits += 1
                    if hits >= 2:
                        return acc
                else:
                    hits = 0
            prev = acc
            chk *= 2
    return acc  # budget-limited estimate; accuracy documented in EVAL_TAIL_CFG


def eval_batch(ast, coords, tail=_ZERO_TAIL, env=None, cfg=EVAL_TAIL_CFG):
    """Evaluate an AST on a batch of points.

    Parameters
    ----------
    ast : AST node
    coords : (npts, d) or (d,) array
        Explicit coordinate block x_1..x_d per point.
    tail : tail provider or None
        Supplies x_i for i > d (finitely supported points use the zero
        tail).  None forbids any reference beyond the block.
    env : dict, optional
        Pre-bound index variables.
    cfg : ConvergenceConfig
        Budget for numerically accumulated infinite-aggregator tails.

    Returns
    -------
    (npts,) float ndarray
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    ctx = _Ctx(coords, tail, dict(env or {}), cfg, {})
    out = _ev(ast, ctx)
    return np.broadcast_to(np.asarray(out, dtype=float),
                           (coords.shape[0],)).copy()


def eval_point(ast, point, tail=_ZERO_TAIL, env=None):
    """Evaluate at a single point (sequence of coordinates); scalar out."""
    arr = np.asarray(point, dtype=float)
    if arr.ndim == 0:
        arr = arr[np.newaxis]
    return float(eval_batch(ast, arr[np.newaxis, :], tail=tail, env=env)[0])
