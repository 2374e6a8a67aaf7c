"""Expression trees for rule guards, goal predicates and commands.

Expressions are compiled once into nested closures evaluated against a
`Ctx` (configuration, current motif, parameter binding).  Two partiality
conventions keep guards total:

- an undefined address (`UNDEF`) makes any comparison false; arithmetic
  on it is an `EvalError`;
- a reference to an unbound optional parameter makes the enclosing
  boolean atom false.
"""

from fractions import Fraction

from .errors import EvalError
from .model import UNREACHABLE


class _Undefined:
    __slots__ = ()

    def __repr__(self):
        return "UNDEF"


#: The value of an undefined address lookup.
UNDEF = _Undefined()


class UnboundParam(Exception):
    """An optional rule parameter was left unbound."""


class Ctx:
    __slots__ = ("cfg", "motif", "binding")

    def __init__(self, cfg, motif=None, binding=None):
        self.cfg = cfg
        self.motif = motif
        self.binding = binding if binding is not None else {}


def fmt_num(v):
    """Canonical text for a numeric literal."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    f = Fraction(v)
    if f.denominator == 1:
        return f"{f.numerator}.0"
    # decimal expansion when the denominator divides a power of ten
    den = f.denominator
    k = 0
    while den % 2 == 0:
        den //= 2
        k += 1
    while den % 5 == 0:
        den //= 5
        k += 1
    if den == 1:
        digits = max(k, 1)
        scaled = f * 10**digits
        sign = "-" if scaled < 0 else ""
        n = abs(int(scaled))
        whole, frac = divmod(n, 10**digits)
        return f"{sign}{whole}.{str(frac).rjust(digits, '0')}"
    return f"{f.numerator}/{f.denominator}"


class Expr:
    __slots__ = ()
    prec = 8

    def unparse(self):
        raise NotImplementedError

    def sub(self, child):
        s = child.unparse()
        if child.prec < self.prec:
            return f"({s})"
        return s

    def __repr__(self):
        return f"<expr {self.unparse()}>"

    def __eq__(self, other):
        return type(self) is type(other) and self.unparse() == other.unparse()

    def __hash__(self):
        return hash(self.unparse())

    def compile(self, params):
        """Return a closure `f(ctx) -> value`.

        `params` is the set of rule-parameter names; other identifiers
        resolve directly as component ids.
        """
        raise NotImplementedError


def _resolve(name, params):
    """Closure producing the component instance an owner name refers to."""
    if name in params:
        def get(ctx):
            cid = ctx.binding.get(name)
            if cid is None:
                raise UnboundParam(name)
            comp = ctx.cfg.components.get(cid)
            if comp is None:
                raise EvalError(f"parameter {name!r} bound to deleted component {cid!r}")
            return comp
        return get

    def get(ctx):
        comp = ctx.cfg.components.get(name)
        if comp is None:
            raise UnboundParam(name)
        return comp
    return get


def _resolve_id(name, params):
    if name in params:
        def get(ctx):
            cid = ctx.binding.get(name)
            if cid is None:
                raise UnboundParam(name)
            return cid
        return get
    return lambda ctx: name


def _motif_of(ctx, motif_name):
    if motif_name is not None:
        return ctx.cfg.motif(motif_name)
    if ctx.motif is None:
        raise EvalError("no motif context for map lookup")
    # the motif object may have been replaced on a clone; refetch by id
    return ctx.cfg.motif(ctx.motif.id)


class Lit(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def unparse(self):
        return fmt_num(self.value)

    def compile(self, params):
        v = self.value
        return lambda ctx: v


class Sym(Expr):
    """A bare identifier: enumeration value, mode name, or node name."""

    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name

    def unparse(self):
        return self.name

    def compile(self, params):
        n = self.name
        return lambda ctx: n


class VarRef(Expr):
    __slots__ = ("owner", "attr")

    def __init__(self, owner, attr):
        self.owner = owner
        self.attr = attr

    def unparse(self):
        return f"{self.owner}.{self.attr}"

    def compile(self, params):
        get = _resolve(self.owner, params)
        attr = self.attr

        def run(ctx):
            comp = get(ctx)
            try:
                return comp.state[attr]
            except KeyError:
                raise EvalError(f"type {comp.type.name!r} has no var {attr!r}")
        return run


class AddrRef(Expr):
    __slots__ = ("owner", "motif")

    def __init__(self, owner, motif=None):
        self.owner = owner
        self.motif = motif

    def unparse(self):
        if self.motif is None:
            return f"@({self.owner})"
        return f"@({self.owner}, {self.motif})"

    def compile(self, params):
        get = _resolve_id(self.owner, params)
        motif = self.motif

        def run(ctx):
            cid = get(ctx)
            mid = motif if motif is not None else (
                ctx.motif.id if ctx.motif is not None else None)
            if mid is None:
                raise EvalError("no motif context for address lookup")
            n = ctx.cfg.addresses.get((cid, mid))
            return UNDEF if n is None else n
        return run


class Placed(Expr):
    __slots__ = ("owner", "motif")

    def __init__(self, owner, motif=None):
        self.owner = owner
        self.motif = motif

    def unparse(self):
        if self.motif is None:
            return f"placed({self.owner})"
        return f"placed({self.owner}, {self.motif})"

    def compile(self, params):
        addr = AddrRef(self.owner, self.motif).compile(params)

        def run(ctx):
            try:
                return addr(ctx) is not UNDEF
            except UnboundParam:
                return False
        return run


class Member(Expr):
    __slots__ = ("owner", "motif")

    def __init__(self, owner, motif):
        self.owner = owner
        self.motif = motif

    def unparse(self):
        return f"member({self.owner}, {self.motif})"

    def compile(self, params):
        get = _resolve_id(self.owner, params)
        motif = self.motif

        def run(ctx):
            try:
                cid = get(ctx)
            except UnboundParam:
                return False
            return cid in ctx.cfg.motif(motif).members
        return run


class Empty(Expr):
    """True iff the argument is an existing node with no occupant."""

    __slots__ = ("node", "motif")

    def __init__(self, node, motif=None):
        self.node = node
        self.motif = motif

    def unparse(self):
        if self.motif is None:
            return f"empty({self.node.unparse()})"
        return f"empty({self.node.unparse()}, {self.motif})"

    def compile(self, params):
        node = self.node.compile(params)
        motif = self.motif

        def run(ctx):
            try:
                n = node(ctx)
            except UnboundParam:
                return False
            if n is UNDEF:
                return False
            m = _motif_of(ctx, motif)
            if n not in m.map.nodes:
                return False
            addrs = ctx.cfg.addresses
            mid = m.id
            for cid in m.members:
                if addrs.get((cid, mid)) == n:
                    return False
            return True
        return run


class Distance(Expr):
    __slots__ = ("a", "b", "motif")

    def __init__(self, a, b, motif=None):
        self.a = a
        self.b = b
        self.motif = motif

    def unparse(self):
        if self.motif is None:
            return f"distance({self.a.unparse()}, {self.b.unparse()})"
        return f"distance({self.a.unparse()}, {self.b.unparse()}, {self.motif})"

    def compile(self, params):
        fa = self.a.compile(params)
        fb = self.b.compile(params)
        motif = self.motif

        def run(ctx):
            a = fa(ctx)
            b = fb(ctx)
            if a is UNDEF or b is UNDEF:
                raise EvalError("distance over an undefined address")
            return _motif_of(ctx, motif).map.distance(a, b)
        return run


class Succ(Expr):
    """The unique out-neighbor of a node on the motif's map."""

    __slots__ = ("node", "motif")

    def __init__(self, node, motif=None):
        self.node = node
        self.motif = motif

    def unparse(self):
        if self.motif is None:
            return f"succ({self.node.unparse()})"
        return f"succ({self.node.unparse()}, {self.motif})"

    def compile(self, params):
        node = self.node.compile(params)
        motif = self.motif

        def run(ctx):
            n = node(ctx)
            if n is UNDEF:
                raise EvalError("succ of an undefined address")
            m = _motif_of(ctx, motif)
            if n not in m.map.nodes:
                raise EvalError(f"succ of non-node {n!r}")
            s = m.map.succ(n)
            return UNDEF if s is None else s
        return run


_CMP = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}

_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
}

_PREC = {"or": 1, "and": 2, "=": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
         "+": 5, "-": 5, "*": 6}


class Binary(Expr):
    __slots__ = ("op", "l", "r", "prec")

    def __init__(self, op, l, r):
        self.op = op
        self.l = l
        self.r = r
        self.prec = _PREC[op]

    def unparse(self):
        ls = self.l.unparse()
        if self.l.prec < self.prec:
            ls = f"({ls})"
        rs = self.r.unparse()
        # left-associative: parenthesize right child at equal precedence
        if self.r.prec <= self.prec and self.op not in ("and", "or"):
            rs = f"({rs})"
        elif self.r.prec < self.prec:
            rs = f"({rs})"
        return f"{ls} {self.op} {rs}"

    def compile(self, params):
        op = self.op
        fl = self.l.compile(params)
        fr = self.r.compile(params)

        if op in ("and", "or"):
            def as_bool(f):
                def run(ctx):
                    try:
                        v = f(ctx)
                    except UnboundParam:
                        return False
                    if not isinstance(v, bool):
                        raise EvalError(f"non-boolean operand of {op!r}: {v!r}")
                    return v
                return run
            bl, br = as_bool(fl), as_bool(fr)
            if op == "and":
                return lambda ctx: bl(ctx) and br(ctx)
            return lambda ctx: bl(ctx) or br(ctx)

        if op in _CMP:
            cmp = _CMP[op]

            def run(ctx):
                try:
                    a = fl(ctx)
                    b = fr(ctx)
                except UnboundParam:
                    return False
                if a is UNDEF or b is UNDEF:
                    return False
                try:
                    return cmp(a, b)
                except TypeError:
                    raise EvalError(
                        f"incomparable values {a!r} and {b!r} for {op!r}")
            return run

        fn = _ARITH[op]

        def run(ctx):
            a = fl(ctx)
            b = fr(ctx)
            if a is UNDEF or b is UNDEF:
                raise EvalError(f"arithmetic ({op!r}) on an undefined address")
            try:
                return fn(a, b)
            except TypeError:
                raise EvalError(f"bad operands for {op!r}: {a!r}, {b!r}")
        return run


class Unary(Expr):
    __slots__ = ("op", "e")
    prec = 7

    def __init__(self, op, e):
        self.op = op
        self.e = e

    def unparse(self):
        s = self.e.unparse()
        if self.e.prec < self.prec:
            s = f"({s})"
        if self.op == "not":
            return f"not {s}"
        return f"-{s}"

    def compile(self, params):
        f = self.e.compile(params)
        if self.op == "not":
            def run(ctx):
                try:
                    v = f(ctx)
                except UnboundParam:
                    return True
                if not isinstance(v, bool):
                    raise EvalError(f"'not' over non-boolean {v!r}")
                return not v
            return run

        def run(ctx):
            v = f(ctx)
            if v is UNDEF:
                raise EvalError("negation of an undefined address")
            try:
                return -v
            except TypeError:
                raise EvalError(f"bad operand for unary '-': {v!r}")
        return run


TRUE = Lit(True)


def compile_guard(expr, params):
    """Compile a guard; references to unbound optionals yield False."""
    f = expr.compile(params)

    def run(ctx):
        try:
            v = f(ctx)
        except UnboundParam:
            return False
        if not isinstance(v, bool):
            raise EvalError(f"guard is not boolean: {v!r}")
        return v
    return run
