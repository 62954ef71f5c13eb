r"""Final-answer extraction, parsing, and equivalence.

The parser is deliberately bounded. It accepts the kinds of strings short math
answers are written in and nothing more; anything it cannot parse degrades to
a normalized text form, never an exception.

Accepted surface syntax (after cleanup):

    expr     := term (('+'|'-') term)*
    term     := factor (('*'|'/')? factor)*      -- adjacency multiplies
    factor   := ('+'|'-')* power
    power    := atom ('^' exponent)?
    exponent := '{' expr '}' | factor
    atom     := number | \frac{...}{...} | \sqrt[n]{...} | \pi | letter
              | '(' expr ')' | '{' expr '}'

plus decimal and fraction literals. Divergences from strict LaTeX, chosen for
answer strings: an unbraced exponent consumes the whole next token (``x^12``
is x^12, not x^1*2), and a run of two or more letters is a parse failure
rather than an implicit product (words should not become variable products).
``e`` is Euler's constant, other single letters are opaque variables.

Cleanup applied before parsing, in order: leading "the answer is"-style
prose is stripped; dollar signs, ``\left``/``\right``, LaTeX spacing commands
and ``\text{...}``-style wrappers are dropped; degree and percent marks are
removed without rescaling the value; thousands separators inside digit groups
are removed. A top-level comma after all that makes the answer a sequence:
each component is parsed separately and the canonical components are joined,
so ``0.5, 1`` and ``\frac12, 1`` compare equal (as text forms).

Equivalence: two parsed forms with exact rational values compare exactly (no
tolerance, so 0.33 never equals 1/3). Anything else is compared numerically at
seeded sample points (complex-safe, relative tolerance 1e-9); text forms
compare by normalized string. Normalization for text removes all whitespace
and case-folds.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from . import expr as ex

__all__ = [
    "AnswerForm",
    "FormKind",
    "EquivalenceGrouper",
    "extract_boxed",
    "parse_answer",
    "equivalent",
    "group_estimates",
    "grade",
]


class FormKind(Enum):
    EXACT_RATIONAL = "exact_rational"
    DECIMAL = "decimal"
    SYMBOLIC = "symbolic"
    TEXT = "text"


@dataclass(frozen=True)
class AnswerForm:
    kind: FormKind
    raw: str  # the string as given, before cleanup
    tree: "ex.Expr | None" = None  # set for all kinds except TEXT
    text: str | None = None  # normalized text, set for TEXT
    decimal: str | None = None  # canonical decimal literal, set for DECIMAL

    def canonical(self) -> str:
        if self.kind is FormKind.TEXT:
            assert self.text is not None
            return self.text
        if self.kind is FormKind.DECIMAL:
            assert self.decimal is not None
            return self.decimal
        assert self.tree is not None
        return ex.render_expr(self.tree)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "raw": self.raw, "canonical": self.canonical()}


# --- boxed extraction --------------------------------------------------------

_BOX_MARKER = "\\boxed{"


def _backslash_escaped(text: str, i: int) -> bool:
    """True when text[i] is preceded by an odd number of backslashes."""
    n = 0
    j = i - 1
    while j >= 0 and text[j] == "\\":
        n += 1
        j -= 1
    return n % 2 == 1


def extract_boxed(text: str) -> str | None:
    """Contents of the last ``\\boxed{...}`` in text, or None.

    Brace matching is balanced and skips escaped braces. If the last
    occurrence never closes, the result is None.
    """
    start = text.rfind(_BOX_MARKER)
    if start < 0:
        return None
    i = start + len(_BOX_MARKER)
    depth = 1
    out: list[str] = []
    while i < len(text):
        c = text[i]
        if c == "{" and not _backslash_escaped(text, i):
            depth += 1
        elif c == "}" and not _backslash_escaped(text, i):
            depth -= 1
            if depth == 0:
                return "".join(out)
        out.append(c)
        i += 1
    return None


# --- cleanup -----------------------------------------------------------------

_LEAD_INS = (
    "the final answer is",
    "final answer is",
    "the final answer:",
    "final answer:",
    "the answer is",
    "answer is",
    "the answer:",
    "answer:",
)

_TEXT_WRAPPERS = r"(?:text|textbf|textit|mathrm|mathbf|mathit|mbox|operatorname)"
_WHOLE_TEXT_RE = re.compile(r"^\\" + _TEXT_WRAPPERS + r"\{([^{}]*)\}$")
_EMBEDDED_TEXT_RE = re.compile(r"\\" + _TEXT_WRAPPERS + r"\{[^{}]*\}")
_SPACING_RE = re.compile(r"\\(?:left|right|limits|displaystyle|[!,;:])|\\(?=\s)|~")
_DEGREE_RE = re.compile(r"\^\{?\\circ\}?|\\degree|°")
_THOUSANDS_RE = re.compile(r"(?<=\d),(?=\d{3}(?!\d))")
_QUAD_RE = re.compile(r"\\q?quad")


def _strip_lead_in(s: str) -> str:
    changed = True
    while changed:
        changed = False
        low = s.lower()
        for phrase in _LEAD_INS:
            if low.startswith(phrase):
                s = s[len(phrase):].lstrip(" :")
                changed = True
                break
    return s


def _cleanup(raw: str) -> str:
    s = raw.strip()
    s = _strip_lead_in(s)
    boxed = extract_boxed(s)
    if boxed is not None and s.startswith(_BOX_MARKER):
        s = boxed.strip()
    s = s.replace("\\$", "").replace("$", "")
    while True:
        m = _WHOLE_TEXT_RE.match(s.strip())
        if not m:
            break
        s = m.group(1).strip()
    s = _EMBEDDED_TEXT_RE.sub("", s)
    s = _QUAD_RE.sub(" ", s)
    s = _SPACING_RE.sub("", s)
    s = _DEGREE_RE.sub("", s)
    s = s.replace("\\%", "").replace("%", "")
    s = s.replace("×", "*").replace("÷", "/").replace("⋅", "*")
    s = s.replace("−", "-").replace("π", "\\pi")
    s = _THOUSANDS_RE.sub("", s)
    s = s.strip().rstrip(".,;:!? ")
    return s.strip()


def _norm_text(s: str) -> str:
    return "".join(s.split()).casefold()


# --- tokenizer ---------------------------------------------------------------


class _ParseFailure(Exception):
    pass


_NUMBER = "number"
_COMMAND = "command"
_LETTERS = "letters"
_OP = "op"

_TOKEN_RE = re.compile(
    r"(?P<number>\d+\.\d*|\.\d+|\d+)"
    r"|(?P<command>\\[a-zA-Z]+)"
    r"|(?P<letters>[a-zA-Z]+)"
    r"|(?P<op>[-+*/^(){}\[\]])"
    r"|(?P<space>\s+)"
)

_COMMAND_ALIASES = {
    "\\frac": "\\frac",
    "\\dfrac": "\\frac",
    "\\tfrac": "\\frac",
    "\\cfrac": "\\frac",
    "\\sqrt": "\\sqrt",
    "\\pi": "\\pi",
    "\\cdot": "*",
    "\\times": "*",
    "\\div": "/",
}


def _tokenize(s: str) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    pos = 0
    while pos < len(s):
        m = _TOKEN_RE.match(s, pos)
        if m is None:
            raise _ParseFailure(f"unexpected character {s[pos]!r}")
        pos = m.end()
        kind = m.lastgroup
        value = m.group()
        if kind == "space":
            continue
        if kind == _COMMAND:
            alias = _COMMAND_ALIASES.get(value)
            if alias is None:
                raise _ParseFailure(f"unsupported command {value}")
            if alias in ("*", "/"):
                tokens.append((_OP, alias))
            else:
                tokens.append((_COMMAND, alias))
            continue
        if kind == _LETTERS and len(value) > 1:
            raise _ParseFailure(f"letter run {value!r}")
        tokens.append((kind, value))  # type: ignore[arg-type]
    return tokens


# --- parser ------------------------------------------------------------------

_ATOM_START_FOR_ADJACENCY = {_COMMAND, _LETTERS}


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]]):
        self.tokens = tokens
        self.pos = 0
        self.saw_decimal = False

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise _ParseFailure("unexpected end of input")
        self.pos += 1
        return tok

    def expect(self, value: str) -> None:
        kind_value = self.take()
        if kind_value[1] != value:
            raise _ParseFailure(f"expected {value!r}, got {kind_value[1]!r}")

    def parse(self) -> ex.Expr:
        tree = self.expr()
        if self.peek() is not None:
            raise _ParseFailure(f"trailing input at token {self.peek()!r}")
        return tree

    def expr(self) -> ex.Expr:
        terms = [self.term()]
        while True:
            tok = self.peek()
            if tok and tok[0] == _OP and tok[1] in "+-":
                self.take()
                t = self.term()
                terms.append(t if tok[1] == "+" else ex.mul(ex.num(-1), t))
            else:
                break
        return ex.add(*terms)

    def term(self) -> ex.Expr:
        factors = [self.factor()]
        while True:
            tok = self.peek()
            if tok is None:
                break
            if tok[0] == _OP and tok[1] == "*":
                self.take()
                factors.append(self.factor())
            elif tok[0] == _OP and tok[1] == "/":
                self.take()
                factors.append(ex.pow_(self.factor(), ex.num(-1)))
            elif tok[0] in _ATOM_START_FOR_ADJACENCY or (tok[0] == _OP and tok[1] == "("):
                factors.append(self.factor())
            else:
                break
        return ex.mul(*factors)

    def factor(self) -> ex.Expr:
        negate = False
        while True:
            tok = self.peek()
            if tok and tok[0] == _OP and tok[1] in "+-":
                self.take()
                if tok[1] == "-":
                    negate = not negate
            else:
                break
        p = self.power()
        return ex.mul(ex.num(-1), p) if negate else p

    def power(self) -> ex.Expr:
        base = self.atom()
        tok = self.peek()
        if tok and tok[0] == _OP and tok[1] == "^":
            self.take()
            return ex.pow_(base, self.exponent())
        return base

    def exponent(self) -> ex.Expr:
        tok = self.peek()
        if tok and tok[0] == _OP and tok[1] == "{":
            self.take()
            inner = self.expr()
            self.expect("}")
            return inner
        return self.factor()

    def atom(self) -> ex.Expr:
        tok = self.take()
        kind, value = tok
        if kind == _NUMBER:
            if "." in value:
                self.saw_decimal = True
            return ex.Num(Fraction(value))
        if kind == _COMMAND and value == "\\frac":
            numer = self.tight_arg()
            denom = self.tight_arg()
            return ex.mul(numer, ex.pow_(denom, ex.num(-1)))
        if kind == _COMMAND and value == "\\sqrt":
            degree = 2
            nxt = self.peek()
            if nxt and nxt[0] == _OP and nxt[1] == "[":
                self.take()
                idx = self.expr()
                self.expect("]")
                if not isinstance(idx, ex.Num) or idx.value.denominator != 1 or idx.value < 2:
                    raise _ParseFailure("radical index must be an integer >= 2")
                degree = int(idx.value)
            arg = self.tight_arg()
            return ex.pow_(arg, ex.Num(Fraction(1, degree)))
        if kind == _COMMAND and value == "\\pi":
            return ex.Const("pi")
        if kind == _LETTERS:
            return ex.Const(value) if value in ("e", "i") else ex.Var(value)
        if kind == _OP and value == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        if kind == _OP and value == "{":
            inner = self.expr()
            self.expect("}")
            return inner
        raise _ParseFailure(f"unexpected token {value!r}")

    def tight_arg(self) -> ex.Expr:
        """A braced group, or a single character as LaTeX argument rules go:
        ``\\frac12`` is 1/2 and ``\\sqrt23`` is sqrt(2)*3."""
        tok = self.peek()
        if tok is None:
            raise _ParseFailure("missing argument")
        kind, value = tok
        if kind == _OP and value == "{":
            self.take()
            inner = self.expr()
            self.expect("}")
            return inner
        if kind == _NUMBER and "." not in value:
            self.take()
            if len(value) > 1:
                # give back all but the first digit
                self.tokens.insert(self.pos, (_NUMBER, value[1:]))
            return ex.Num(Fraction(value[0]))
        if kind == _COMMAND and value == "\\pi":
            self.take()
            return ex.Const("pi")
        if kind == _LETTERS:
            self.take()
            return ex.Const(value) if value in ("e", "i") else ex.Var(value)
        raise _ParseFailure(f"bad tight argument {value!r}")


# --- parsing entry point -------------------------------------------------------

_BARE_DECIMAL_RE = re.compile(r"^[+-]?(?:\d+\.\d*|\.\d+)$")


def _canonical_decimal(literal: str) -> str:
    sign = "-" if literal.startswith("-") else ""
    body = literal.lstrip("+-")
    if "." in body:
        intpart, fracpart = body.split(".", 1)
    else:
        intpart, fracpart = body, ""
    intpart = intpart.lstrip("0") or "0"
    fracpart = fracpart.rstrip("0")
    out = intpart + ("." + fracpart if fracpart else "")
    if out in ("0", "0.0"):
        return "0"
    return sign + out


def _split_top_level(s: str) -> list[str]:
    parts: list[str] = []
    depth = 0
    current: list[str] = []
    for c in s:
        if c in "({[":
            depth += 1
        elif c in ")}]":
            depth -= 1
        if c == "," and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(c)
    parts.append("".join(current))
    return parts


def _parse_component(s: str) -> AnswerForm:
    """Parse one comma-free component. Raises _ParseFailure."""
    if not s.strip():
        raise _ParseFailure("empty component")
    parser = _Parser(_tokenize(s))
    tree = parser.parse()
    if isinstance(tree, ex.Num):
        if _BARE_DECIMAL_RE.match(s.strip()):
            return AnswerForm(
                FormKind.DECIMAL, raw=s, tree=tree, decimal=_canonical_decimal(s.strip())
            )
        return AnswerForm(FormKind.EXACT_RATIONAL, raw=s, tree=tree)
    return AnswerForm(FormKind.SYMBOLIC, raw=s, tree=tree)


def parse_answer(raw: str) -> AnswerForm:
    """Parse an answer string into its most specific form. Total: never raises."""
    cleaned = _cleanup(raw)
    fallback_source = cleaned if cleaned else raw
    parts = _split_top_level(cleaned) if cleaned else []
    try:
        if not parts:
            raise _ParseFailure("empty answer")
        forms = [_parse_component(p) for p in parts]
    except _ParseFailure:
        return AnswerForm(FormKind.TEXT, raw=raw, text=_norm_text(fallback_source))
    if len(forms) == 1:
        form = forms[0]
        # keep the original string as raw, not the cleaned component
        return AnswerForm(form.kind, raw=raw, tree=form.tree, text=form.text, decimal=form.decimal)
    joined = ",".join(f.canonical() for f in forms)
    return AnswerForm(FormKind.TEXT, raw=raw, text=_norm_text(joined))


# --- equivalence ---------------------------------------------------------------

_NUM_POINTS = 8
_REL_TOL = 1e-9
_SAMPLE_SEED = 0x5EED
_MAX_TRIES = 50


def _comparable_text(form: AnswerForm) -> str:
    if form.kind is FormKind.TEXT:
        assert form.text is not None
        return form.text
    return _norm_text(form.canonical())


def _numeric_equal(a: "ex.Expr", b: "ex.Expr") -> bool:
    names = sorted(ex.free_vars(a) | ex.free_vars(b))
    rng = random.Random(_SAMPLE_SEED)
    points = _NUM_POINTS if names else 1
    tries = _MAX_TRIES if names else 1
    for _ in range(points):
        for _attempt in range(tries):
            env = {name: complex(rng.uniform(-3.0, 3.0)) for name in names}
            try:
                va = ex.eval_numeric(a, env)
                vb = ex.eval_numeric(b, env)
            except (ZeroDivisionError, OverflowError, ValueError):
                continue
            if abs(va - vb) <= _REL_TOL * max(1.0, abs(va), abs(vb)):
                break
            return False
        else:
            # no evaluable point found; cannot verify equality
            return False
    return True


def equivalent(a: AnswerForm, b: AnswerForm) -> bool:
    """Decide whether two parsed answers denote the same value."""
    if a.kind is FormKind.TEXT or b.kind is FormKind.TEXT:
        return _comparable_text(a) == _comparable_text(b)
    assert a.tree is not None and b.tree is not None
    if a.tree == b.tree:
        return True
    va = ex.exact_value(a.tree)
    vb = ex.exact_value(b.tree)
    if va is not None and vb is not None:
        return va == vb  # exact path: no tolerance
    return _numeric_equal(a.tree, b.tree)


class EquivalenceGrouper:
    """Groups forms into equivalence classes, first-seen form as representative."""

    def __init__(self) -> None:
        self._reps: list[AnswerForm] = []
        self._counts: list[int] = []

    def add(self, form: AnswerForm) -> int:
        """Add one form; returns its class index."""
        for i, rep in enumerate(self._reps):
            if equivalent(form, rep):
                self._counts[i] += 1
                return i
        self._reps.append(form)
        self._counts.append(1)
        return len(self._reps) - 1

    @property
    def representatives(self) -> tuple[AnswerForm, ...]:
        return tuple(self._reps)

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(self._counts)

    def histogram(self) -> dict[AnswerForm, int]:
        return dict(zip(self._reps, self._counts))


def group_estimates(forms: Iterable[AnswerForm]) -> dict[AnswerForm, int]:
    """Histogram of equivalence classes keyed by first-seen representative."""
    grouper = EquivalenceGrouper()
    for form in forms:
        grouper.add(form)
    return grouper.histogram()


def grade(predicted: AnswerForm | None, truth: str) -> bool:
    """True when the prediction denotes the ground-truth answer."""
    if predicted is None:
        return False
    return equivalent(predicted, parse_answer(truth))
