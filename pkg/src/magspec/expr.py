"""Small arithmetic expression grammar for field definitions in JSON.

Accepted: numbers, the variables x1..x4, + - * / ^, parentheses and the
functions sin, cos, exp.  Expressions are parsed with sympy after a token
whitelist check, so derivatives are exact.
"""

import re

import numpy as np
import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from .errors import UsageError

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)|([A-Za-z_]\w*)|(\*\*|[-+*/^()]))")
FUNCTIONS = {"sin": sympy.sin, "cos": sympy.cos, "exp": sympy.exp}
VARIABLES = tuple(sympy.Symbol(f"x{i}", real=True) for i in range(1, 5))


def _check_tokens(text, dim):
    allowed = {f"x{i}" for i in range(1, dim + 1)} | set(FUNCTIONS)
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise UsageError(f"unexpected character in expression {text!r} at offset {pos}")
        name = m.group(2)
        if name is not None and name not in allowed:
            raise UsageError(f"unknown name {name!r} in expression {text!r}")
        pos = m.end()


def parse(text, dim):
    """Parse ``text`` into a sympy expression in the variables x1..x<dim>."""
    if not isinstance(text, (str, int, float)):
        raise UsageError(f"expression must be a string or number, got {text!r}")
    text = str(text)
    _check_tokens(text, dim)
    local = {f"x{i + 1}": VARIABLES[i] for i in range(dim)}
    local.update(FUNCTIONS)
    try:
        expr = parse_expr(
            text,
            local_dict=local,
            transformations=standard_transformations + (convert_xor,),
            evaluate=True,
        )
    except (SyntaxError, TypeError, sympy.SympifyError) as exc:
        raise UsageError(f"cannot parse expression {text!r}: {exc}") from exc
    return sympy.sympify(expr)


def compile_scalar(expr, dim):
    """Vectorized callable ``f(x)`` for an expression; ``x`` has shape (dim,)."""
    syms = VARIABLES[:dim]
    fn = sympy.lambdify(syms, expr, modules="numpy")

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.asarray(fn(*x), dtype=float) + np.zeros(x.shape[1:])

    return f


def compile_gradient(expr, dim):
    syms = VARIABLES[:dim]
    parts = [compile_scalar(sympy.diff(expr, s), dim) for s in syms]

    def grad(x):
        return np.array([p(x) for p in parts])

    return grad
