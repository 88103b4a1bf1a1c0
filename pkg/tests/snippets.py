"""Seeded generator of valid-ish Java classes for metric fuzz tests."""

import random


def _expr(rng, depth=0):
    choices = ["var%d" % rng.randrange(4), str(rng.randrange(100))]
    if depth < 2:
        op = rng.choice(["+", "-", "*", "&&", "||", ">", "<", "=="])
        choices.append(f"{_expr(rng, depth + 1)} {op} {_expr(rng, depth + 1)}")
        choices.append(f"f{rng.randrange(3)}({_expr(rng, depth + 1)})")
        choices.append(
            f"{_expr(rng, depth + 1)} > 0 ? {_expr(rng, depth + 1)} : {_expr(rng, depth + 1)}"
        )
    return rng.choice(choices)


def _statement(rng, depth, lines):
    kind = rng.randrange(8)
    pad = "    " * (depth + 2)
    if kind == 0 and depth < 3:
        lines.append(f"{pad}if ({_expr(rng)}) {{")
        _block(rng, depth + 1, lines)
        if rng.random() < 0.4:
            lines.append(f"{pad}}} else if ({_expr(rng)}) {{")
            _block(rng, depth + 1, lines)
        if rng.random() < 0.4:
            lines.append(f"{pad}}} else {{")
            _block(rng, depth + 1, lines)
        lines.append(f"{pad}}}")
    elif kind == 1 and depth < 3:
        lines.append(f"{pad}for (int i = 0; i < {rng.randrange(10)}; i++) {{")
        _block(rng, depth + 1, lines)
        lines.append(f"{pad}}}")
    elif kind == 2 and depth < 3:
        lines.append(f"{pad}while ({_expr(rng)}) {{")
        _block(rng, depth + 1, lines)
        lines.append(f"{pad}}}")
    elif kind == 3 and depth < 2:
        lines.append(f"{pad}try {{")
        _block(rng, depth + 1, lines)
        lines.append(f"{pad}}} catch (Exception e) {{")
        _block(rng, depth + 1, lines)
        lines.append(f"{pad}}}")
    elif kind == 4:
        lines.append(f"{pad}int var{rng.randrange(4)} = {_expr(rng)};")
    elif kind == 5:
        lines.append(f"{pad}// note {rng.randrange(1000)}")
        lines.append(f"{pad}var{rng.randrange(4)} = {_expr(rng)};")
    elif kind == 6:
        lines.append(f'{pad}log("msg {rng.randrange(50)}", {_expr(rng)});')
    else:
        lines.append(f"{pad}return {_expr(rng)};")


def _block(rng, depth, lines):
    for _ in range(rng.randrange(1, 4)):
        _statement(rng, depth, lines)


def make_class(seed):
    """One random class with 1..5 methods; returns source text."""
    rng = random.Random(seed)
    lines = ["package fuzz;", ""]
    if rng.random() < 0.5:
        lines.append("/** Doc for C%d. */" % seed)
    lines.append("public class C%d {" % seed)
    n_methods = rng.randrange(1, 6)
    for m in range(n_methods):
        lines.append("")
        if rng.random() < 0.4:
            lines.append("    /** Doc m%d. */" % m)
        vis = rng.choice(["public ", "private ", ""])
        params = ", ".join(f"int p{i}" for i in range(rng.randrange(0, 3)))
        lines.append(f"    {vis}int m{m}({params}) {{")
        _block(rng, 0, lines)
        lines.append("        return 0;")
        lines.append("    }")
    if rng.random() < 0.3:
        lines.append("    private int field0 = 1, field1 = 2;")
    lines.append("}")
    return "\n".join(lines) + "\n"
