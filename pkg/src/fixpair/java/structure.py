"""Structural recognition of files, classes, and methods in Java source.

This is brace-matching recognition, not a grammar: the goal is stable
positions and fully-qualified names, not semantics.  Rules that matter for
downstream consumers:

* FQN format: ``pkg.Outer.Inner.name(paramType,...)ret`` for methods,
  ``pkg.Outer.Inner`` for classes, the repo-relative path for files.
* Generic type arguments are erased in FQNs (``List<String>`` -> ``List``);
  array suffixes are kept; varargs render as arrays (``int...`` -> ``int[]``).
* Constructors use the class simple name with return type ``void``.
* Anonymous, local, and enum-constant-body members are not emitted; their
  code belongs to the range of the enclosing element.
* Methods without a body (abstract, interface, native declarations ending in
  ``;``) are not emitted.
* Annotation type declarations (``@interface``) count as classes.
* Element ranges run from the first token of the declaration (including
  modifiers and annotations) to the matching closing brace.
"""

from dataclasses import dataclass, field

from ..errors import FixpairError
from .tokenizer import TokenStream

MODIFIER_KEYWORDS = frozenset(
    "public protected private static abstract final native synchronized "
    "transient volatile strictfp default".split()
)

PRIMITIVE_KEYWORDS = frozenset(
    "void boolean byte short int long char float double".split()
)

CLASS_KEYWORDS = frozenset({"class", "interface", "enum"})

_TYPE_PUNCT = {".", "[", "]"}


class ElementCollisionError(FixpairError):
    """Two distinct declarations produced the same FQN."""


@dataclass
class FieldDecl:
    """A field declaration inside a class body (not a dataset element)."""

    modifiers: tuple
    declarators: int
    line: int


@dataclass
class SourceElement:
    kind: str  # file | class | method
    fqn: str
    path: str
    start_line: int
    end_line: int
    parent_fqn: str = None
    # --- analyzer internals used by the metrics pass ---
    name: str = ""
    modifiers: tuple = ()
    decl_index: int = -1  # full-stream index of the first declaration token
    body_open: int = -1  # full-stream index of '{' (-1 when degraded)
    body_close: int = -1  # full-stream index of matching '}'
    param_types: tuple = ()
    return_type: str = ""
    fields: list = field(default_factory=list)  # FieldDecl, classes only
    degraded: bool = False  # file element: unbalanced braces

    @property
    def is_public(self):
        return "public" in self.modifiers


def _count_lines(text):
    if not text:
        return 1
    n = text.count("\n")
    if not text.endswith("\n"):
        n += 1
    return max(n, 1)


class _Parser:
    def __init__(self, path, stream):
        self.path = path
        self.stream = stream
        # Code view: (token, full_index) with comments/whitespace dropped.
        self.code = [
            (t, i) for i, t in enumerate(stream.tokens) if t.is_code
        ]
        self.n = len(self.code)
        self.degraded = False
        self.elements = []
        self.package = ""
        self._match = self._match_pairs()

    def tok(self, i):
        return self.code[i][0]

    def full_index(self, i):
        return self.code[i][1]

    def _match_pairs(self):
        """Map opener index -> closer index for () and {} over code tokens."""
        match = {}
        stack = []
        for i in range(self.n):
            lex = self.tok(i).lexeme
            if lex in "({":
                stack.append((lex, i))
            elif lex in ")}":
                want = "(" if lex == ")" else "{"
                # pop through mismatched openers so one stray bracket cannot
                # derail the rest of the file
                while stack and stack[-1][0] != want:
                    opener, oi = stack.pop()
                    match[oi] = i - 1 if i > oi else oi
                    self.degraded = True
                if stack:
                    match[stack.pop()[1]] = i
                else:
                    self.degraded = True
        while stack:
            match[stack.pop()[1]] = self.n - 1
            self.degraded = True
        return match

    # -- helpers over a run of code-token indices --------------------------

    def _skip_annotation(self, i, end):
        """i points at '@'; return index after the annotation."""
        i += 1
        if i < end and self.tok(i).kind in ("identifier", "keyword"):
            i += 1
            while i + 1 < end and self.tok(i).lexeme == "." and self.tok(i + 1).kind == "identifier":
                i += 2
        if i < end and self.tok(i).lexeme == "(":
            i = self._match.get(i, end - 1) + 1
        return i

    def _skip_angles(self, i, end):
        """i points at an operator starting with '<'; skip the generic group."""
        depth = 0
        while i < end:
            lex = self.tok(i).lexeme
            if self.tok(i).kind == "operator" and set(lex) <= set("<>"):
                depth += lex.count("<") - lex.count(">")
                i += 1
                if depth <= 0:
                    return i
            else:
                i += 1
        return i

    def _render_type(self, idxs):
        """Erased textual form of a type token sequence."""
        parts = []
        i = 0
        while i < len(idxs):
            t = self.tok(idxs[i])
            if t.kind == "operator" and t.lexeme.startswith("<"):
                # erase generic arguments; consume to matching '>'
                depth = 0
                while i < len(idxs):
                    lex = self.tok(idxs[i]).lexeme
                    if self.tok(idxs[i]).kind == "operator" and set(lex) <= set("<>"):
                        depth += lex.count("<") - lex.count(">")
                        i += 1
                        if depth <= 0:
                            break
                    else:
                        i += 1
                continue
            if t.lexeme == "...":
                parts.append("[]")
            elif t.kind in ("identifier", "keyword") or t.lexeme in _TYPE_PUNCT:
                parts.append(t.lexeme)
            i += 1
        return "".join(parts)

    def _parse_params(self, open_idx):
        """Parameter list of the paren group opening at ``open_idx``."""
        close = self._match.get(open_idx)
        if close is None:
            return None
        groups = [[]]
        i = open_idx + 1
        angle = 0
        while i < close:
            t = self.tok(i)
            lex = t.lexeme
            if lex == "(":
                i = self._match.get(i, close) + 1
                continue
            if t.kind == "operator" and set(lex) <= set("<>") and lex not in ("<>",):
                angle += lex.count("<") - lex.count(">")
                groups[-1].append(i)
                i += 1
                continue
            if lex == "," and angle == 0:
                groups.append([])
            else:
                groups[-1].append(i)
            i += 1
        if groups == [[]]:
            return []
        types = []
        for g in groups:
            ty = self._render_param(g)
            if ty is None:
                return None
            types.append(ty)
        return types

    def _render_param(self, idxs):
        # drop annotations and 'final'
        kept = []
        i = 0
        while i < len(idxs):
            t = self.tok(idxs[i])
            if t.lexeme == "@":
                j = i + 1
                if j < len(idxs) and self.tok(idxs[j]).kind == "identifier":
                    j += 1
                    while j + 1 < len(idxs) and self.tok(idxs[j]).lexeme == ".":
                        j += 2
                i = j
                continue
            if t.kind == "keyword" and t.lexeme == "final":
                i += 1
                continue
            kept.append(idxs[i])
            i += 1
        # last identifier is the parameter name; trailing [] belong to the type
        name_pos = None
        for k in range(len(kept) - 1, -1, -1):
            if self.tok(kept[k]).kind == "identifier":
                name_pos = k
                break
        if name_pos is None or name_pos == 0 and self.tok(kept[0]).kind != "identifier":
            return None
        type_idxs = kept[:name_pos]
        trailing = kept[name_pos + 1:]
        if not type_idxs:
            return None
        ty = self._render_type(type_idxs)
        for k in trailing:
            if self.tok(k).lexeme in ("[", "]"):
                ty += self.tok(k).lexeme
        return ty if ty else None

    # -- classification -----------------------------------------------------

    def _find_class_kw(self, start, end):
        i = start
        while i < end:
            t = self.tok(i)
            if t.lexeme == "(":
                i = self._match.get(i, end - 1) + 1
                continue
            if t.kind == "keyword" and t.lexeme in CLASS_KEYWORDS:
                if i > start and self.tok(i - 1).lexeme == ".":
                    i += 1  # Foo.class literal
                    continue
                return i
            i += 1
        return None

    def _parse_method_header(self, start, end, class_name):
        """Return (modifiers, name, params, ret, decl_idx) or None."""
        i = start
        modifiers = []
        while i < end:
            t = self.tok(i)
            if t.lexeme == "@":
                nxt = self.tok(i + 1).lexeme if i + 1 < end else ""
                if nxt == "interface":
                    return None
                i = self._skip_annotation(i, end)
            elif t.kind == "keyword" and t.lexeme in MODIFIER_KEYWORDS:
                modifiers.append(t.lexeme)
                i += 1
            elif t.kind == "operator" and t.lexeme.startswith("<"):
                i = self._skip_angles(i, end)
            else:
                break
        # find the parameter-list '(' : first top-level paren after i
        paren = None
        j = i
        while j < end:
            if self.tok(j).lexeme == "(":
                paren = j
                break
            j += 1
        if paren is None or paren == i:
            return None
        name_tok = self.tok(paren - 1)
        if name_tok.kind != "identifier":
            return None
        type_idxs = list(range(i, paren - 1))
        angle = 0
        for k in type_idxs:
            t = self.tok(k)
            if t.kind == "operator" and set(t.lexeme) <= set("<>"):
                angle += t.lexeme.count("<") - t.lexeme.count(">")
                continue
            ok = (
                t.kind == "identifier"
                or (t.kind == "keyword" and t.lexeme in PRIMITIVE_KEYWORDS)
                or t.lexeme in _TYPE_PUNCT
                # inside generic arguments: wildcards, bounds, commas
                or (angle > 0 and t.lexeme in (",", "?", "&"))
                or (angle > 0 and t.kind == "keyword" and t.lexeme in ("extends", "super"))
            )
            if not ok:
                return None
        if not type_idxs:
            ret = "void"
            if name_tok.lexeme != class_name:
                return None
        else:
            ret = self._render_type(type_idxs)
            if not ret or not (
                self.tok(type_idxs[0]).kind == "identifier"
                or self.tok(type_idxs[0]).lexeme in PRIMITIVE_KEYWORDS
            ):
                return None
        params = self._parse_params(paren)
        if params is None:
            return None
        # after the ')', only a throws clause may precede the body
        close = self._match[paren]
        k = close + 1
        if k < end:
            if not (self.tok(k).kind == "keyword" and self.tok(k).lexeme == "throws"):
                return None
        return tuple(modifiers), name_tok.lexeme, tuple(params), ret

    # -- main walk -----------------------------------------------------------

    def parse(self):
        total = _count_lines(self.stream.text)
        file_elem = SourceElement(
            kind="file",
            fqn=self.path,
            path=self.path,
            start_line=1,
            end_line=total,
            decl_index=0,
            body_open=-1,
            body_close=-1,
        )
        self.elements.append(file_elem)
        self._walk(0, self.n, parent=None, class_names=())
        file_elem.degraded = self.degraded
        self._check_collisions()
        return self.elements

    def _check_collisions(self):
        seen = {}
        for e in self.elements:
            key = (e.kind, e.fqn)
            if key in seen:
                raise ElementCollisionError(
                    f"{self.path}: duplicate {e.kind} FQN {e.fqn!r} "
                    f"(lines {seen[key]} and {e.start_line})"
                )
            seen[key] = e.start_line

    def _class_fqn(self, class_names):
        parts = [p for p in (self.package,) if p] + list(class_names)
        return ".".join(parts)

    def _walk(self, start, end, parent, class_names):
        """Scan one body (file top level or a class body) for declarations."""
        in_class = parent is not None and parent.kind == "class"
        i = start
        run_start = i
        stash = []  # field-run fragments interrupted by initializer braces
        while i < end:
            t = self.tok(i)
            lex = t.lexeme

            if lex == "(":
                i = self._match.get(i, end - 1) + 1
                continue

            if lex == ";":
                if parent is None and self._is_package_run(run_start, i):
                    self._read_package(run_start, i)
                elif in_class:
                    run = stash + list(range(run_start, i))
                    self._maybe_field(run, parent)
                stash = []
                i += 1
                run_start = i
                continue

            if lex == "{":
                close = self._match.get(i, end - 1)
                handled = self._classify_brace(
                    run_start, i, close, parent, class_names, in_class
                )
                if not handled and in_class:
                    # initializer / enum-constant fragment: keep tokens for a
                    # possible field declaration continuing after the group
                    stash += list(range(run_start, i))
                i = close + 1
                run_start = i
                continue

            if lex == "}":
                # unmatched closer at this level (tolerated, flagged)
                i += 1
                run_start = i
                continue

            i += 1

        if in_class:
            # trailing run without ';' (typically an enum constant list)
            run = stash + list(range(run_start, min(i, end)))
            self._maybe_field(run, parent)

    def _is_package_run(self, start, end):
        return start < end and self.tok(start).lexeme == "package"

    def _read_package(self, start, end):
        parts = [
            self.tok(k).lexeme
            for k in range(start + 1, end)
            if self.tok(k).kind == "identifier"
        ]
        self.package = ".".join(parts)

    def _maybe_field(self, run, parent):
        """Record a field declaration (class bodies only)."""
        if not run:
            return
        modifiers = []
        i = 0
        while i < len(run):
            t = self.tok(run[i])
            if t.lexeme == "@":
                j = run[i]
                j_new = self._skip_annotation(j, run[-1] + 1)
                while i < len(run) and run[i] < j_new:
                    i += 1
                continue
            if t.kind == "keyword" and t.lexeme in MODIFIER_KEYWORDS:
                modifiers.append(t.lexeme)
                i += 1
                continue
            break
        rest = run[i:]
        if not rest:
            return
        # A paren group preceded by a type+name pattern is a bodyless method
        # declaration (abstract/native/interface), not a field.  A paren right
        # after a single leading identifier is an enum constant's argument
        # list and harmless.
        depth_angle = 0
        declarators = 1
        has_ident = False
        k = 0
        saw_assign = False
        since_separator = 0
        while k < len(rest):
            t = self.tok(rest[k])
            lex = t.lexeme
            if lex == "(":
                if not saw_assign and since_separator >= 2:
                    return  # method declaration without a body
                close = self._match.get(rest[k])
                while k < len(rest) and (close is None or rest[k] <= close):
                    k += 1
                continue
            if t.kind == "operator" and set(lex) <= set("<>") and lex != "<>":
                depth_angle += lex.count("<") - lex.count(">")
                since_separator += 1
            elif lex == "=":
                saw_assign = True
                since_separator += 1
            elif lex == "," and depth_angle == 0:
                declarators += 1
                since_separator = 0
            else:
                if t.kind == "identifier":
                    has_ident = True
                since_separator += 1
            k += 1
        if not has_ident:
            return
        parent.fields.append(
            FieldDecl(
                modifiers=tuple(modifiers),
                declarators=declarators,
                line=self.tok(run[0]).line,
            )
        )

    def _classify_brace(self, run_start, open_i, close_i, parent, class_names, in_class):
        """Handle a '{' at member level; return True when an element was made."""
        kw = self._find_class_kw(run_start, open_i)
        if kw is not None and (parent is None or in_class):
            name_i = kw + 1
            if name_i < open_i and self.tok(name_i).kind == "identifier":
                cname = self.tok(name_i).lexeme
                names = class_names + (cname,)
                modifiers = tuple(
                    self.tok(k).lexeme
                    for k in range(run_start, kw)
                    if self.tok(k).kind == "keyword"
                    and self.tok(k).lexeme in MODIFIER_KEYWORDS
                )
                elem = SourceElement(
                    kind="class",
                    fqn=self._class_fqn(names),
                    path=self.path,
                    start_line=self.tok(run_start).line,
                    end_line=self.tok(close_i).line,
                    parent_fqn=parent.fqn if parent is not None else None,
                    name=cname,
                    modifiers=modifiers,
                    decl_index=self.full_index(run_start),
                    body_open=self.full_index(open_i),
                    body_close=self.full_index(close_i),
                )
                self.elements.append(elem)
                self._walk(open_i + 1, close_i, parent=elem, class_names=names)
                return True
            return False
        if in_class:
            header = self._parse_method_header(run_start, open_i, parent.name)
            if header is not None:
                modifiers, name, params, ret = header
                fqn = f"{parent.fqn}.{name}({','.join(params)}){ret}"
                elem = SourceElement(
                    kind="method",
                    fqn=fqn,
                    path=self.path,
                    start_line=self.tok(run_start).line,
                    end_line=self.tok(close_i).line,
                    parent_fqn=parent.fqn,
                    name=name,
                    modifiers=modifiers,
                    decl_index=self.full_index(run_start),
                    body_open=self.full_index(open_i),
                    body_close=self.full_index(close_i),
                    param_types=params,
                    return_type=ret,
                )
                self.elements.append(elem)
                return True
        return False


def parse_elements(path: str, tokens: TokenStream) -> list:
    """Extract file/class/method elements with positions from a token stream."""
    return _Parser(path, tokens).parse()
