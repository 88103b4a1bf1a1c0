"""Total lexer for Java source text.

Every byte of the input belongs to exactly one token, including whitespace
runs, so line-based metrics can be derived from the stream alone.  The lexer
never fails: unterminated strings, chars, and block comments are closed at
end of input and recorded as diagnostics.
"""

from dataclasses import dataclass, field

KEYWORDS = frozenset(
    """abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package private
    protected public return short static strictfp super switch synchronized
    this throw throws transient try void volatile while""".split()
)

# true/false/null are literals in the language grammar, not keywords.
WORD_LITERALS = frozenset({"true", "false", "null"})

# Multi-character operators, longest first for greedy matching.
_MULTI_OPS = sorted(
    [
        ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "==", "!=", "<=", ">=",
        "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
        "<<", ">>",
    ],
    key=len,
    reverse=True,
)

_SINGLE_OPS = set("+-*/%=<>!&|^~?:;,.()[]@")


@dataclass(frozen=True)
class Token:
    kind: str  # keyword | identifier | literal | operator | brace | comment | whitespace
    lexeme: str
    line: int  # 1-based line of the first character

    @property
    def end_line(self):
        return self.line + self.lexeme.count("\n")

    @property
    def is_code(self):
        return self.kind not in ("comment", "whitespace")

    @property
    def is_doc_comment(self):
        return self.kind == "comment" and self.lexeme.startswith("/**")


@dataclass
class TokenStream:
    tokens: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def code_tokens(self):
        return [t for t in self.tokens if t.is_code]

    @property
    def text(self):
        return "".join(t.lexeme for t in self.tokens)


def _is_ident_start(ch):
    return ch.isalpha() or ch in "_$"


def _is_ident_part(ch):
    return ch.isalnum() or ch in "_$"


def tokenize(source: str) -> TokenStream:
    """Lex ``source`` into a :class:`TokenStream` covering every character."""
    tokens = []
    diagnostics = []
    i = 0
    line = 1
    n = len(source)

    def emit(kind, start, end):
        nonlocal line
        lexeme = source[start:end]
        tokens.append(Token(kind, lexeme, line))
        line += lexeme.count("\n")

    while i < n:
        ch = source[i]

        if ch.isspace():
            j = i + 1
            while j < n and source[j].isspace():
                j += 1
            emit("whitespace", i, j)
            i = j
            continue

        if ch == "/" and i + 1 < n and source[i + 1] == "/":
            j = source.find("\n", i)
            j = n if j == -1 else j  # newline stays in the following whitespace token
            emit("comment", i, j)
            i = j
            continue

        if ch == "/" and i + 1 < n and source[i + 1] == "*":
            j = source.find("*/", i + 2)
            if j == -1:
                diagnostics.append(f"line {line}: unterminated block comment")
                j = n
            else:
                j += 2
            emit("comment", i, j)
            i = j
            continue

        if ch in "\"'":
            quote = ch
            j = i + 1
            closed = False
            while j < n:
                if source[j] == "\\" and j + 1 < n:
                    j += 2
                    continue
                if source[j] == quote:
                    j += 1
                    closed = True
                    break
                if source[j] == "\n":
                    break  # string literals do not span lines
                j += 1
            if not closed:
                kind = "string" if quote == '"' else "char"
                diagnostics.append(f"line {line}: unterminated {kind} literal")
            emit("literal", i, j)
            i = j
            continue

        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            is_hex = ch == "0" and i + 1 < n and source[i + 1] in "xX"
            exp_chars = "pP" if is_hex else "eE"
            j = i + 1
            while j < n:
                c = source[j]
                if c.isalnum() or c in "._":
                    j += 1
                elif c in "+-" and source[j - 1] in exp_chars:
                    j += 1
                else:
                    break
            emit("literal", i, j)
            i = j
            continue

        if _is_ident_start(ch):
            j = i + 1
            while j < n and _is_ident_part(source[j]):
                j += 1
            word = source[i:j]
            if word in KEYWORDS:
                kind = "keyword"
            elif word in WORD_LITERALS:
                kind = "literal"
            else:
                kind = "identifier"
            emit(kind, i, j)
            i = j
            continue

        if ch in "{}":
            emit("brace", i, i + 1)
            i += 1
            continue

        matched = False
        for op in _MULTI_OPS:
            if source.startswith(op, i):
                emit("operator", i, i + len(op))
                i += len(op)
                matched = True
                break
        if matched:
            continue

        # Single-char operator; anything unrecognized also lands here so the
        # stream always covers the full input.
        emit("operator", i, i + 1)
        i += 1

    return TokenStream(tokens=tokens, diagnostics=diagnostics)
