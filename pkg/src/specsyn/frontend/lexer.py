"""Tokenizer for the supported C subset.

Every token carries the character offsets of its source span so later
stages can splice annotation text back into the original file without
disturbing anything around it.
"""

from dataclasses import dataclass

from specsyn.errors import ParseError

KEYWORDS = {
    "auto", "break", "case", "char", "const", "continue", "default", "do",
    "double", "else", "enum", "extern", "float", "for", "goto", "if",
    "inline", "int", "long", "register", "return", "short", "signed",
    "sizeof", "static", "struct", "switch", "typedef", "union", "unsigned",
    "void", "volatile", "while",
}

# Longest-first so "<<=" wins over "<<" wins over "<".
PUNCTUATION = [
    "<<=", ">>=", "...",
    "==", "!=", "<=", ">=", "&&", "||", "<<", ">>", "->", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "+", "-", "*", "/", "%", "=", "<", ">", "!", "~", "&", "|", "^",
    "(", ")", "[", "]", "{", "}", ";", ",", ".", "?", ":",
]


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "keyword", "number", "char", "string", "punct", "eof"
    text: str
    start: int
    end: int
    line: int
    column: int


def _is_ident_start(ch):
    return ch.isalpha() or ch == "_"


def _is_ident_char(ch):
    return ch.isalnum() or ch == "_"


class Lexer:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def error(self, message):
        raise ParseError(message, line=self.line, column=self.col)

    def _advance(self, n=1):
        for _ in range(n):
            if self.pos < len(self.text):
                if self.text[self.pos] == "\n":
                    self.line += 1
                    self.col = 1
                else:
                    self.col += 1
                self.pos += 1

    def _skip_trivia(self):
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch in " \t\r\n\f\v":
                self._advance()
            elif text.startswith("//", self.pos):
                while self.pos < len(text) and text[self.pos] != "\n":
                    self._advance()
            elif text.startswith("/*", self.pos):
                close = text.find("*/", self.pos + 2)
                if close < 0:
                    self.error("unterminated block comment")
                self._advance(close + 2 - self.pos)
            else:
                return

    def _lex_number(self):
        text = self.text
        start = self.pos
        line, col = self.line, self.col
        i = start
        if text.startswith(("0x", "0X"), i):
            i += 2
            while i < len(text) and (text[i] in "abcdefABCDEF" or text[i].isdigit()):
                i += 1
        else:
            while i < len(text) and text[i].isdigit():
                i += 1
            if i < len(text) and text[i] == "." and i + 1 < len(text) and text[i + 1].isdigit():
                i += 1
                while i < len(text) and text[i].isdigit():
                    i += 1
        # integer/float suffixes
        while i < len(text) and text[i] in "uUlLfF":
            i += 1
        self._advance(i - start)
        return Token("number", text[start:i], start, i, line, col)

    def _lex_quoted(self, quote, kind):
        text = self.text
        start = self.pos
        line, col = self.line, self.col
        i = start + 1
        while i < len(text):
            if text[i] == "\\":
                i += 2
                continue
            if text[i] == quote:
                i += 1
                self._advance(i - start)
                return Token(kind, text[start:i], start, i, line, col)
            if text[i] == "\n":
                break
            i += 1
        self.error(f"unterminated {kind} literal")

    def next_token(self):
        self._skip_trivia()
        text = self.text
        if self.pos >= len(text):
            return Token("eof", "", self.pos, self.pos, self.line, self.col)
        ch = text[self.pos]
        start, line, col = self.pos, self.line, self.col
        if ch == "#":
            self.error("preprocessor directives are not supported; run the file through cpp first")
        if _is_ident_start(ch):
            i = start
            while i < len(text) and _is_ident_char(text[i]):
                i += 1
            word = text[start:i]
            self._advance(i - start)
            kind = "keyword" if word in KEYWORDS else "ident"
            return Token(kind, word, start, i, line, col)
        if ch.isdigit() or (ch == "." and start + 1 < len(text) and text[start + 1].isdigit()):
            return self._lex_number()
        if ch == '"':
            return self._lex_quoted('"', "string")
        if ch == "'":
            return self._lex_quoted("'", "char")
        for punct in PUNCTUATION:
            if text.startswith(punct, start):
                self._advance(len(punct))
                return Token("punct", punct, start, start + len(punct), line, col)
        self.error(f"unexpected character {ch!r}")


def tokenize(text):
    """Return the full token list, ending with a single eof token."""
    lexer = Lexer(text)
    tokens = []
    while True:
        tok = lexer.next_token()
        tokens.append(tok)
        if tok.kind == "eof":
            return tokens
