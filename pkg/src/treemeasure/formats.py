"""Text formats for fixtures: automata, patterns, Boolean combinations,
local first-order sentences, and finite-tree literals.

Two surface syntaxes cover everything.  Automata and patterns use keyed
lines (`alphabet: a b`, `trans: p a p t`, `vertex: x label=a root`);
formulas and trees use S-expressions.  `#` and `;` both start comments.
Every parser raises ParseError with 1-based line/column on malformed
input, including semantic validation failures surfaced by the object
constructors, so the CLI can report file problems uniformly.
"""

from __future__ import annotations

import os
from typing import NamedTuple, Optional, Sequence, Union

from .boolcomb import (
    BccqFormula,
    BoolConstant,
    Conjunction,
    Disjunction,
    Negation,
    PatternAtom,
)
from .cq import Pattern
from .errors import InputError, ParseError
from .finite import FiniteTreeAutomaton
from .fo import (
    And,
    Ancestor,
    BasicLocalSentence,
    Child,
    ChildL,
    ChildR,
    DistGT,
    DistLE,
    Eq,
    Exists,
    Forall,
    LocalCombination,
    HasLabel,
    Implies,
    LocalAtom,
    Not,
    Or,
    Root,
)
from .safety import SafetyAutomaton
from .trees import FiniteTree


# -- keyed-line scanning -------------------------------------------------------


class _KeyLine(NamedTuple):
    line: int
    key: str
    tokens: tuple[str, ...]


def _key_lines(text: str, source: str) -> list[_KeyLine]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not body:
            continue
        head, *rest = body.split()
        if not head.endswith(":"):
            raise ParseError(f"expected 'key:' at {head!r}", lineno, raw.index(head) + 1, source)
        out.append(_KeyLine(lineno, head[:-1], tuple(rest)))
    return out


def _reject_unknown(lines: Sequence[_KeyLine], known: tuple[str, ...], source: str):
    for ln in lines:
        if ln.key not in known:
            raise ParseError(f"unknown key {ln.key!r} (expected one of {known})", ln.line, 1, source)


def _single(lines: Sequence[_KeyLine], key: str, source: str, required: bool = True) -> Optional[_KeyLine]:
    hits = [ln for ln in lines if ln.key == key]
    if len(hits) > 1:
        raise ParseError(f"duplicate {key!r} line", hits[1].line, 1, source)
    if not hits:
        if required:
            raise ParseError(f"missing {key!r} line", 1, 1, source)
        return None
    return hits[0]


# -- automata -----------------------------------------------------------------


def parse_automaton(text: str, source: str = "<string>") -> SafetyAutomaton:
    """`alphabet:`/`states:`/`initial:` lines plus one `trans: q a ql qr`
    line per transition."""
    lines = _key_lines(text, source)
    _reject_unknown(lines, ("alphabet", "states", "initial", "trans"), source)
    alphabet = _single(lines, "alphabet", source).tokens
    states = _single(lines, "states", source).tokens
    initial = _single(lines, "initial", source).tokens
    trans = []
    for ln in lines:
        if ln.key != "trans":
            continue
        if len(ln.tokens) != 4:
            raise ParseError("trans takes exactly: state letter left right", ln.line, 1, source)
        trans.append(ln.tokens)
    try:
        return SafetyAutomaton(alphabet, states, trans, initial)
    except InputError as e:
        raise ParseError(str(e), 1, 1, source) from e


def format_automaton(aut: SafetyAutomaton) -> str:
    lines = [
        "alphabet: " + " ".join(aut.alphabet),
        "states: " + " ".join(aut.states),
        "initial: " + " ".join(sorted(aut.initial)),
    ]
    lines += [f"trans: {q} {a} {l} {r}" for q, a, l, r in sorted(aut.transitions)]
    return "\n".join(lines) + "\n"


def parse_finite_automaton(text: str, source: str = "<string>") -> FiniteTreeAutomaton:
    """The automaton format with `leaf: q a` and `accept: q0 q1` lines in
    place of `initial:`."""
    lines = _key_lines(text, source)
    _reject_unknown(lines, ("alphabet", "states", "trans", "leaf", "accept"), source)
    alphabet = _single(lines, "alphabet", source).tokens
    states = _single(lines, "states", source).tokens
    internal, leaves, accepting = [], [], []
    for ln in lines:
        if ln.key == "trans":
            if len(ln.tokens) != 4:
                raise ParseError("trans takes exactly: state letter left right", ln.line, 1, source)
            internal.append(ln.tokens)
        elif ln.key == "leaf":
            if len(ln.tokens) != 2:
                raise ParseError("leaf takes exactly: state letter", ln.line, 1, source)
            leaves.append(ln.tokens)
        elif ln.key == "accept":
            accepting.extend(ln.tokens)
    try:
        return FiniteTreeAutomaton(alphabet, states, internal, leaves, accepting)
    except InputError as e:
        raise ParseError(str(e), 1, 1, source) from e


def format_finite_automaton(aut: FiniteTreeAutomaton) -> str:
    lines = [
        "alphabet: " + " ".join(aut.alphabet),
        "states: " + " ".join(aut.states),
        "accept: " + " ".join(sorted(aut.accepting)),
    ]
    lines += [f"trans: {q} {a} {l} {r}" for q, a, l, r in sorted(aut.internal)]
    lines += [f"leaf: {q} {a}" for q, a in sorted(aut.leaves)]
    return "\n".join(lines) + "\n"


# -- patterns ------------------------------------------------------------------


def _vertex_decl(tokens: tuple[str, ...], line: int, source: str):
    if not tokens:
        raise ParseError("vertex needs a name", line, 1, source)
    name = tokens[0]
    label = None
    root = False
    for tok in tokens[1:]:
        if tok == "root":
            root = True
        elif tok.startswith("label="):
            label = tok[len("label="):]
        else:
            raise ParseError(f"unknown vertex option {tok!r} (want 'root' or 'label=X')", line, 1, source)
    return name, label, root


def parse_pattern(text: str, source: str = "<string>") -> Pattern:
    """`alphabet:` line, `vertex: name [label=X] [root]` lines, and
    `edge: src kind tgt` lines with kind in L/R/S/D."""
    lines = _key_lines(text, source)
    _reject_unknown(lines, ("alphabet", "vertex", "edge"), source)
    alphabet = _single(lines, "alphabet", source).tokens
    vertices, roots, edges = [], [], []
    labels = {}
    for ln in lines:
        if ln.key == "vertex":
            name, label, is_root = _vertex_decl(ln.tokens, ln.line, source)
            vertices.append(name)
            if label is not None:
                labels[name] = label
            if is_root:
                roots.append(name)
        elif ln.key == "edge":
            if len(ln.tokens) != 3:
                raise ParseError("edge takes exactly: source kind target", ln.line, 1, source)
            edges.append(ln.tokens)
    try:
        return Pattern.build(alphabet, vertices, roots, edges, labels)
    except InputError as e:
        raise ParseError(str(e), 1, 1, source) from e


def format_pattern(p: Pattern) -> str:
    labels = dict(p.labelling)
    lines = ["alphabet: " + " ".join(p.alphabet)]
    for v in p.vertices:
        parts = [f"vertex: {v}"]
        if v in labels:
            parts.append(f"label={labels[v]}")
        if v in p.roots:
            parts.append("root")
        lines.append(" ".join(parts))
    lines += [f"edge: {s} {k} {t}" for s, k, t in p.edges]
    return "\n".join(lines) + "\n"


# -- S-expressions -------------------------------------------------------------


class _Atom(NamedTuple):
    text: str
    line: int
    column: int
    quoted: bool


class _Form(NamedTuple):
    items: tuple
    line: int
    column: int


_Node = Union[_Atom, _Form]


def _tokenize_sexp(text: str, source: str) -> list:
    toks = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c in " \t\r":
            col += 1
            i += 1
        elif c in ";#":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            toks.append(_Atom(c, line, col, False))
            col += 1
            i += 1
        elif c == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            begin = i
            while i < n and text[i] not in '"\n':
                i += 1
                col += 1
            if i >= n or text[i] != '"':
                raise ParseError("unterminated string", start_line, start_col, source)
            toks.append(_Atom(text[begin:i], start_line, start_col, True))
            i += 1
            col += 1
        else:
            start_col = col
            begin = i
            while i < n and text[i] not in ' \t\r\n();#"':
                i += 1
                col += 1
            toks.append(_Atom(text[begin:i], line, start_col, False))
    return toks


def _parse_sexps(text: str, source: str) -> list[_Node]:
    stack: list[list] = [[]]
    opens: list[_Atom] = []
    for tok in _tokenize_sexp(text, source):
        if not tok.quoted and tok.text == "(":
            stack.append([])
            opens.append(tok)
        elif not tok.quoted and tok.text == ")":
            if not opens:
                raise ParseError("unmatched ')'", tok.line, tok.column, source)
            items = stack.pop()
            open_tok = opens.pop()
            stack[-1].append(_Form(tuple(items), open_tok.line, open_tok.column))
        else:
            stack[-1].append(tok)
    if opens:
        raise ParseError("unclosed '('", opens[-1].line, opens[-1].column, source)
    return stack[0]


def _sole_sexp(text: str, source: str) -> _Node:
    forms = _parse_sexps(text, source)
    if not forms:
        raise ParseError("expected an expression, found none", 1, 1, source)
    if len(forms) > 1:
        extra = forms[1]
        raise ParseError("expected exactly one top-level expression", extra.line, extra.column, source)
    return forms[0]


def _head(node: _Node, source: str) -> str:
    if isinstance(node, _Atom) or not node.items or not isinstance(node.items[0], _Atom):
        raise ParseError("expected a '(head ...)' form", node.line, node.column, source)
    return node.items[0].text


def _want_atom(node: _Node, what: str, source: str) -> str:
    if not isinstance(node, _Atom):
        raise ParseError(f"expected {what}", node.line, node.column, source)
    return node.text


def _want_arity(node: _Form, arity: int, usage: str, source: str):
    if len(node.items) - 1 != arity:
        raise ParseError(f"expected ({usage})", node.line, node.column, source)


def _want_count(node: _Atom, source: str) -> int:
    try:
        value = int(node.text)
    except ValueError:
        value = -1
    if value < 0:
        raise ParseError(f"expected a natural number, got {node.text!r}", node.line, node.column, source)
    return value


# -- finite-tree literals --------------------------------------------------------


def _tree_labels(node: _Node, pos: str, out: dict, source: str):
    if isinstance(node, _Atom) or not node.items:
        raise ParseError("expected a (label ...) tree node", node.line, node.column, source)
    out[pos] = _want_atom(node.items[0], "a label", source)
    if len(node.items) == 1:
        return
    if len(node.items) != 3:
        raise ParseError("a tree node takes 0 or 2 subtrees", node.line, node.column, source)
    _tree_labels(node.items[1], pos + "L", out, source)
    _tree_labels(node.items[2], pos + "R", out, source)


def parse_tree(text: str, source: str = "<string>") -> FiniteTree:
    """Nested-parentheses literal like `(a (b) (c (a) (b)))`; an optional
    `alphabet: ...` line widens the alphabet beyond the labels used."""
    header: list[str] = []
    body_lines = []
    for raw in text.splitlines():
        stripped = raw.split("#", 1)[0].strip()
        if stripped.startswith("alphabet:"):
            header = stripped[len("alphabet:"):].split()
            body_lines.append("")
        else:
            body_lines.append(raw)
    node = _sole_sexp("\n".join(body_lines), source)
    labels: dict[str, str] = {}
    _tree_labels(node, "", labels, source)
    alphabet = tuple(header) if header else tuple(sorted(set(labels.values())))
    try:
        return FiniteTree.from_map(alphabet, labels)
    except InputError as e:
        raise ParseError(str(e), node.line, node.column, source) from e


def format_tree(tree: FiniteTree) -> str:
    def render(pos: str) -> str:
        if pos + "L" in tree:
            return f"({tree.label(pos)} {render(pos + 'L')} {render(pos + 'R')})"
        return f"({tree.label(pos)})"

    return "alphabet: " + " ".join(tree.alphabet) + "\n" + render("") + "\n"


# -- Boolean combinations of patterns ----------------------------------------------


def _inline_pattern(node: _Form, source: str) -> Pattern:
    alphabet = None
    vertices, roots, edges = [], [], []
    labels = {}
    for part in node.items[1:]:
        key = _head(part, source)
        toks = tuple(_want_atom(x, "a token", source) for x in part.items[1:])
        if key == "alphabet":
            if alphabet is not None:
                raise ParseError("duplicate alphabet", part.line, part.column, source)
            alphabet = toks
        elif key == "vertex":
            name, label, is_root = _vertex_decl(toks, part.line, source)
            vertices.append(name)
            if label is not None:
                labels[name] = label
            if is_root:
                roots.append(name)
        elif key == "edge":
            if len(toks) != 3:
                raise ParseError("edge takes exactly: source kind target", part.line, part.column, source)
            edges.append(toks)
        else:
            raise ParseError(f"unknown pattern part {key!r}", part.line, part.column, source)
    if alphabet is None:
        raise ParseError("inline pattern needs an (alphabet ...) part", node.line, node.column, source)
    try:
        return Pattern.build(alphabet, vertices, roots, edges, labels)
    except InputError as e:
        raise ParseError(str(e), node.line, node.column, source) from e


def _bccq_formula(node: _Node, base_dir: Optional[str], source: str) -> BccqFormula:
    if isinstance(node, _Atom):
        if node.text == "true":
            return BoolConstant(True)
        if node.text == "false":
            return BoolConstant(False)
        raise ParseError(f"unexpected atom {node.text!r}", node.line, node.column, source)
    head = _head(node, source)
    args = node.items[1:]
    if head == "pattern":
        if len(args) == 1 and isinstance(args[0], _Atom) and args[0].quoted:
            if base_dir is None:
                raise ParseError(
                    "pattern file references need a base directory", args[0].line, args[0].column, source
                )
            path = os.path.join(base_dir, args[0].text)
            try:
                with open(path, encoding="utf-8") as fh:
                    return PatternAtom(parse_pattern(fh.read(), source=path))
            except OSError as e:
                raise ParseError(f"cannot read pattern file: {e}", args[0].line, args[0].column, source) from e
        return PatternAtom(_inline_pattern(node, source))
    if head == "not":
        _want_arity(node, 1, "not <formula>", source)
        return Negation(_bccq_formula(args[0], base_dir, source))
    if head == "and":
        return Conjunction(tuple(_bccq_formula(a, base_dir, source) for a in args))
    if head == "or":
        return Disjunction(tuple(_bccq_formula(a, base_dir, source) for a in args))
    raise ParseError(f"unknown connective {head!r}", node.line, node.column, source)


def parse_bccq(text: str, source: str = "<string>", base_dir: Optional[str] = None) -> BccqFormula:
    """Boolean S-expression over (pattern "file.pat") references and
    inline (pattern (alphabet ...) (vertex ...) ...) blocks."""
    return _bccq_formula(_sole_sexp(text, source), base_dir, source)


# -- local first-order sentences -----------------------------------------------------


_FO_BINARY = {"child-l": ChildL, "child-r": ChildR, "child": Child, "ancestor": Ancestor, "=": Eq}
_FO_DIST = {"dist<=": DistLE, "dist>": DistGT}


def _fo_formula(node: _Node, source: str):
    if isinstance(node, _Atom):
        if node.text == "true":
            return And(())
        if node.text == "false":
            return Or(())
        raise ParseError(f"unexpected atom {node.text!r}", node.line, node.column, source)
    head = _head(node, source)
    args = node.items[1:]
    if head == "root":
        _want_arity(node, 1, "root <var>", source)
        return Root(_want_atom(args[0], "a variable", source))
    if head == "label":
        _want_arity(node, 2, "label <letter> <var>", source)
        return HasLabel(_want_atom(args[0], "a letter", source), _want_atom(args[1], "a variable", source))
    if head in _FO_BINARY:
        _want_arity(node, 2, f"{head} <var> <var>", source)
        return _FO_BINARY[head](_want_atom(args[0], "a variable", source), _want_atom(args[1], "a variable", source))
    if head in _FO_DIST:
        _want_arity(node, 3, f"{head} <radius> <var> <var>", source)
        radius = _want_count(args[0], source) if isinstance(args[0], _Atom) else None
        if radius is None:
            raise ParseError("expected a radius", args[0].line, args[0].column, source)
        return _FO_DIST[head](radius, _want_atom(args[1], "a variable", source), _want_atom(args[2], "a variable", source))
    if head == "not":
        _want_arity(node, 1, "not <formula>", source)
        return Not(_fo_formula(args[0], source))
    if head == "and":
        return And(tuple(_fo_formula(a, source) for a in args))
    if head == "or":
        return Or(tuple(_fo_formula(a, source) for a in args))
    if head == "implies":
        _want_arity(node, 2, "implies <formula> <formula>", source)
        return Implies(_fo_formula(args[0], source), _fo_formula(args[1], source))
    if head in ("exists", "forall"):
        _want_arity(node, 2, f"{head} <var> <formula>", source)
        var = _want_atom(args[0], "a variable", source)
        body = _fo_formula(args[1], source)
        return Exists(var, body) if head == "exists" else Forall(var, body)
    raise ParseError(f"unknown formula head {head!r}", node.line, node.column, source)


def _basic_sentence(node: _Form, alphabet: tuple[str, ...], source: str) -> LocalAtom:
    items = node.items[1:]
    if len(items) < 2 or _want_atom(items[0], "':r'", source) != ":r":
        raise ParseError("expected (basic :r <radius> (local <formula>) ...)", node.line, node.column, source)
    if not isinstance(items[1], _Atom):
        raise ParseError("expected a radius", items[1].line, items[1].column, source)
    radius = _want_count(items[1], source)
    locals_ = []
    for part in items[2:]:
        if _head(part, source) != "local" or len(part.items) != 2:
            raise ParseError("expected (local <formula>)", part.line, part.column, source)
        locals_.append(_fo_formula(part.items[1], source))
    try:
        return LocalAtom(BasicLocalSentence(alphabet, radius, tuple(locals_)))
    except InputError as e:
        raise ParseError(str(e), node.line, node.column, source) from e


def _fo_combination(node: _Node, alphabet: tuple[str, ...], source: str) -> LocalCombination:
    if isinstance(node, _Atom):
        if node.text == "true":
            return BoolConstant(True)
        if node.text == "false":
            return BoolConstant(False)
        raise ParseError(f"unexpected atom {node.text!r}", node.line, node.column, source)
    head = _head(node, source)
    args = node.items[1:]
    if head == "basic":
        return _basic_sentence(node, alphabet, source)
    if head == "not":
        _want_arity(node, 1, "not <sentence>", source)
        return Negation(_fo_combination(args[0], alphabet, source))
    if head == "and":
        return Conjunction(tuple(_fo_combination(a, alphabet, source) for a in args))
    if head == "or":
        return Disjunction(tuple(_fo_combination(a, alphabet, source) for a in args))
    raise ParseError(f"unknown connective {head!r}", node.line, node.column, source)


def parse_fo(text: str, source: str = "<string>") -> LocalCombination:
    """An `alphabet: a b` header line followed by one S-expression built
    from (basic :r N (local ...) ...) leaves and and/or/not."""
    alphabet: Optional[tuple[str, ...]] = None
    body_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped.startswith("alphabet:"):
            if alphabet is not None:
                raise ParseError("duplicate alphabet line", lineno, 1, source)
            alphabet = tuple(stripped[len("alphabet:"):].split())
            body_lines.append("")
        else:
            body_lines.append(raw)
    if alphabet is None:
        raise ParseError("missing 'alphabet:' header line", 1, 1, source)
    node = _sole_sexp("\n".join(body_lines), source)
    return _fo_combination(node, alphabet, source)
