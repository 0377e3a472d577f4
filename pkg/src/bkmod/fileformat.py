"""Plain-text module files: parsing with positioned diagnostics, and rendering.

The grammar is documented in docs/GRAMMAR.md.  A file looks like::

    bkmod-modules 1
    ctx p=3 N=6 M=54 E=3 + 1*u^2
    kisin M rank=2
      row 1, 26*u
      row 0, 3 + 1*u^2
    end
    morphism beta M -> S0
      row 3, 1*u
    end
    sequence cx alpha, beta
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .breuil import BreuilModule, from_kisin
from .errors import BKError, ParseError
from .kisin import KisinModule, KisinMorphism, make_kisin, make_morphism
from .series import S_RING, SIGMA, RingContext, render_coeffs

FORMAT_VERSION = 1
MAGIC = "bkmod-modules"

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_POLY_TERM = re.compile(r"\s*(?:(\d+)\s*(\*)?\s*)?(u(?:\s*\^\s*(\d+))?)?\s*")
_S_TERM = re.compile(r"\s*(?:(\d+)\s*\*\s*)?b(\d+)\s*")


@dataclass
class BreuilRecord:
    source: str
    r: int
    monodromy: np.ndarray | None
    module: BreuilModule = field(repr=False, compare=False, default=None)


@dataclass
class ModuleFile:
    ctx: RingContext | None = None
    version: int = FORMAT_VERSION
    kisin: dict[str, KisinModule] = field(default_factory=dict)
    morphisms: dict[str, tuple[str, str, KisinMorphism]] = field(default_factory=dict)
    breuil: dict[str, BreuilRecord] = field(default_factory=dict)
    sequences: dict[str, list[str]] = field(default_factory=dict)

    def module(self, name: str) -> KisinModule:
        if name not in self.kisin:
            raise KeyError(f"no Kisin module named {name!r}")
        return self.kisin[name]

    def sequence(self, name: str) -> list[KisinMorphism]:
        if name not in self.sequences:
            raise KeyError(f"no sequence named {name!r}")
        return [self.morphisms[m][2] for m in self.sequences[name]]

    def __eq__(self, other):
        if not isinstance(other, ModuleFile):
            return NotImplemented
        if self.ctx != other.ctx or self.version != other.version:
            return False
        if self.kisin != other.kisin or self.sequences != other.sequences:
            return False
        if self.morphisms.keys() != other.morphisms.keys():
            return False
        for k, (s, t, f) in self.morphisms.items():
            s2, t2, g = other.morphisms[k]
            if (s, t) != (s2, t2) or not np.array_equal(f.matrix, g.matrix):
                return False
        if self.breuil.keys() != other.breuil.keys():
            return False
        for k, b in self.breuil.items():
            c = other.breuil[k]
            if (b.source, b.r) != (c.source, c.r):
                return False
            if (b.monodromy is None) != (c.monodromy is None):
                return False
            if b.monodromy is not None and not np.array_equal(b.monodromy, c.monodromy):
                return False
        return True


# ---------------------------------------------------------------------------
# element syntax


def parse_poly(text: str, line: int = 0, col: int = 1) -> list[int]:
    """``c0 + c1*u + c2*u^2`` (signs, omitted coefficients and any order allowed)."""
    return _parse_sum(text, line, col, _poly_term)


def parse_s_element(text: str, line: int = 0, col: int = 1) -> list[int]:
    """``a0*b0 + a5*b5`` in the divided-power basis."""
    return _parse_sum(text, line, col, _s_term)


def _poly_term(chunk: str, line: int, col: int) -> tuple[int, int]:
    m = _POLY_TERM.fullmatch(chunk)
    if not m or (m.group(1) is None and m.group(3) is None) or (m.group(2) and not m.group(3)):
        raise ParseError(f"malformed polynomial term {chunk.strip()!r}", line, col)
    c = int(m.group(1)) if m.group(1) is not None else 1
    if m.group(3) is None:
        return 0, c
    return (int(m.group(4)) if m.group(4) is not None else 1), c


def _s_term(chunk: str, line: int, col: int) -> tuple[int, int]:
    m = _S_TERM.fullmatch(chunk)
    if not m:
        stripped = chunk.strip()
        if stripped.isdigit():
            return 0, int(stripped)
        raise ParseError(f"malformed S term {stripped!r} (expected a*bn)", line, col)
    return int(m.group(2)), int(m.group(1)) if m.group(1) is not None else 1


def _parse_sum(text: str, line: int, col: int, term) -> list[int]:
    pieces = []
    sign, start = 1, 0
    for m in re.finditer(r"[+-]", text):
        k = m.start()
        chunk = text[start:k]
        if chunk.strip():
            pieces.append((sign, chunk, col + start))
        elif pieces or m.group() == "+" or sign < 0:
            raise ParseError(f"dangling {m.group()!r}", line, col + k)
        sign = -1 if m.group() == "-" else 1
        start = k + 1
    chunk = text[start:]
    if not chunk.strip():
        raise ParseError("empty expression" if not pieces else "expression ends with an operator", line, col + start)
    pieces.append((sign, chunk, col + start))
    coeffs: dict[int, int] = {}
    for s, chunk, c in pieces:
        deg, val = term(chunk, line, c)
        coeffs[deg] = coeffs.get(deg, 0) + s * val
    out = [0] * (max(coeffs) + 1)
    for d, v in coeffs.items():
        out[d] = v
    return out


# ---------------------------------------------------------------------------
# parsing


class _Lines:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.i = 0

    def next(self):
        """Next meaningful line as (lineno, indent column, stripped text) or None."""
        while self.i < len(self.lines):
            raw = self.lines[self.i]
            self.i += 1
            body = raw.split("#", 1)[0].rstrip()
            if body.strip():
                indent = len(body) - len(body.lstrip())
                return self.i, indent + 1, body.strip()
        return None


def _fields(text: str, line: int, col: int, allowed: set[str], required: set[str]) -> dict[str, tuple[str, int]]:
    """Parse ``key=value`` fields separated by spaces; E= takes the rest of the line."""
    out: dict[str, tuple[str, int]] = {}
    pos = 0
    while pos < len(text):
        while pos < len(text) and text[pos] == " ":
            pos += 1
        if pos >= len(text):
            break
        m = re.match(r"([A-Za-z_]+)=", text[pos:])
        if not m:
            raise ParseError(f"expected key=value, found {text[pos:].split()[0]!r}", line, col + pos)
        key = m.group(1)
        if key not in allowed:
            raise ParseError(f"unknown field {key!r}", line, col + pos)
        if key in out:
            raise ParseError(f"duplicate field {key!r}", line, col + pos)
        vstart = pos + m.end()
        if key == "E":
            vend = len(text)
        else:
            vend = text.find(" ", vstart)
            vend = len(text) if vend < 0 else vend
        out[key] = (text[vstart:vend].strip(), col + vstart)
        pos = vend
    missing = required - out.keys()
    if missing:
        raise ParseError(f"missing field(s): {', '.join(sorted(missing))}", line, col)
    return out


def _int(value: tuple[str, int], line: int) -> int:
    text, col = value
    if not re.fullmatch(r"-?\d+", text):
        raise ParseError(f"expected an integer, found {text!r}", line, col)
    return int(text)


def _name(text: str, line: int, col: int) -> str:
    if not _NAME.match(text):
        raise ParseError(f"invalid name {text!r}", line, col)
    return text


def _rows(lines: _Lines, kind: str, line0: int):
    rows = []
    while True:
        nxt = lines.next()
        if nxt is None:
            raise ParseError("missing 'end'", line0, 1)
        ln, col, text = nxt
        if text == "end":
            return rows
        if text == "monodromy":
            return rows, ln
        if not text.startswith("row "):
            raise ParseError(f"expected 'row' or 'end', found {text.split()[0]!r}", ln, col)
        body = text[4:]
        entries = []
        offset = col + 4
        for part in body.split(","):
            parser = parse_s_element if kind == S_RING else parse_poly
            entries.append(parser(part, ln, offset))
            offset += len(part) + 1
        rows.append((ln, col, entries))


def _matrix(ctx: RingContext, rows, nrows: int | None, ncols: int | None, line: int) -> np.ndarray:
    if nrows is not None and len(rows) != nrows:
        raise ParseError(f"expected {nrows} rows, found {len(rows)}", line, 1)
    if not rows:
        raise ParseError("matrix has no rows", line, 1)
    width = len(rows[0][2]) if ncols is None else ncols
    out = ctx.ring.zeros((len(rows), width, ctx.M))
    for i, (ln, col, entries) in enumerate(rows):
        if len(entries) != width:
            raise ParseError(f"expected {width} entries, found {len(entries)}", ln, col)
        for j, e in enumerate(entries):
            if len(e) > ctx.M:
                raise ParseError(f"entry has degree {len(e) - 1} >= M = {ctx.M}", ln, col)
            out[i, j, : len(e)] = [x % ctx.q for x in e]
    return out


def parse_module_file(text: str) -> ModuleFile:
    lines = _Lines(text)
    first = lines.next()
    if first is None:
        raise ParseError("empty file; expected header", 1, 1)
    ln, col, head = first
    parts = head.split()
    if len(parts) != 2 or parts[0] != MAGIC:
        raise ParseError(f"expected header '{MAGIC} {FORMAT_VERSION}'", ln, col)
    if parts[1] != str(FORMAT_VERSION):
        raise ParseError(f"unsupported format version {parts[1]!r}", ln, col + len(MAGIC) + 1)
    mf = ModuleFile()
    names: set[str] = set()
    while True:
        nxt = lines.next()
        if nxt is None:
            break
        ln, col, text = nxt
        word, _, rest = text.partition(" ")
        rest_col = col + len(word) + 1
        try:
            if word == "ctx":
                if mf.ctx is not None:
                    raise ParseError("duplicate ctx line", ln, col)
                f = _fields(rest, ln, rest_col, {"p", "N", "M", "E"}, {"p", "N", "M", "E"})
                E = parse_poly(*f["E"][:1], ln, f["E"][1])
                mf.ctx = RingContext.create(_int(f["p"], ln), _int(f["N"], ln), _int(f["M"], ln), E)
                continue
            if mf.ctx is None:
                raise ParseError("records must follow the ctx line", ln, col)
            ctx = mf.ctx
            if word == "kisin":
                name_txt, _, frest = rest.partition(" ")
                name = _declare(names, name_txt, ln, rest_col)
                f = _fields(frest, ln, rest_col + len(name_txt) + 1, {"rank", "denom"}, {"rank"})
                rank = _int(f["rank"], ln)
                denom = _int(f["denom"], ln) if "denom" in f else 0
                rows = _rows(lines, SIGMA, ln)
                if isinstance(rows, tuple):
                    raise ParseError("'monodromy' is only allowed in breuil records", rows[1], 1)
                mf.kisin[name] = make_kisin(ctx, rank, _matrix(ctx, rows, rank, rank, ln), denom)
            elif word == "morphism":
                m = re.fullmatch(r"(\S+)\s+(\S+)\s*->\s*(\S+)", rest)
                if not m:
                    raise ParseError("expected 'morphism NAME SOURCE -> TARGET'", ln, rest_col)
                name = _declare(names, m.group(1), ln, rest_col)
                src, tgt = m.group(2), m.group(3)
                for nm in (src, tgt):
                    if nm not in mf.kisin:
                        raise ParseError(f"unknown Kisin module {nm!r}", ln, rest_col + rest.index(nm))
                s, t = mf.kisin[src], mf.kisin[tgt]
                rows = _rows(lines, SIGMA, ln)
                if isinstance(rows, tuple):
                    raise ParseError("'monodromy' is only allowed in breuil records", rows[1], 1)
                F = _matrix(ctx, rows, t.rank, s.rank, ln)
                mf.morphisms[name] = (src, tgt, make_morphism(s, t, F))
            elif word == "breuil":
                name_txt, _, frest = rest.partition(" ")
                name = _declare(names, name_txt, ln, rest_col)
                f = _fields(frest, ln, rest_col + len(name_txt) + 1, {"from", "r"}, {"from", "r"})
                src = f["from"][0]
                if src not in mf.kisin:
                    raise ParseError(f"unknown Kisin module {src!r}", ln, f["from"][1])
                r = _int(f["r"], ln)
                b = from_kisin(mf.kisin[src], r)
                rows = _rows(lines, SIGMA, ln)
                mono = None
                if isinstance(rows, tuple):
                    if rows[0]:
                        raise ParseError("breuil records take no rows before 'monodromy'", rows[0][0][0], 1)
                    mrows = _rows(lines, S_RING, rows[1])
                    if isinstance(mrows, tuple):
                        raise ParseError("duplicate 'monodromy'", mrows[1], 1)
                    mono = _matrix(ctx, mrows, b.rank, b.rank, rows[1])
                    b = b.with_monodromy(mono)
                elif rows:
                    raise ParseError("breuil records have no rows (use 'monodromy')", rows[0][0], rows[0][1])
                mf.breuil[name] = BreuilRecord(src, r, mono, b)
            elif word == "sequence":
                name_txt, _, body = rest.partition(" ")
                name = _declare(names, name_txt, ln, rest_col)
                base = rest_col + len(name_txt) + 1
                items = [(m.group(), base + m.start()) for m in re.finditer(r"[^,\s]+", body)]
                maps = [nm for nm, _ in items]
                if not maps:
                    raise ParseError("a sequence needs at least one morphism", ln, rest_col)
                for mname, c in items:
                    if mname not in mf.morphisms:
                        raise ParseError(f"unknown morphism {mname!r}", ln, c)
                for (a, _), (b, c) in zip(items, items[1:]):
                    if mf.morphisms[a][1] != mf.morphisms[b][0]:
                        raise ParseError(f"morphisms {a!r} and {b!r} do not compose", ln, c)
                mf.sequences[name] = maps
            else:
                raise ParseError(f"unknown record type {word!r}", ln, col)
        except ParseError:
            raise
        except BKError as exc:
            raise ParseError(f"{type(exc).__name__}: {exc}", ln, col) from exc
        except ValueError as exc:
            raise ParseError(f"invalid value: {exc}", ln, col) from exc
    if mf.ctx is None:
        raise ParseError("missing ctx line", len(lines.lines) or 1, 1)
    return mf


def _declare(names: set[str], text: str, line: int, col: int) -> str:
    name = _name(text, line, col)
    if name in names:
        raise ParseError(f"duplicate name {name!r}", line, col)
    names.add(name)
    return name


# ---------------------------------------------------------------------------
# rendering


def _trim(a) -> list[int]:
    a = [int(x) for x in a]
    while a and a[-1] == 0:
        a.pop()
    return a


def render_poly(a) -> str:
    return render_coeffs(_trim(a), SIGMA)


def render_s(a) -> str:
    return render_coeffs(_trim(a), S_RING)


def _render_rows(A: np.ndarray, render) -> list[str]:
    return ["  row " + ", ".join(render(A[i, j]) for j in range(A.shape[1])) for i in range(A.shape[0])]


def render_module_file(mf: ModuleFile) -> str:
    ctx = mf.ctx
    out = [f"{MAGIC} {mf.version}"]
    out.append(f"ctx p={ctx.p} N={ctx.N} M={ctx.M} E={render_poly(ctx.E.coeffs)}")
    for name, m in mf.kisin.items():
        head = f"kisin {name} rank={m.rank}" + (f" denom={m.denom_exp}" if m.denom_exp else "")
        out += [head, *_render_rows(m.frobenius, render_poly), "end"]
    for name, (s, t, f) in mf.morphisms.items():
        out += [f"morphism {name} {s} -> {t}", *_render_rows(f.matrix, render_poly), "end"]
    for name, b in mf.breuil.items():
        out.append(f"breuil {name} from={b.source} r={b.r}")
        if b.monodromy is not None:
            out += ["monodromy", *_render_rows(b.monodromy, render_s)]
        out.append("end")
    for name, maps in mf.sequences.items():
        out.append(f"sequence {name} {', '.join(maps)}")
    return "\n".join(out) + "\n"
