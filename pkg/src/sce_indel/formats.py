"""Text formats: FASTA records, edit-script dumps, CSV helpers.

Letters are integers ``0..sigma-1``; text uses ``A,C,G,T`` for 0..3 and
continues with further capitals for larger alphabets.
"""
from __future__ import annotations

import csv
import io
import string
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .seqgen import EditScript, ParameterError

ALPHABET = "ACGT" + "".join(c for c in string.ascii_uppercase if c not in "ACGT")
_LOOKUP = np.full(256, 255, np.uint8)
for _code, _ch in enumerate(ALPHABET):
    _LOOKUP[ord(_ch)] = _code
    _LOOKUP[ord(_ch.lower())] = _code


def encode(text: str) -> np.ndarray:
    raw = np.frombuffer(text.encode("ascii"), dtype=np.uint8)
    out = _LOOKUP[raw]
    if np.any(out == 255):
        bad = sorted({chr(c) for c in raw[out == 255]})
        raise ParameterError(f"unknown letters {bad}")
    return out


def decode(seq: np.ndarray) -> str:
    return "".join(ALPHABET[c] for c in np.asarray(seq).tolist())


def fmt(x) -> str:
    """Floats at 12 significant digits; everything else via str()."""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    return str(x)


def write_fasta(path, records: Iterable[tuple[str, np.ndarray]], width: int = 80) -> None:
    with open(path, "w") as fh:
        for name, seq in records:
            fh.write(f">{name}\n")
            text = decode(seq)
            for s in range(0, len(text), width):
                fh.write(text[s:s + width] + "\n")
            if not text:
                fh.write("\n")


def read_fasta(path) -> list[tuple[str, np.ndarray]]:
    records, name, chunks = [], None, []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith(">"):
            if name is not None:
                records.append((name, encode("".join(chunks))))
            name, chunks = line[1:].strip(), []
        else:
            if name is None:
                raise ParameterError(f"{path}: sequence data before the first '>' header")
            chunks.append(line)
    if name is not None:
        records.append((name, encode("".join(chunks))))
    if not records:
        raise ParameterError(f"{path}: no FASTA records")
    return records


def dump_script(script: EditScript) -> str:
    """One line per generative position: ``pos  ins:<str|->  del:<0|1>  sub:<letter|->``.

    ``pos`` is the absolute 1-based position in S; insertions sit to its left.
    """
    out = io.StringIO()
    out.write("# edit script; pos is 1-based in S, insertions go left of pos\n")
    out.write(f"# p={script.p} m_prime={script.m_prime} sigma={script.sigma}\n")
    off = script.ins_offsets
    for j in range(script.m_prime):
        ins = decode(script.ins_letters[off[j]:off[j + 1]]) or "-"
        sub = ALPHABET[script.sub_to[j]] if script.sub_to[j] >= 0 else "-"
        out.write(f"{script.p + j + 1}  ins:{ins}  del:{int(script.deleted[j])}  sub:{sub}\n")
    return out.getvalue()


def parse_script(text: str) -> EditScript:
    header = {}
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    key, val = tok.split("=", 1)
                    header[key] = int(val)
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ParameterError(f"bad edit-script line: {line!r}")
        pos = int(parts[0])
        fields = {}
        for tok in parts[1:]:
            key, _, val = tok.partition(":")
            fields[key] = val
        if set(fields) != {"ins", "del", "sub"}:
            raise ParameterError(f"bad edit-script line: {line!r}")
        rows.append((pos, fields))
    if not rows:
        raise ParameterError("empty edit script")
    rows.sort(key=lambda r: r[0])
    p = header.get("p", rows[0][0] - 1)
    m_prime = header.get("m_prime", len(rows))
    sigma = header.get("sigma", 4)
    if [r[0] for r in rows] != list(range(p + 1, p + m_prime + 1)):
        raise ParameterError("edit script must list every generative position exactly once")
    ins_len = np.zeros(m_prime, np.int64)
    deleted = np.zeros(m_prime, bool)
    sub_to = np.full(m_prime, -1, np.int16)
    letters = []
    for j, (_, f) in enumerate(rows):
        if f["ins"] != "-":
            seg = encode(f["ins"])
            ins_len[j] = seg.size
            letters.extend(seg.tolist())
        deleted[j] = f["del"] == "1"
        if f["sub"] != "-":
            sub_to[j] = int(encode(f["sub"])[0])
    return EditScript(p, m_prime, ins_len, np.array(letters, np.uint8), deleted, sub_to, sigma)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], delimiter: str = ",") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_dat(path, xs, ys, comment: str = "") -> None:
    """Two-column space-separated plot data (gnuplot friendly)."""
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for x, y in zip(xs, ys):
            fh.write(f"{fmt(float(x))} {fmt(float(y))}\n")
