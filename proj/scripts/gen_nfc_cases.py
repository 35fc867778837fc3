#!/usr/bin/env python3
"""Regenerates tests/data/nfc_cases.tsv.

Each line: <input-escaped>\t<nfc-escaped>, where non-ASCII and control
characters are escaped as \\uXXXX (or \\UXXXXXXXX beyond the BMP) so the file
itself stays plain ASCII. The expected column is produced by Python's
unicodedata, which serves as the independent normalization oracle.
"""

import unicodedata
from pathlib import Path

CASES = [
    # Latin composition: NFD input must compose.
    "cláusula",
    "cláusula",
    "Straße führt über die Brücke",
    "über Äpfel zählen",
    "niño español mañana",
    "façade française",
    # Cyrillic: composed/decomposed И + breve, Е + diaeresis.
    "Й й Ё ё",
    "русский язык",
    # Greek with combining acute.
    "ά ά έλλην",
    # Hangul: jamo sequence composes to syllables.
    "한국",
    "한국어",
    # Singleton decompositions: Angstrom sign, Ohm sign.
    "Å Ω",
    # Combining mark reordering: cedilla (ccc 202) before acute (ccc 230).
    "ḉ ḉ",
    # Multiple marks on one base.
    "é̄ ḗ",
    # Compatibility characters must NOT change under NFC.
    "ﬁle ① ½",
    # ASCII passthrough.
    "plain ascii 1,000 pre-1990 test.",
    # Mixed content.
    "GATT cláusula 1979 йогурт",
    # Non-BMP (musical symbol with decomposition).
    "\U0001d15e \U0001d1c0",
    # Empty-adjacent edge: single combining mark.
    "́",
    "à̖́",
]


def esc(s: str) -> str:
    out = []
    for ch in s:
        cp = ord(ch)
        if 0x20 <= cp < 0x7F and ch not in "\\":
            out.append(ch)
        elif cp <= 0xFFFF:
            out.append(f"\\u{cp:04x}")
        else:
            out.append(f"\\U{cp:08x}")
    return "".join(out)


def main() -> None:
    out_path = Path(__file__).resolve().parent.parent / "tests" / "data" / "nfc_cases.tsv"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for case in CASES:
        expected = unicodedata.normalize("NFC", case)
        lines.append(f"{esc(case)}\t{esc(expected)}")
    out_path.write_text("\n".join(lines) + "\n", encoding="ascii")
    print(f"wrote {len(lines)} cases to {out_path}")


if __name__ == "__main__":
    main()
