#!/usr/bin/env python3
"""Regenerates include/toxspan/unicode_tables.hpp from Python's unicodedata.

Emitted tables:
  kWhiteSpace  - code points carrying the White_Space property (fixed list,
                 the property is stable across Unicode versions)
  kWordChar    - letters (general category L*), letter numbers (Nl) and
                 decimal digits (Nd)
  kPunct       - general category P*
  kLowerPairs  - simple 1:1 lowercase mappings; code points whose lowercase
                 expansion is longer than one character are left unmapped so
                 that lowercasing stays length-preserving
"""

import sys
import unicodedata

MAX_CP = 0x110000

# White_Space per PropList.txt.
WHITESPACE = (
    [0x0009, 0x000A, 0x000B, 0x000C, 0x000D, 0x0020, 0x0085, 0x00A0, 0x1680]
    + list(range(0x2000, 0x200B))
    + [0x2028, 0x2029, 0x202F, 0x205F, 0x3000]
)


def to_ranges(code_points):
    out = []
    start = prev = None
    for cp in code_points:
        if start is None:
            start = prev = cp
        elif cp == prev + 1:
            prev = cp
        else:
            out.append((start, prev))
            start = prev = cp
    if start is not None:
        out.append((start, prev))
    return out


def collect(pred):
    return to_ranges(cp for cp in range(MAX_CP) if pred(cp))


def is_word_char(cp):
    ch = chr(cp)
    return ch.isalpha() or unicodedata.category(ch) in ("Nd", "Nl")


def is_punct(cp):
    return unicodedata.category(chr(cp)).startswith("P")


def lower_pairs():
    out = []
    for cp in range(MAX_CP):
        ch = chr(cp)
        lo = ch.lower()
        if lo != ch and len(lo) == 1:
            out.append((cp, ord(lo)))
    return out


def emit_ranges(f, name, ranges):
    f.write(f"inline constexpr char32_t {name}[][2] = {{\n")
    for i in range(0, len(ranges), 6):
        row = ", ".join(f"{{0x{a:04X}, 0x{b:04X}}}" for a, b in ranges[i : i + 6])
        f.write(f"    {row},\n")
    f.write("};\n\n")


def main():
    path = sys.argv[1] if len(sys.argv) > 1 else "include/toxspan/unicode_tables.hpp"
    ws = to_ranges(WHITESPACE)
    word = collect(is_word_char)
    punct = collect(is_punct)
    pairs = lower_pairs()

    with open(path, "w", encoding="utf-8") as f:
        f.write(
            "// Generated by scripts/gen_unicode_tables.py -- do not edit by hand.\n"
            f"// Unicode data version: {unicodedata.unidata_version}\n"
            "#pragma once\n\n"
            "#include <cstdint>\n\n"
            "namespace toxspan::uni::tables {\n\n"
        )
        emit_ranges(f, "kWhiteSpace", ws)
        emit_ranges(f, "kWordChar", word)
        emit_ranges(f, "kPunct", punct)
        f.write("inline constexpr char32_t kLowerPairs[][2] = {\n")
        for i in range(0, len(pairs), 6):
            row = ", ".join(f"{{0x{a:04X}, 0x{b:04X}}}" for a, b in pairs[i : i + 6])
            f.write(f"    {row},\n")
        f.write("};\n\n")
        f.write("}  // namespace toxspan::uni::tables\n")

    print(
        f"{path}: {len(ws)} whitespace, {len(word)} word, "
        f"{len(punct)} punct ranges, {len(pairs)} lowercase pairs"
    )


if __name__ == "__main__":
    main()
