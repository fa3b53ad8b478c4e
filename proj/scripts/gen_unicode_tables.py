#!/usr/bin/env python3
"""Regenerates include/roi/detail/unicode_tables.hpp from the Python
unicodedata database.

Emits two sorted tables:
  * canonical composition pairs (first, second) -> composed, excluding the
    algorithmic Hangul compositions,
  * simple one-to-one lowercase mappings.

Run from the repository root:  python3 scripts/gen_unicode_tables.py
"""

import sys
import unicodedata

OUT = "include/roi/detail/unicode_tables.hpp"


def compose_pairs():
    pairs = []
    for cp in range(0x110000):
        if 0xAC00 <= cp <= 0xD7A3:  # Hangul syllables compose algorithmically
            continue
        ch = chr(cp)
        decomp = unicodedata.decomposition(ch)
        if not decomp or decomp.startswith("<"):
            continue
        parts = decomp.split()
        if len(parts) != 2:
            continue
        a, b = (int(p, 16) for p in parts)
        # Keep only pairs that NFC actually recomposes (drops exclusions).
        if unicodedata.normalize("NFC", chr(a) + chr(b)) == ch:
            pairs.append((a, b, cp))
    pairs.sort()
    return pairs


def lower_map():
    entries = []
    for cp in range(0x110000):
        lo = chr(cp).lower()
        if len(lo) == 1 and ord(lo) != cp:
            entries.append((cp, ord(lo)))
    entries.sort()
    return entries


def main():
    pairs = compose_pairs()
    lowers = lower_map()
    with open(OUT, "w", encoding="utf-8") as f:
        w = f.write
        w("// Generated by scripts/gen_unicode_tables.py -- do not edit.\n")
        w("// Unicode %s data.\n" % unicodedata.unidata_version)
        w("#pragma once\n\n#include <cstdint>\n\n")
        w("namespace roi::detail {\n\n")
        w("struct ComposePair {\n  char32_t first;\n  char32_t second;\n  char32_t composed;\n};\n\n")
        w("// Canonical composition pairs, sorted by (first, second).\n")
        w("inline constexpr ComposePair kComposePairs[] = {\n")
        for a, b, c in pairs:
            w("    {0x%04X, 0x%04X, 0x%04X},\n" % (a, b, c))
        w("};\n\n")
        w("struct CaseMapping {\n  char32_t from;\n  char32_t to;\n};\n\n")
        w("// Simple one-to-one lowercase mappings, sorted by source code point.\n")
        w("inline constexpr CaseMapping kLowercaseMap[] = {\n")
        for a, b in lowers:
            w("    {0x%04X, 0x%04X},\n" % (a, b))
        w("};\n\n")
        w("}  // namespace roi::detail\n")
    print("wrote %s: %d compose pairs, %d case mappings" % (OUT, len(pairs), len(lowers)))


if __name__ == "__main__":
    sys.exit(main())
