#!/usr/bin/env python3
"""Reference character-offset F1 values for the metric tests.

Uses the competition scorer's formula (Dice coefficient over offset
sets, with the empty-set conventions) in exact fractions and prints the
hand-picked cases frozen into the tests.
"""
from fractions import Fraction


def f1(gold, pred):
    gold, pred = set(gold), set(pred)
    if not gold and not pred:
        return Fraction(1)
    if not gold or not pred:
        return Fraction(0)
    return Fraction(2 * len(gold & pred), len(gold) + len(pred))


CASES = [
    ([], []),
    ([], [0]),
    ([0], []),
    ([3, 4, 5], [3, 4, 5]),
    ([0, 1], [5, 6]),
    (range(0, 10), range(0, 5)),
    (range(0, 5), range(0, 10)),
    ([0, 1, 2], [2, 3]),
    ([5], [5]),
    (range(10, 20), [12, 13]),
    ([0, 2, 4], [0, 1, 2]),
    (range(0, 100), range(50, 150)),
    ([7], [8]),
    ([1, 2, 3, 4], [2, 3]),
    ([2, 3], [1, 2, 3, 4]),
    (range(0, 3), range(0, 7)),
    ([10, 11, 12, 20, 21], [11, 12, 13, 21]),
    ([0], [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]),
    (range(1000, 1010), range(1005, 1015)),
    ([4, 5, 6], [6]),
    ([42], [41, 42, 43]),
    (range(0, 50, 2), range(0, 50, 3)),
]

for gold, pred in CASES:
    v = f1(gold, pred)
    print(f"{{{{{', '.join(map(str, gold))}}}, {{{', '.join(map(str, pred))}}}, "
          f"{float(v):.17g}}},")
