#!/usr/bin/env python3
"""Generates the demo corpora in data/.

Sentences are built from a small filler vocabulary with planted insult
words; the gold spans are the character ranges of the insults, computed
while assembling each sentence so they are correct by construction.
"""
import csv
import random

TOXIC = ["idiot", "moron", "fool", "trash", "clown"]
FILLER = ["you", "are", "such", "a", "total", "really", "my", "friend", "kind",
          "very", "nice", "person", "what", "lovely", "day", "thanks", "for", "this"]


def make_sentence(rng):
    length = rng.randint(4, 8)
    n_toxic = rng.choice([0, 1, 1, 2])
    slots = sorted(rng.sample(range(length), min(n_toxic, length)))
    words = []
    for i in range(length):
        if i in slots:
            words.append((rng.choice(TOXIC), True))
        else:
            words.append((rng.choice(FILLER), False))
    text = ""
    offsets = []
    for i, (word, toxic) in enumerate(words):
        if i:
            text += " "
        if toxic:
            offsets.extend(range(len(text), len(text) + len(word)))
        text += word
    text += rng.choice([".", "!", "?", "!", "."])
    return text, offsets


def write_corpus(path, rng, n):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_ALL, lineterminator="\n")
        writer.writerow(["spans", "text"])
        for _ in range(n):
            text, offsets = make_sentence(rng)
            writer.writerow(["[" + ", ".join(map(str, offsets)) + "]", text])


def main():
    rng = random.Random(7)
    write_corpus("data/demo_corpus.csv", rng, 48)
    write_corpus("data/demo_trial.csv", rng, 12)


if __name__ == "__main__":
    main()
