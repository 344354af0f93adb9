#!/usr/bin/env python3
"""Reference logits for the encoder forward-pass test.

Implements the same architecture independently in numpy (float64) on a
tiny config, with weights filled by a shared cross-language LCG, and
prints the logits to be frozen into tests/encoder_test.cpp.
"""
import math

import numpy as np

MASK64 = (1 << 64) - 1


class Lcg:
    """Matches the fill_lcg helper in the C++ test exactly."""

    def __init__(self, seed):
        self.state = seed & MASK64

    def next(self):
        self.state = (self.state * 6364136223846793005 + 1442695040888963407) & MASK64
        return ((self.state >> 33) / float(1 << 31) - 0.5) * 0.2


V, D, L, H, T, FF, C = 7, 4, 2, 2, 3, 8, 2
DEPTH = [1, 2]
IDS = [[1, 2, 3], [4, 5, 0]]  # second row has one pad
MASK = [[1, 1, 1], [1, 1, 0]]


def fill(gen, rows, cols, plus_one=False):
    m = np.empty((rows, cols))
    for r in range(rows):
        for c in range(cols):
            m[r, c] = gen.next()
    return m + 1.0 if plus_one else m


def layer_norm(x, gain, bias):
    mean = x.mean(axis=1, keepdims=True)
    var = ((x - mean) ** 2).mean(axis=1, keepdims=True)
    xhat = (x - mean) / np.sqrt(var + 1e-5)
    return xhat * gain + bias


def gelu(x):
    return x * 0.5 * np.vectorize(math.erfc)(-x / math.sqrt(2.0))


def main():
    gen = Lcg(42)
    tok_emb = fill(gen, V, D)
    pos_emb = fill(gen, 16, D)  # max_len 16
    blocks = []
    for _ in range(L):
        blk = {}
        for name, (r, c) in [("wq", (D, D)), ("bq", (D, 1)), ("wk", (D, D)), ("bk", (D, 1)),
                             ("wv", (D, D)), ("bv", (D, 1)), ("wo", (D, D)), ("bo", (D, 1)),
                             ("w1", (D, FF)), ("b1", (FF, 1)), ("w2", (FF, D)), ("b2", (D, 1)),
                             ("ln1_gain", (D, 1)), ("ln1_bias", (D, 1)),
                             ("ln2_gain", (D, 1)), ("ln2_bias", (D, 1))]:
            blk[name] = fill(gen, r, c, plus_one=name.endswith("gain"))
        blocks.append(blk)
    head_w = fill(gen, len(DEPTH) * D, C)
    head_b = fill(gen, C, 1)

    dh = D // H
    rows = []
    for b in range(2):
        for t in range(T):
            rows.append(tok_emb[IDS[b][t]] + pos_emb[t])
    x = np.array(rows)
    hidden = [x]
    for blk in blocks:
        q = x @ blk["wq"] + blk["bq"].T
        k = x @ blk["wk"] + blk["bk"].T
        v = x @ blk["wv"] + blk["bv"].T
        attn = np.zeros_like(x)
        for s in range(2):
            r0 = s * T
            for h in range(H):
                c0 = h * dh
                qh = q[r0:r0 + T, c0:c0 + dh]
                kh = k[r0:r0 + T, c0:c0 + dh]
                vh = v[r0:r0 + T, c0:c0 + dh]
                scores = qh @ kh.T / math.sqrt(dh)
                probs = np.zeros((T, T))
                for i in range(T):
                    keys = [j for j in range(T) if MASK[s][j]]
                    if not keys:
                        continue
                    m = max(scores[i, j] for j in keys)
                    exps = {j: math.exp(scores[i, j] - m) for j in keys}
                    z = sum(exps.values())
                    for j in keys:
                        probs[i, j] = exps[j] / z
                attn[r0:r0 + T, c0:c0 + dh] = probs @ vh
        attn = attn @ blk["wo"] + blk["bo"].T
        x_mid = layer_norm(x + attn, blk["ln1_gain"].T, blk["ln1_bias"].T)
        ff = gelu(x_mid @ blk["w1"] + blk["b1"].T) @ blk["w2"] + blk["b2"].T
        x = layer_norm(x_mid + ff, blk["ln2_gain"].T, blk["ln2_bias"].T)
        hidden.append(x)

    concat = np.concatenate([hidden[kk] for kk in DEPTH], axis=1)
    logits = concat @ head_w + head_b.T
    for r in range(logits.shape[0]):
        print(", ".join(f"{v:.15g}" for v in logits[r]) + ",")


if __name__ == "__main__":
    main()
