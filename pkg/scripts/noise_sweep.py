"""Noise sweep for the sensorimotor corpus.

For each bit-flip fraction, compares the engine's motor completion with a
brute-force nearest-prototype classifier over the clean sensor patterns
(the best any matcher can do from the sensors alone). Prints one row per
noise level. The 10% row fixes the acceptance threshold.
"""
import argparse

import numpy as np

from fpengine.codecs import decode_categorical
from fpengine.corpora import MOTOR, flip_bits, sensorimotor_corpus, train_sensorimotor


def nearest_prototype(query, prototypes):
    best, best_sim = 0, -1.0
    for k, p in enumerate(prototypes):
        den = np.sqrt(query @ query) * np.sqrt(p @ p)
        sim = 0.0 if den == 0 else (query @ p) / den
        if sim > best_sim:
            best, best_sim = k, sim
    return best


def sweep(seed=0, trials=50, levels=(0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3)):
    corpus = sensorimotor_corpus(8, seed)
    mc = train_sensorimotor(corpus, passes=3)
    protos = [np.concatenate(list(corpus.sensors(k).values())) for k in range(len(corpus))]
    rows = []
    for level in levels:
        rng = np.random.default_rng(seed + 1)
        hit_oracle = hit_engine = total = 0
        for k in range(len(corpus)):
            for _ in range(trials):
                noisy = {ch: flip_bits(v, level, rng) for ch, v in corpus.sensors(k).items()}
                q = np.concatenate(list(noisy.values()))
                hit_oracle += corpus.motors[nearest_prototype(q, protos)] == corpus.motors[k]
                sym, _ = decode_categorical(mc.complete(noisy, MOTOR), corpus.motor_codec)
                hit_engine += sym == corpus.motors[k]
                total += 1
        rows.append((level, hit_oracle / total, hit_engine / total))
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trials", type=int, default=50)
    a = ap.parse_args()
    print("noise  oracle  engine")
    for level, o, e in sweep(a.seed, a.trials):
        print(f"{level:5.2f}  {o:6.3f}  {e:6.3f}")
