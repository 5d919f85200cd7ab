"""Brute-force AFI straight from the fixture files, no shared code with the crate.

Usage: afi_bruteforce.py <fixture dir>; prints occupation_id,afi with repr floats.
"""
import csv
import math
import re
import sys

import toml

MASK = (1 << 64) - 1
DIM = 16


def token_vector(tok):
    h = 0xCBF29CE484222325
    for b in tok.encode():
        h = ((h ^ b) * 0x100000001B3) & MASK
    out = []
    for _ in range(DIM):
        h = (h + 0x9E3779B97F4A7C15) & MASK
        z = ((h ^ (h >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        out.append(((z ^ (z >> 31)) >> 11) / 2.0**53 * 2.0 - 1.0)
    return out


def unit(v):
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


def embed(text):
    toks = [t for t in re.split(r"[^0-9a-z]+", text.lower()) if t]
    acc = [0.0] * DIM
    for t in toks:
        acc = [a + b for a, b in zip(acc, token_vector(t))]
    return unit([a / len(toks) for a in acc])


def main(root):
    spec = toml.load(f"{root}/amenities.toml")["amenity"]
    target = [0.0] * DIM
    for a in spec:
        w = (a["weight_absolute"] + a["weight_relative"]) / 2.0
        target = [t + w * e for t, e in zip(target, embed(a["definition"]))]
    target = unit(target)

    texts = {r["descriptor_id"]: r["text"] for r in csv.DictReader(open(f"{root}/texts.csv"))}
    emb = {d: embed(t) for d, t in texts.items()}
    occ = {}
    for r in csv.DictReader(open(f"{root}/weights.csv")):
        v = occ.setdefault(r["occupation_id"], [0.0] * DIM)
        w = float(r["weight"])
        occ[r["occupation_id"]] = [a + w * e for a, e in zip(v, emb[r["descriptor_id"]])]
    print("occupation_id,afi")
    for o in sorted(occ):
        print(f"{o},{sum(a * b for a, b in zip(unit(occ[o]), target))!r}")


if __name__ == "__main__":
    main(sys.argv[1])
