#!/usr/bin/env python3
"""Builds the 10-triplet end-to-end fixture and its golden values.

Vectors are 4-d with squared norm 4 (sign vectors and scaled axis vectors), so
every cosine is a multiple of 1/4 and the measure tables are exact. Aggregates
are computed in exact rational arithmetic (ranks, MAE) with mpmath for the one
square root in Pearson's r. Nothing here shares code with the C++ library.

Run from this directory: python3 make_fixture.py
"""
import hashlib
import itertools
import json
import os
import random
from fractions import Fraction

import mpmath

mpmath.mp.dps = 50

TRIPLETS = [
    # compound, left, right, lmd, st  (first eight as listed in the published norms)
    ("handgun", "hand", "gun", 8.13, 6.29),
    ("bodyguard", "body", "guard", 7.27, 5.64),
    ("policeman", "police", "man", 3.07, 6.13),
    ("wartime", "war", "time", 3.47, 6.31),
    ("muskrat", "musk", "rat", 7.53, 2.80),
    ("primrose", "prim", "rose", 7.93, 2.00),
    ("milestone", "mile", "stone", 3.36, 2.21),
    ("cheapskate", "cheap", "skate", 2.00, 2.00),
    ("sunlight", "sun", "light", 6.50, 6.02),
    ("snowboard", "snow", "board", 6.85, 5.75),
]
N_LAYERS = 3
ALPHAS = [Fraction(float(i / 10.0)) for i in range(11)]  # exact values of the doubles 0.0, 0.1, ..., 1.0

CANDIDATES = [v for v in itertools.product((1, -1), repeat=4)]
for axis in range(4):
    for sign in (2, -2):
        v = [0, 0, 0, 0]
        v[axis] = sign
        CANDIDATES.append(tuple(v))


def cos(u, v):
    return Fraction(sum(a * b for a, b in zip(u, v)), 4)


def lmd(L, R):
    return 5 * (R - L) + 5


def st(L, R):
    return Fraction(6 * (L + R), 2) + 1


def st_w(L, R, a):
    return 6 * (a * L + (1 - a) * R) + 1


def ranks(xs):
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    out = [None] * len(xs)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        r = Fraction(i + 1 + j + 1, 2)
        for k in range(i, j + 1):
            out[order[k]] = r
        i = j + 1
    return out


def spearman(x, y):
    rx, ry = ranks(x), ranks(y)
    n = len(x)
    mx, my = sum(rx) / n, sum(ry) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    sxx = sum((a - mx) ** 2 for a in rx)
    syy = sum((b - my) ** 2 for b in ry)
    if sxx == 0 or syy == 0:
        return None
    return float(mpmath.mpf(sxy.numerator) / sxy.denominator /
                 mpmath.sqrt(mpmath.mpf(sxx.numerator) / sxx.denominator *
                             mpmath.mpf(syy.numerator) / syy.denominator))


def mae(p, g):
    return float(sum(abs(a - b) for a, b in zip(p, g)) / len(p))


def min_gap(values):
    vals = sorted(set(values))
    return min((b - a for a, b in zip(vals, vals[1:])), default=Fraction(1))


def build(seed):
    rng = random.Random(seed)
    vec = {}
    for layer in range(1, N_LAYERS + 1):
        for c, l, r, g_lmd, _ in TRIPLETS:
            vec[(l, layer)] = rng.choice(CANDIDATES)
            vec[(r, layer)] = rng.choice(CANDIDATES)
        for c, l, r, g_lmd, _ in TRIPLETS:
            if layer == 2:
                # planted layer: the compound vector whose LMD is closest to the human value
                best = min(CANDIDATES, key=lambda v: abs(lmd(cos(vec[(l, 2)], v), cos(vec[(r, 2)], v)) - Fraction(g_lmd)))
                vec[(c, layer)] = best
            else:
                vec[(c, layer)] = rng.choice(CANDIDATES)
            vec[(r + l, layer)] = rng.choice(CANDIDATES)
    return vec


def analyse(vec):
    gold_lmd = [Fraction(t[3]) for t in TRIPLETS]
    gold_st = [Fraction(t[4]) for t in TRIPLETS]
    out = {"tables": {}, "eval": {}, "reversed": {}, "grid": []}
    ok = True
    rho_by_layer = {}
    for layer in range(1, N_LAYERS + 1):
        rows = {}
        pairs = []
        for c, l, r, _, _ in TRIPLETS:
            L = cos(vec[(l, layer)], vec[(c, layer)])
            R = cos(vec[(r, layer)], vec[(c, layer)])
            pairs.append((L, R))
            rows[c] = {"L": float(L), "R": float(R), "lmd": float(lmd(L, R)), "st": float(st(L, R))}
        out["tables"][str(layer)] = rows
        p_lmd = [lmd(L, R) for L, R in pairs]
        p_st = [st(L, R) for L, R in pairs]
        e = {
            "lmd": {"mae": mae(p_lmd, gold_lmd), "rho": spearman(p_lmd, gold_lmd), "n": len(pairs)},
            "st": {"mae": mae(p_st, gold_st), "rho": spearman(p_st, gold_st), "n": len(pairs)},
        }
        if e["lmd"]["rho"] is None or e["st"]["rho"] is None:
            ok = False
        out["eval"][str(layer)] = e
        rho_by_layer[layer] = e

        # reversed compounds keep constituent roles; only the compound vector changes
        rev_pairs = []
        for c, l, r, _, _ in TRIPLETS:
            rev_pairs.append((cos(vec[(l, layer)], vec[(r + l, layer)]), cos(vec[(r, layer)], vec[(r + l, layer)])))
        p_rev = [lmd(L, R) for L, R in rev_pairs]
        rho_o, rho_r = spearman(p_lmd, gold_lmd), spearman(p_rev, gold_lmd)
        if rho_r is None:
            ok = False
        out["reversed"][str(layer)] = {
            "original_mae": mae(p_lmd, gold_lmd), "original_rho": rho_o,
            "reversed_mae": mae(p_rev, gold_lmd), "reversed_rho": rho_r,
            "delta_mae": float(sum(abs(a - b) for a, b in zip(p_rev, gold_lmd)) / 10 -
                               sum(abs(a - b) for a, b in zip(p_lmd, gold_lmd)) / 10),
            "delta_rho": None if rho_r is None or rho_o is None else float(mpmath.mpf(rho_r) - mpmath.mpf(rho_o)),
        }

        distinct = sorted(set(pairs))
        for a in ALPHAS:
            vals = [st_w(L, R, a) for L, R in pairs]
            # distinct (L, R) pairs must not produce (near-)equal weighted values
            dvals = [st_w(L, R, a) for L, R in distinct]
            if len(set(dvals)) != len(dvals) and a not in (0, 1, Fraction(1, 2)):
                ok = False
            if len(set(dvals)) > 1 and min_gap(dvals) < Fraction(1, 10 ** 9):
                ok = False
            rho = spearman(vals, gold_st)
            if rho is None:
                ok = False
            out["grid"].append({"alpha": float(a), "layer": layer, "mae": mae(vals, gold_st), "rho": rho, "n": 10})

    def best(key, measure, better):
        items = [(layer, rho_by_layer[layer][measure][key]) for layer in range(1, N_LAYERS + 1)]
        vals = sorted(v for _, v in items)
        if any(abs(a - b) < 1e-9 for a, b in zip(vals, vals[1:])):
            return None
        return min(items, key=lambda kv: -kv[1] if better == "max" else kv[1])[0]

    out["best"] = {
        "lmd_rho": best("rho", "lmd", "max"), "st_rho": best("rho", "st", "max"),
        "lmd_mae": best("mae", "lmd", "min"), "st_mae": best("mae", "st", "min"),
    }
    if None in out["best"].values() or ok is False:
        return None
    return out


def main():
    for seed in range(1000):
        vec = build(seed)
        golden = analyse(vec)
        if golden is not None and golden["best"]["lmd_rho"] == 2:
            break
    else:
        raise SystemExit("no admissible seed")
    golden["seed"] = seed

    with open("dataset.csv", "w") as f:
        f.write("compound,left,right,lmd,st\n")
        for c, l, r, a, b in TRIPLETS:
            f.write(f"{c},{l},{r},{a:.2f},{b:.2f}\n")

    os.makedirs("store", exist_ok=True)
    words = sorted({w for (w, _) in vec})
    lines = []
    for w in words:
        layers = [list(vec[(w, layer)]) for layer in range(1, N_LAYERS + 1)]
        lines.append(json.dumps({"word": w, "n_instances": 1, "layers": layers}, separators=(",", ":")))
    payload = ("\n".join(lines) + "\n").encode()
    with open("store/records-00000.jsonl", "wb") as f:
        f.write(payload)
    manifest = {
        "format_version": 1, "encoding": "jsonl", "dim": 4, "n_layers": N_LAYERS, "has_layer0": False,
        "setting": "nc-nospec", "provenance": "hand-constructed fixture",
        "record_count": len(words),
        "files": [{"name": "records-00000.jsonl", "sha256": hashlib.sha256(payload).hexdigest(), "records": len(words)}],
    }
    with open("store/manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    with open("golden.json", "w") as f:
        json.dump(golden, f, indent=1, sort_keys=True)
        f.write("\n")
    print("seed", seed, "best", golden["best"])


if __name__ == "__main__":
    main()
