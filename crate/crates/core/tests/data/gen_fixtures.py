#!/usr/bin/env python3
"""Regenerates the frozen statistics fixtures.

Reference values come from scipy (chi2_contingency with correction=False,
norm.sf for the two-sided z tail), an implementation independent of the
Rust code under test. Output is committed; rerun only to extend coverage.
"""

import json
import math
import random

import numpy as np
from scipy import stats

rng = random.Random(20240117)

with open("chisq_fixtures.jsonl", "w") as fh:
    written = 0
    while written < 50:
        r = rng.randint(2, 4)
        c = rng.randint(2, 4)
        table = [[rng.randint(1, 200) for _ in range(c)] for _ in range(r)]
        arr = np.array(table)
        if (arr.sum(axis=0) == 0).any() or (arr.sum(axis=1) == 0).any():
            continue
        stat, p, dof, _ = stats.chi2_contingency(arr, correction=False)
        fh.write(json.dumps({"table": table, "stat": stat, "df": dof, "p": p}) + "\n")
        written += 1

with open("ztest_fixtures.jsonl", "w") as fh:
    written = 0
    while written < 50:
        n1 = rng.randint(5, 500)
        n2 = rng.randint(5, 500)
        k1 = rng.randint(0, n1)
        k2 = rng.randint(0, n2)
        pooled = (k1 + k2) / (n1 + n2)
        if pooled in (0.0, 1.0):
            continue
        se = math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
        z = (k1 / n1 - k2 / n2) / se
        p = 2 * stats.norm.sf(abs(z))
        fh.write(
            json.dumps({"k1": k1, "n1": n1, "k2": k2, "n2": n2, "z": z, "p": p}) + "\n"
        )
        written += 1

print("wrote chisq_fixtures.jsonl and ztest_fixtures.jsonl")
