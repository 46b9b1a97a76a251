"""Regenerates reference.json from scipy.

scipy.stats.shapiro wraps the AS R94 Fortran routine (swilk.f), so its W and p
serve as the external reference for the Shapiro-Wilk port. The other entries
pin Student-t, Wilcoxon and Friedman values to scipy's implementations.

    python tests/reference/gen_reference.py > tests/reference/reference.json
"""

import json
import sys

import numpy as np
from scipy import stats


def shapiro_cases(rng):
    cases = []
    sizes = list(range(3, 21)) + [25, 30, 40, 50, 75, 100, 150, 200, 500, 1000]
    kinds = ["normal", "uniform", "exponential", "t3"]
    i = 0
    while len(cases) < 100:
        n = sizes[i % len(sizes)]
        kind = kinds[i % len(kinds)]
        if kind == "normal":
            x = rng.normal(size=n)
        elif kind == "uniform":
            x = rng.uniform(size=n)
        elif kind == "exponential":
            x = rng.exponential(size=n)
        else:
            x = rng.standard_t(3, size=n)
        w, p = stats.shapiro(x)
        cases.append({"x": x.tolist(), "w": float(w), "p": float(p)})
        i += 1
    return cases


def ttest_cases(rng):
    out = []
    for n in (3, 5, 10, 20):
        a = rng.normal(size=n)
        b = a + rng.normal(0.3, 1.0, size=n)
        r = stats.ttest_rel(a, b)
        out.append({"a": a.tolist(), "b": b.tolist(), "t": float(r.statistic), "p": float(r.pvalue)})
    return out


def wilcoxon_cases(rng):
    out = []
    # exact branch, no ties
    for n in (5, 8, 12, 20):
        a = rng.normal(size=n)
        b = a + rng.normal(0.4, 1.0, size=n)
        r = stats.wilcoxon(a, b, method="exact")
        out.append({"a": a.tolist(), "b": b.tolist(), "statistic": float(r.statistic),
                    "p": float(r.pvalue), "method": "exact"})
    # large sample, normal approximation with continuity correction
    n = 40
    a = rng.normal(size=n)
    b = a + rng.normal(0.3, 1.0, size=n)
    r = stats.wilcoxon(a, b, method="approx", correction=True)
    out.append({"a": a.tolist(), "b": b.tolist(), "statistic": float(r.statistic),
                "p": float(r.pvalue), "method": "approx"})
    return out


def friedman_cases(rng):
    out = []
    for n, k in ((10, 5), (6, 3), (12, 4)):
        m = rng.normal(size=(n, k)) + np.arange(k) * 0.3
        r = stats.friedmanchisquare(*m.T)
        out.append({"n": n, "k": k, "values": m.ravel().tolist(),
                    "chi2": float(r.statistic), "p": float(r.pvalue)})
    # ties inside rows
    m = np.array([[1, 1, 2], [2, 3, 3], [1, 2, 3], [3, 3, 3], [1, 2, 2]], dtype=float)
    r = stats.friedmanchisquare(*m.T)
    out.append({"n": 5, "k": 3, "values": m.ravel().tolist(),
                "chi2": float(r.statistic), "p": float(r.pvalue)})
    return out


def main():
    rng = np.random.default_rng(20240601)
    ref = {
        "generator": "scipy " + __import__("scipy").__version__,
        "shapiro": shapiro_cases(rng),
        "ttest_rel": ttest_cases(rng),
        "wilcoxon": wilcoxon_cases(rng),
        "friedman": friedman_cases(rng),
    }
    json.dump(ref, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
