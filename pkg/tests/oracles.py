"""Independent reference implementations used as test oracles.

Deliberately naive: dictionaries and explicit loops, no shared code with the
package under test.
"""
from __future__ import annotations

import math
from collections import Counter
from itertools import combinations

import numpy as np


def entropy(labels) -> float:
    n = len(labels)
    return -sum(c / n * math.log(c / n) for c in Counter(labels).values())


def mutual_information(a, b) -> float:
    n = len(a)
    ca, cb, cab = Counter(a), Counter(b), Counter(zip(a, b))
    return sum(c / n * math.log(n * c / (ca[x] * cb[y])) for (x, y), c in cab.items())


def nmi(a, b) -> float:
    a, b = list(map(int, a)), list(map(int, b))
    ha, hb = entropy(a), entropy(b)
    if ha == 0 or hb == 0:
        return 1.0 if ha == hb else 0.0
    return mutual_information(a, b) / math.sqrt(ha * hb)


def ari_pairs(a, b) -> float:
    """ARI from explicit enumeration of all point pairs."""
    a, b = np.asarray(a), np.asarray(b)
    i, j = np.triu_indices(a.size, k=1)
    same_a = a[i] == a[j]
    same_b = b[i] == b[j]
    both = float(np.sum(same_a & same_b))
    na, nb = float(same_a.sum()), float(same_b.sum())
    total = float(i.size)
    expected = na * nb / total
    max_index = (na + nb) / 2
    if max_index == expected:
        return 1.0 if both == max_index else 0.0
    return (both - expected) / (max_index - expected)


def contingency(a, b) -> dict:
    return Counter(zip(map(int, a), map(int, b)))


def agreement(parts) -> float:
    pairs = list(combinations(range(len(parts)), 2))
    return sum(nmi(parts[i], parts[j]) for i, j in pairs) / len(pairs)


def anmi(candidate, base) -> float:
    return sum(nmi(p, candidate) for p in base)
