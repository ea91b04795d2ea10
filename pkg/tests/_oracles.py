"""Independent brute-force oracles used by the test suite.

Everything here deliberately re-derives results by the most naive route
available (full enumeration, per-threshold recounting, dense least squares)
so the library implementations are checked against a second, structurally
different computation rather than against themselves.
"""

import itertools
import math

import numpy as np


def brute_force_eer(genuine, impostor):
    """Naive sweep of the documented rule: thresholds are the distinct scores
    ascending, accept when score >= t, stop at the first t with FRR >= FAR."""
    g = np.asarray(genuine, dtype=np.float64)
    i = np.asarray(impostor, dtype=np.float64)
    thresholds = sorted(set(g.tolist()) | set(i.tolist()))
    for t in thresholds:
        far = float(np.mean(i >= t))
        frr = float(np.mean(g < t))
        if frr >= far:
            return 0.5 * (far + frr), t
    return 0.5, math.nextafter(thresholds[-1], math.inf)


def enumerate_protocol_pairs(keys, di, dj, kind):
    """All admissible (probe, gallery) key pairs of one rule, as a set.

    Enumerates the full cross product of sample keys and filters, which is
    quadratic but independent of the generator's loop structure.
    """
    out = set()
    for p in keys:
        for g in keys:
            if p.distance != di or g.distance != dj:
                continue
            if p.session != 1:
                continue
            if kind == "intra":
                if di != dj:
                    raise ValueError("intra rule needs di == dj")
                if g.session == 2 and g.subject_id == p.subject_id:
                    out.add((p, g))
            elif kind == "cross":
                if di == dj:
                    raise ValueError("cross rule needs di != dj")
                if g.subject_id == p.subject_id:
                    out.add((p, g))
            elif kind == "impostor":
                if g.session == 2 and g.subject_id != p.subject_id:
                    out.add((p, g))
            else:
                raise ValueError(f"unknown kind {kind}")
    return out


def exhaustive_masks(cells):
    """Every 0/1 mask over the given cell count, all-ones first."""
    rows = [np.ones(cells, dtype=np.uint8)]
    for bits in itertools.product((0, 1), repeat=cells):
        rows.append(np.array(bits, dtype=np.uint8))
    return np.vstack(rows)


def entropy_form_jsd(p, q):
    """JSD via H(M) - (H(P) + H(Q)) / 2, an algebraically different route."""

    def entropy(v):
        v = np.asarray(v, dtype=np.float64).ravel()
        v = v[v > 0.0]
        return float(-np.sum(v * np.log(v)))

    m = 0.5 * (np.asarray(p, dtype=np.float64) + np.asarray(q, dtype=np.float64))
    return entropy(m) - 0.5 * entropy(p) - 0.5 * entropy(q)


def sum_form_pearson(x, y):
    """Pearson r from the raw-sums identity rather than centered dot products."""
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    n = len(x)
    sx = sum(x)
    sy = sum(y)
    sxx = sum(v * v for v in x)
    syy = sum(v * v for v in y)
    sxy = sum(a * b for a, b in zip(x, y))
    num = n * sxy - sx * sy
    den = math.sqrt(n * sxx - sx * sx) * math.sqrt(n * syy - sy * sy)
    return num / den


def weighted_ridge_normal_equations(masks, scores, kernel_width, ridge):
    """Surrogate fit straight from the normal equations."""
    m = np.asarray(masks, dtype=np.float64)
    y = np.asarray(scores, dtype=np.float64)
    n, cells = m.shape
    d = 1.0 - m.mean(axis=1)
    w = np.exp(-(d ** 2) / (kernel_width ** 2))
    design = np.column_stack([np.ones(n), m])
    lhs = design.T @ (design * w[:, None])
    lhs[1:, 1:] += ridge * np.eye(cells)
    rhs = design.T @ (w * y)
    solution = np.linalg.solve(lhs, rhs)
    return solution[1:], float(solution[0])
