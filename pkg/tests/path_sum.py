"""Truncated path-space oracle for E exp(-sum_x (u L_x^3 + g L_x^2) - nu T) at small N."""

import itertools
import math

import numpy as np


def _spacings(j, n_nodes):
    """Nodes and weights for the uniform law of j + 1 spacings of [0, 1].

    Stick breaking: d_0 = b_1, d_i = b_{i+1} prod_{k<=i} (1 - b_k), with
    b_i ~ Beta(1, j + 1 - i); each Beta density is a polynomial, so it goes
    into the Gauss-Legendre weights.
    """
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    if j == 0:
        return np.ones((1, 1)), np.ones(1)
    grids = np.meshgrid(*([x] * j), indexing="ij")
    wgrids = np.meshgrid(*([w] * j), indexing="ij")
    b = [g.ravel() for g in grids]
    wt = np.ones_like(b[0])
    for i in range(j):
        a = j - i
        wt = wt * wgrids[i].ravel() * a * (1.0 - b[i]) ** (a - 1)
    d = np.empty((b[0].size, j + 1))
    rest = np.ones_like(b[0])
    for i in range(j):
        d[:, i] = rest * b[i]
        rest = rest * (1.0 - b[i])
    d[:, j] = rest
    return d, wt


def expected_weight(u, g, nu, N, T, max_jumps=6, n_nodes=10):
    """Sum over at most ``max_jumps`` jumps; the rest has Poisson probability mass."""
    rate = (1.0 - 1.0 / N) * T
    total = 0.0
    for j in range(max_jumps + 1):
        d, wt = _spacings(j, n_nodes)
        d = d * T
        acc = 0.0
        for steps in itertools.product(range(N - 1), repeat=j):
            seq = [0]
            for c in steps:
                seq.append((seq[-1] + 1 + c) % N)
            L = np.zeros((d.shape[0], N))
            for k, x in enumerate(seq):
                L[:, x] += d[:, k]
            phi = np.sum(u * L ** 3 + g * L ** 2, axis=1)
            acc += np.sum(wt * np.exp(-phi))
        acc /= (N - 1) ** j
        total += math.exp(-rate) * rate ** j / math.factorial(j) * acc
    return total * math.exp(-nu * T)
