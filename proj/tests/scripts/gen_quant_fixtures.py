# Copyright 2026 The Polaron Authors.
# SPDX-License-Identifier: Apache-2.0
"""Reference evaluation of the adaptive quantizer, PACT and layer sensitivity.

Written directly from the formulas with numpy; the C++ tests compare their
results against these files.
"""

import argparse
import os

import numpy as np

import plrn

TENSORS = 1000
LENGTH = 32


def scale(w, n):
    m = np.mean(np.abs(w))
    if m == 0:
        return 1.0
    return m * (2**n - 1) / 2 ** (n - 1)


def thresholds(w, k, lo=0.5, hi=99.5):
    t = w / k
    w_l, w_h = np.percentile(t, [lo, hi])
    if not w_l < w_h:
        m = np.max(np.abs(t))
        w_l, w_h = (-m, m) if m > 0 else (-1.0, 1.0)
    return float(w_l), float(w_h)


def codes(w, n, k, w_l, w_h):
    c = np.clip(w / k, w_l, w_h)
    return np.round((c - w_l) * (2**n - 1) / (w_h - w_l))


def dequant(q, n, w_l, w_h):
    return q * (w_h - w_l) / (2**n - 1) + w_l


def pact(x, alpha):
    return 0.5 * (np.abs(x) - np.abs(x - alpha) + alpha)


def pact_q(y, alpha, n):
    return np.round(y * (2**n - 1) / alpha) * alpha / (2**n - 1)


def fake_quant(w, n):
    k = scale(w, n)
    w_l, w_h = thresholds(w, k)
    return dequant(codes(w, n, k, w_l, w_h), n, w_l, w_h) * k


def sensitivity(w, g):
    base = np.linalg.norm(fake_quant(w, 4) - w)
    gn = np.linalg.norm(g)
    s8 = (base - np.linalg.norm(fake_quant(w, 8) - w)) * gn / w.size
    s4 = (base - np.linalg.norm(fake_quant(w, 4) - w)) * gn / w.size
    return s8, s4, max(s8, s4)


def random_tensor(rng, i):
    kind = i % 4
    spread = 10.0 ** rng.uniform(-3, 1)
    if kind == 0:
        return rng.normal(0, spread, LENGTH)
    if kind == 1:
        return rng.laplace(rng.normal(0, spread), spread, LENGTH)
    if kind == 2:
        return rng.uniform(-spread, 2 * spread, LENGTH)
    w = rng.normal(0, spread, LENGTH)
    w[rng.integers(0, LENGTH, 4)] *= 8
    return w


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    ap.add_argument("--seed", type=int, default=20261019)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    inputs = np.zeros((TENSORS, LENGTH))
    meta = np.zeros((TENSORS, 2))
    params = np.zeros((TENSORS, 3))
    q = np.zeros((TENSORS, LENGTH))
    deq = np.zeros((TENSORS, LENGTH))
    px = np.zeros((TENSORS, LENGTH))
    py = np.zeros((TENSORS, LENGTH))
    pq = np.zeros((TENSORS, LENGTH))
    for i in range(TENSORS):
        n = (4, 8, 16)[i % 3]
        w = random_tensor(rng, i)
        k = scale(w, n)
        w_l, w_h = thresholds(w, k)
        inputs[i] = w
        params[i] = (k, w_l, w_h)
        q[i] = codes(w, n, k, w_l, w_h)
        deq[i] = dequant(q[i], n, w_l, w_h)
        alpha = float(rng.uniform(0.1, 8.0))
        meta[i] = (n, alpha)
        px[i] = rng.uniform(-2 * alpha, 2 * alpha, LENGTH)
        py[i] = pact(px[i], alpha)
        pq[i] = pact_q(py[i], alpha, n)

    layers = 5
    sw = np.zeros((layers, 100))
    sg = np.zeros((layers, 100))
    se = np.zeros((layers, 3))
    for i in range(layers):
        sw[i] = rng.normal(0, 0.05 * (i + 1), 100)
        sg[i] = rng.normal(0, 0.01, 100)
        se[i] = sensitivity(sw[i], sg[i])

    files = {
        "quant_inputs": inputs, "quant_meta": meta, "quant_params": params, "quant_codes": q,
        "quant_deq": deq, "pact_x": px, "pact_y": py, "pact_xq": pq,
        "sens_weights": sw, "sens_grads": sg, "sens_expected": se,
    }
    for name, arr in files.items():
        plrn.write(os.path.join(args.out, name + ".plrn"), arr)


if __name__ == "__main__":
    main()
