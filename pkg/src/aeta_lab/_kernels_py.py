"""Pure-numpy fallback for the compiled kernels.

Accumulation order matches the compiled loops (symbols in increasing order,
starting from 0.0), so both backends return bit-identical arrays.
"""

import numpy as np


def lfsr_period(length, tap_mask, seed):
    mask = (1 << length) - 1
    state = seed
    steps = 0
    while True:
        fb = (state & tap_mask).bit_count() & 1
        state = ((state << 1) | fb) & mask
        steps += 1
        if state == seed:
            return steps


def key_loglik(W, bad, KS):
    T, n, _ = W.shape
    K = KS.shape[0]
    logL = np.zeros((T, K), dtype=np.float64)
    viol = np.zeros((T, K), dtype=np.int32)
    for i in range(n):
        idx = KS[:, i]
        logL += W[:, i, idx]
        if bad is not None:
            viol += bad[:, i, idx]
    return logL, viol
