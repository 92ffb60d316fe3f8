"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""
from __future__ import annotations

import numpy as np

_CHUNK = 1 << 14


def _subset_bits(start: int, stop: int, n: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(float)


def ryser_permanent(a: np.ndarray) -> complex:
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0j
    total = 1 << n
    partial = []
    for start in range(1, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        bits = _subset_bits(start, stop, n)
        sizes = bits.sum(axis=1)
        rowsums = bits @ a.T
        partial.append(np.sum((-1.0) ** sizes * np.prod(rowsums, axis=1)))
    return complex((-1) ** n * np.sum(partial))


def qubit_config_sum(u: np.ndarray) -> complex:
    n = u.shape[0]
    total = 1 << n
    signs = 1.0 - 2.0 * _subset_bits(0, total, n)
    amp = np.prod(signs @ u.T, axis=1)
    parity = np.prod(signs, axis=1)
    # enumerate every (s, s') pair explicitly, block by block
    beta_side = parity * amp.conj()
    acc = []
    for start in range(0, total, _CHUNK):
        block = (parity[start:start + _CHUNK] * amp[start:start + _CHUNK])[:, None] * beta_side[None, :]
        acc.append(block.sum())
    return complex(np.sum(acc) / (float(total) * float(total)))
