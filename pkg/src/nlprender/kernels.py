"""Pixel-level kernels shared by the pyramid, the normalization and dithering.

Every linear step of the pyramid is expressed as a pair of 1-D gather tables
(one per image axis).  A table row ``a`` lists the input indices and weights
that produce output sample ``a``, so

    out[a, b] = sum_s sum_t wr[a, s] * wc[b, t] * x[ir[a, s], ic[b, t]]

Boundary reflection, decimation and zero-stuffing are all baked into the
tables, which makes the adjoint a plain scatter with the same tables and lets
callers evaluate any rectangular sub-block by slicing table rows.

Two backends implement the same contracts: numba loops, and numpy (dense 1-D
operator matrices for the separable steps, padded slicing for the 5x5
normalization window).  The backend is fixed at import time, see ``_accel``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._accel import BACKEND, njit


def reflect_index(i, n: int):
    """Mirror-reflect integer index ``i`` into ``[0, n)`` without edge repetition.

    Works on scalars and integer arrays; ``-1 -> 1``, ``n -> n - 2``.
    """
    i = np.asarray(i, dtype=np.int64)
    if n == 1:
        return np.zeros_like(i)
    period = 2 * (n - 1)
    i = np.mod(i, period)
    return np.where(i < n, i, period - i)


@dataclass(frozen=True, eq=False)
class AxisOp:
    """A 1-D linear operator stored as a gather table.

    ``index[a, t]`` is the input sample read by tap ``t`` of output ``a`` and
    ``weight[a, t]`` its coefficient.  ``n_in`` is the input length.
    """

    index: np.ndarray
    weight: np.ndarray
    n_in: int
    _dense: list = field(default_factory=list, repr=False)

    @property
    def n_out(self) -> int:
        return self.index.shape[0]

    def dense(self) -> np.ndarray:
        if not self._dense:
            m = np.zeros((self.n_out, self.n_in))
            rows = np.repeat(np.arange(self.n_out), self.index.shape[1])
            np.add.at(m, (rows, self.index.ravel()), self.weight.ravel())
            self._dense.append(m)
        return self._dense[0]


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


@lru_cache(maxsize=256)
def filter_op(n: int, taps: tuple) -> AxisOp:
    """Same-size correlation with ``taps`` under mirror boundaries."""
    r = len(taps) // 2
    offsets = np.arange(len(taps)) - r
    index = reflect_index(np.arange(n)[:, None] + offsets[None, :], n)
    weight = np.broadcast_to(np.asarray(taps, dtype=np.float64), index.shape).copy()
    _freeze(index, weight)
    return AxisOp(index, weight, n)


@lru_cache(maxsize=256)
def reduce_op(n: int, taps: tuple) -> AxisOp:
    """Filter then keep even samples: output length ``ceil(n / 2)``."""
    r = len(taps) // 2
    n_out = (n + 1) // 2
    offsets = np.arange(len(taps)) - r
    index = reflect_index(2 * np.arange(n_out)[:, None] + offsets[None, :], n)
    weight = np.broadcast_to(np.asarray(taps, dtype=np.float64), index.shape).copy()
    _freeze(index, weight)
    return AxisOp(index, weight, n)


@lru_cache(maxsize=256)
def expand_op(n_out: int, taps: tuple) -> AxisOp:
    """Zero-stuff ``ceil(n_out / 2)`` samples to length ``n_out``, then filter
    with ``2 * taps`` so that constants are preserved."""
    r = len(taps) // 2
    offsets = np.arange(len(taps)) - r
    q = reflect_index(np.arange(n_out)[:, None] + offsets[None, :], n_out)
    even = (q % 2) == 0
    index = np.where(even, q // 2, 0)
    weight = np.where(even, 2.0 * np.asarray(taps, dtype=np.float64)[None, :], 0.0)
    _freeze(index, weight)
    return AxisOp(index, weight, (n_out + 1) // 2)


@lru_cache(maxsize=256)
def pad_index(n: int, radius: int) -> np.ndarray:
    """Source indices of a mirror-padded axis, length ``n + 2 * radius``."""
    idx = reflect_index(np.arange(-radius, n + radius), n)
    _freeze(idx)
    return idx


# ---------------------------------------------------------------------------
# numba kernels


@njit
def _sep_apply_nb(x, ir, wr, ic, wc):
    na, ts = ir.shape
    nb, tt = ic.shape
    cmin = ic.min()
    ncol = ic.max() - cmin + 1
    tmp = np.zeros((na, ncol))
    for a in range(na):
        for s in range(ts):
            w = wr[a, s]
            if w == 0.0:
                continue
            row = ir[a, s]
            for c in range(ncol):
                tmp[a, c] += w * x[row, cmin + c]
    out = np.empty((na, nb))
    for a in range(na):
        for b in range(nb):
            acc = 0.0
            for t in range(tt):
                acc += wc[b, t] * tmp[a, ic[b, t] - cmin]
            out[a, b] = acc
    return out


@njit
def _sep_adjoint_nb(g, ir, wr, n_rows, ic, wc, n_cols):
    na, ts = ir.shape
    nb, tt = ic.shape
    tmp = np.zeros((na, n_cols))
    for a in range(na):
        for b in range(nb):
            gab = g[a, b]
            for t in range(tt):
                tmp[a, ic[b, t]] += wc[b, t] * gab
    out = np.zeros((n_rows, n_cols))
    for a in range(na):
        for s in range(ts):
            w = wr[a, s]
            if w == 0.0:
                continue
            row = ir[a, s]
            for c in range(n_cols):
                out[row, c] += w * tmp[a, c]
    return out


@njit
def _window_apply_nb(x, pr, pc, kern, na, nb):
    kh, kw = kern.shape
    xp = np.empty((na + kh - 1, nb + kw - 1))
    for i in range(xp.shape[0]):
        row = pr[i]
        for j in range(xp.shape[1]):
            xp[i, j] = x[row, pc[j]]
    out = np.zeros((na, nb))
    for s in range(kh):
        for t in range(kw):
            k = kern[s, t]
            if k == 0.0:
                continue
            for a in range(na):
                for b in range(nb):
                    out[a, b] += k * xp[a + s, b + t]
    return out


@njit
def _window_adjoint_nb(g, pr, pc, kern, n_rows, n_cols):
    kh, kw = kern.shape
    na, nb = g.shape
    gp = np.zeros((na + kh - 1, nb + kw - 1))
    for s in range(kh):
        for t in range(kw):
            k = kern[s, t]
            if k == 0.0:
                continue
            for a in range(na):
                for b in range(nb):
                    gp[a + s, b + t] += k * g[a, b]
    out = np.zeros((n_rows, n_cols))
    for i in range(gp.shape[0]):
        row = pr[i]
        for j in range(gp.shape[1]):
            out[row, pc[j]] += gp[i, j]
    return out


# ---------------------------------------------------------------------------
# numpy kernels


def _sep_apply_np(x, op_r, op_c, rows, cols):
    ir = op_r.index[rows[0]:rows[1]]
    ic = op_c.index[cols[0]:cols[1]]
    r0, r1 = int(ir.min()), int(ir.max()) + 1
    c0, c1 = int(ic.min()), int(ic.max()) + 1
    ar = op_r.dense()[rows[0]:rows[1], r0:r1]
    ac = op_c.dense()[cols[0]:cols[1], c0:c1]
    return ar @ x[r0:r1, c0:c1] @ ac.T


def _window_apply_np(x, pr, pc, kern, na, nb):
    xp = x[np.ix_(pr, pc)]
    out = np.zeros((na, nb))
    kh, kw = kern.shape
    for s in range(kh):
        for t in range(kw):
            if kern[s, t] != 0.0:
                out += kern[s, t] * xp[s:s + na, t:t + nb]
    return out


def _window_adjoint_np(g, pr, pc, kern, n_rows, n_cols):
    na, nb = g.shape
    kh, kw = kern.shape
    gp = np.zeros((na + kh - 1, nb + kw - 1))
    for s in range(kh):
        for t in range(kw):
            if kern[s, t] != 0.0:
                gp[s:s + na, t:t + nb] += kern[s, t] * g
    folded_rows = np.zeros((n_rows, gp.shape[1]))
    np.add.at(folded_rows, pr, gp)
    out = np.zeros((n_cols, n_rows))
    np.add.at(out, pc, folded_rows.T)
    return out.T


# ---------------------------------------------------------------------------
# public dispatch


def sep_apply(x, op_r: AxisOp, op_c: AxisOp, rows=None, cols=None) -> np.ndarray:
    """Apply ``op_r`` along axis 0 and ``op_c`` along axis 1.

    ``rows``/``cols`` are optional ``(start, stop)`` output ranges; only that
    block of the result is computed.
    """
    rows = (0, op_r.n_out) if rows is None else rows
    cols = (0, op_c.n_out) if cols is None else cols
    if BACKEND == "numba":
        return _sep_apply_nb(
            x,
            op_r.index[rows[0]:rows[1]],
            op_r.weight[rows[0]:rows[1]],
            op_c.index[cols[0]:cols[1]],
            op_c.weight[cols[0]:cols[1]],
        )
    return _sep_apply_np(x, op_r, op_c, rows, cols)


def sep_adjoint(g, op_r: AxisOp, op_c: AxisOp) -> np.ndarray:
    """Transpose of :func:`sep_apply` over the full output grid."""
    if BACKEND == "numba":
        return _sep_adjoint_nb(
            np.ascontiguousarray(g), op_r.index, op_r.weight, op_r.n_in,
            op_c.index, op_c.weight, op_c.n_in,
        )
    return op_r.dense().T @ g @ op_c.dense()


def window_apply(x, kern: np.ndarray, rows=None, cols=None) -> np.ndarray:
    """Correlate ``x`` with an odd-sized 2-D ``kern`` under mirror boundaries.

    With ``rows``/``cols`` given, only that output block is computed (reading
    whatever neighbourhood of ``x`` it needs).
    """
    h, w = x.shape
    rh, rw = kern.shape[0] // 2, kern.shape[1] // 2
    rows = (0, h) if rows is None else rows
    cols = (0, w) if cols is None else cols
    pr = pad_index(h, rh)[rows[0]:rows[1] + 2 * rh]
    pc = pad_index(w, rw)[cols[0]:cols[1] + 2 * rw]
    na, nb = rows[1] - rows[0], cols[1] - cols[0]
    if BACKEND == "numba":
        return _window_apply_nb(x, pr, pc, kern, na, nb)
    return _window_apply_np(x, pr, pc, kern, na, nb)


def window_adjoint(g, kern: np.ndarray) -> np.ndarray:
    """Transpose of :func:`window_apply` over the full grid."""
    h, w = g.shape
    pr = pad_index(h, kern.shape[0] // 2)
    pc = pad_index(w, kern.shape[1] // 2)
    if BACKEND == "numba":
        return _window_adjoint_nb(np.ascontiguousarray(g), pr, pc, kern, h, w)
    return _window_adjoint_np(g, pr, pc, kern, h, w)


# ---------------------------------------------------------------------------
# error diffusion


@njit
def _floyd_steinberg_nb(img, levels):
    h, w = img.shape
    buf = img.copy()
    out = np.empty((h, w))
    nlev = levels.shape[0]
    for i in range(h):
        for j in range(w):
            v = buf[i, j]
            best = levels[0]
            best_err = abs(v - best)
            for q in range(1, nlev):
                e = abs(v - levels[q])
                if e < best_err:
                    best = levels[q]
                    best_err = e
            out[i, j] = best
            err = v - best
            if j + 1 < w:
                buf[i, j + 1] += err * (7.0 / 16.0)
            if i + 1 < h:
                if j > 0:
                    buf[i + 1, j - 1] += err * (3.0 / 16.0)
                buf[i + 1, j] += err * (5.0 / 16.0)
                if j + 1 < w:
                    buf[i + 1, j + 1] += err * (1.0 / 16.0)
    return out


def _floyd_steinberg_py(img, levels):
    h, w = img.shape
    buf = img.tolist()
    levels = levels.tolist()
    out = np.empty((h, w))
    for i in range(h):
        row = buf[i]
        below = buf[i + 1] if i + 1 < h else None
        for j in range(w):
            v = row[j]
            best = min(levels, key=lambda q: abs(v - q))
            out[i, j] = best
            err = v - best
            if j + 1 < w:
                row[j + 1] += err * (7.0 / 16.0)
            if below is not None:
                if j > 0:
                    below[j - 1] += err * (3.0 / 16.0)
                below[j] += err * (5.0 / 16.0)
                if j + 1 < w:
                    below[j + 1] += err * (1.0 / 16.0)
    return out


def floyd_steinberg_kernel(img: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """Raster-scan error diffusion with the (7, 3, 5, 1)/16 kernel.

    Quantizes to the nearest entry of ``levels``; exact ties go to the lower
    level.
    """
    img = np.ascontiguousarray(img, dtype=np.float64)
    levels = np.ascontiguousarray(levels, dtype=np.float64)
    if BACKEND == "numba":
        return _floyd_steinberg_nb(img, levels)
    return _floyd_steinberg_py(img, levels)
