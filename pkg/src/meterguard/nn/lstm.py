"""LSTM cell and sequence layers with hand-written backpropagation through time.

Weights are stored stacked in gate order (input, forget, cell, output), so
``w_ih[0:H]`` is ``W_ii``, ``w_ih[H:2H]`` is ``W_if`` and so on. Per step::

    i = sigmoid(W_ii x + b_ii + W_hi h + b_hi)
    f = sigmoid(W_if x + b_if + W_hf h + b_hf)
    g = tanh(W_ig x + b_ig + W_hg h + b_hg)
    o = sigmoid(W_io x + b_io + W_ho h + b_ho)
    c' = f * c + i * g
    h' = o * tanh(c')
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from meterguard.errors import EmptySequence, ShapeMismatch

GATES = ("i", "f", "g", "o")


def sigmoid(z: np.ndarray) -> np.ndarray:
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _gate_affine(H: int) -> tuple[np.ndarray, np.ndarray]:
    """Scale/offset so that one tanh over the stacked pre-activations yields all gates.

    sigmoid(z) = 0.5 * tanh(0.5 z) + 0.5 for i, f, o; plain tanh for g.
    """
    scale = np.full(4 * H, 0.5)
    scale[2 * H : 3 * H] = 1.0
    offset = np.full(4 * H, 0.5)
    offset[2 * H : 3 * H] = 0.0
    return scale, offset


@dataclass
class LstmParams:
    w_ih: np.ndarray  # (4H, in)
    w_hh: np.ndarray  # (4H, H)
    b_ih: np.ndarray  # (4H,)
    b_hh: np.ndarray  # (4H,)

    def __post_init__(self):
        four_h, n_in = self.w_ih.shape
        if four_h % 4:
            raise ShapeMismatch(f"w_ih has {four_h} rows, not a multiple of 4")
        h = four_h // 4
        if self.w_hh.shape != (four_h, h):
            raise ShapeMismatch(f"w_hh shape {self.w_hh.shape}, expected {(four_h, h)}")
        if self.b_ih.shape != (four_h,) or self.b_hh.shape != (four_h,):
            raise ShapeMismatch("bias vectors must have length 4*hidden")

    @property
    def hidden_size(self) -> int:
        return self.w_hh.shape[1]

    @property
    def input_size(self) -> int:
        return self.w_ih.shape[1]

    def gate(self, name: str) -> dict[str, np.ndarray]:
        """Per-gate view: ``{"w_i": W_i<name>, "w_h": W_h<name>, "b_i": ..., "b_h": ...}``."""
        k = GATES.index(name)
        s = slice(k * self.hidden_size, (k + 1) * self.hidden_size)
        return {"w_i": self.w_ih[s], "w_h": self.w_hh[s], "b_i": self.b_ih[s], "b_h": self.b_hh[s]}

    @classmethod
    def init(cls, rng: np.random.Generator, input_size: int, hidden_size: int) -> "LstmParams":
        """Uniform init in +-1/sqrt(fan_in), fan_in taken per matrix."""
        a_in = 1.0 / np.sqrt(input_size)
        a_h = 1.0 / np.sqrt(hidden_size)
        four_h = 4 * hidden_size
        return cls(
            w_ih=rng.uniform(-a_in, a_in, (four_h, input_size)),
            w_hh=rng.uniform(-a_h, a_h, (four_h, hidden_size)),
            b_ih=rng.uniform(-a_h, a_h, four_h),
            b_hh=rng.uniform(-a_h, a_h, four_h),
        )

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> "LstmParams":
        four_h = 4 * hidden_size
        return cls(
            np.zeros((four_h, input_size)),
            np.zeros((four_h, hidden_size)),
            np.zeros(four_h),
            np.zeros(four_h),
        )


@dataclass(frozen=True)
class LstmState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden_size: int, batch: int | None = None) -> "LstmState":
        shape = (hidden_size,) if batch is None else (batch, hidden_size)
        return cls(np.zeros(shape), np.zeros(shape))


def lstm_cell_step(params: LstmParams, x_t: np.ndarray, state: LstmState) -> LstmState:
    """One cell update. ``x_t`` may be a vector or a (batch, input) matrix."""
    x_t = np.asarray(x_t, dtype=float)
    if x_t.shape[-1] != params.input_size:
        raise ShapeMismatch(f"input width {x_t.shape[-1]} != {params.input_size}")
    if state.h.shape[-1] != params.hidden_size or state.c.shape != state.h.shape:
        raise ShapeMismatch("state does not match hidden size")
    H = params.hidden_size
    z = x_t @ params.w_ih.T + params.b_ih + state.h @ params.w_hh.T + params.b_hh
    i = sigmoid(z[..., :H])
    f = sigmoid(z[..., H : 2 * H])
    g = np.tanh(z[..., 2 * H : 3 * H])
    o = sigmoid(z[..., 3 * H :])
    c = f * state.c + i * g
    return LstmState(h=o * np.tanh(c), c=c)


@dataclass
class LstmCache:
    xs: np.ndarray  # (T, B, in)
    hs: np.ndarray  # (T+1, B, H), hs[0] is the initial state
    cs: np.ndarray  # (T+1, B, H)
    acts: np.ndarray  # (T, B, 4H) gate activations i, f, g, o
    tanh_c: np.ndarray  # (T, B, H)


def lstm_forward(
    params: LstmParams, xs: np.ndarray, h0: np.ndarray | None = None, c0: np.ndarray | None = None
) -> tuple[np.ndarray, LstmCache]:
    """Run the cell over ``xs`` of shape (T, B, in). Returns hidden states (T, B, H)."""
    if xs.ndim != 3:
        raise ShapeMismatch(f"expected (T, B, in) input, got shape {xs.shape}")
    T, B, n_in = xs.shape
    if T == 0:
        raise EmptySequence("sequence has no timesteps")
    if n_in != params.input_size:
        raise ShapeMismatch(f"input width {n_in} != {params.input_size}")
    H = params.hidden_size
    scale, offset = _gate_affine(H)
    hs = np.empty((T + 1, B, H))
    cs = np.empty((T + 1, B, H))
    hs[0] = 0.0 if h0 is None else h0
    cs[0] = 0.0 if c0 is None else c0
    acts = np.empty((T, B, 4 * H))
    tanh_c = np.empty((T, B, H))
    # input projection for all steps at once, pre-scaled for the tanh trick
    xw = (xs @ params.w_ih.T + (params.b_ih + params.b_hh)) * scale
    w_hh_t = params.w_hh.T * scale
    for t in range(T):
        a = acts[t]
        np.tanh(xw[t] + hs[t] @ w_hh_t, out=a)
        # the scale vector doubles as the output multiplier
        a *= scale
        a += offset
        c = cs[t + 1]
        np.multiply(a[:, H : 2 * H], cs[t], out=c)
        c += a[:, :H] * a[:, 2 * H : 3 * H]
        tc = tanh_c[t]
        np.tanh(c, out=tc)
        np.multiply(a[:, 3 * H :], tc, out=hs[t + 1])
    return hs[1:], LstmCache(xs=xs, hs=hs, cs=cs, acts=acts, tanh_c=tanh_c)


def lstm_backward(
    params: LstmParams,
    cache: LstmCache,
    dhs: np.ndarray | None = None,
    dh_last: np.ndarray | None = None,
    dc_last: np.ndarray | None = None,
) -> tuple[LstmParams, np.ndarray, np.ndarray, np.ndarray]:
    """BPTT over the full sequence.

    ``dhs`` is the loss gradient w.r.t. every emitted hidden state, ``dh_last``
    and ``dc_last`` are extra gradients on the final state. Returns
    ``(grads, dxs, dh0, dc0)``.
    """
    T, B, _ = cache.xs.shape
    H = params.hidden_size
    acts, tc = cache.acts, cache.tanh_c
    i, f, g, o = (acts[..., k * H : (k + 1) * H] for k in range(4))
    # everything that does not depend on the running gradients, for all steps at once
    local = np.empty((T, B, 4 * H))
    local[..., :H] = g * i * (1.0 - i)
    local[..., H : 2 * H] = cache.cs[:-1] * f * (1.0 - f)
    local[..., 2 * H : 3 * H] = i * (1.0 - g * g)
    local[..., 3 * H :] = tc * o * (1.0 - o)
    through_c = o * (1.0 - tc * tc)

    dz_all = np.empty((T, B, 4 * H))
    dh_next = np.zeros((B, H)) if dh_last is None else np.array(dh_last, dtype=float)
    dc_next = np.zeros((B, H)) if dc_last is None else np.array(dc_last, dtype=float)
    w_hh = params.w_hh
    for t in range(T - 1, -1, -1):
        dh = dh_next if dhs is None else dhs[t] + dh_next
        dc = dc_next + dh * through_c[t]
        dz = dz_all[t]
        np.multiply(local[t, :, : 3 * H].reshape(B, 3, H), dc[:, None, :], out=dz[:, : 3 * H].reshape(B, 3, H))
        np.multiply(local[t, :, 3 * H :], dh, out=dz[:, 3 * H :])
        dc_next = dc * f[t]
        dh_next = dz @ w_hh
    flat_dz = dz_all.reshape(T * B, 4 * H)
    db = flat_dz.sum(axis=0)
    grads = LstmParams(
        w_ih=flat_dz.T @ cache.xs.reshape(T * B, -1),
        w_hh=flat_dz.T @ cache.hs[:-1].reshape(T * B, H),
        b_ih=db,
        b_hh=db.copy(),
    )
    dxs = dz_all @ params.w_ih
    return grads, dxs, dh_next, dc_next


def bilstm_forward(fwd: LstmParams, bwd: LstmParams, seq: np.ndarray) -> np.ndarray:
    """Bidirectional pass; output[t] = concat(h_fwd[t], h_bwd[t]).

    ``seq`` is (T, in) or (T, B, in). Both directions start from zero state.
    """
    seq = np.asarray(seq, dtype=float)
    if fwd.hidden_size != bwd.hidden_size:
        raise ShapeMismatch("forward and backward cells must share hidden size")
    if seq.shape[0] == 0:
        raise EmptySequence("sequence has no timesteps")
    squeeze = seq.ndim == 2
    xs = seq[:, None, :] if squeeze else seq
    h_f, _ = lstm_forward(fwd, xs)
    h_b, _ = lstm_forward(bwd, xs[::-1])
    out = np.concatenate([h_f, h_b[::-1]], axis=-1)
    return out[:, 0, :] if squeeze else out
