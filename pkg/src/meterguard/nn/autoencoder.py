"""Sequence autoencoders: LSTM, BiLSTM and GCN-BiLSTM variants.

The encoder compresses a (window_len, 5) window into its final hidden state.
The decoder starts from the encoder's final (h, c) per direction, receives
the latent vector as input at every step, and a per-step linear readout maps
decoder states back to the five resource channels.

For the GCN variant the graph convolution is applied at every timestep across
the five resource nodes; its node features are concatenated with the raw
channels to form the encoder input.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from meterguard.errors import ShapeMismatch
from meterguard.nn.gcn import GcnParams, gcn_backward, gcn_forward, normalized_adjacency, resource_graph
from meterguard.nn.lstm import LstmParams, lstm_backward, lstm_forward

N_CHANNELS = 5


class Variant(str, enum.Enum):
    LSTM = "lstm"
    BILSTM = "bilstm"
    GCN_BILSTM = "gcn-bilstm"

    @property
    def bidirectional(self) -> bool:
        return self is not Variant.LSTM

    @property
    def uses_gcn(self) -> bool:
        return self is Variant.GCN_BILSTM


_LSTM_FIELDS = ("w_ih", "w_hh", "b_ih", "b_hh")


@dataclass
class AutoencoderModel:
    variant: Variant
    hidden: int
    window_len: int
    params: dict[str, np.ndarray]
    n_channels: int = N_CHANNELS
    gcn_features: int = 0
    adjacency: np.ndarray | None = None
    # filled in by training / calibration; opaque to the forward pass
    standardization: Any = None
    threshold: float | None = None
    train_config: Any = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.variant = Variant(self.variant)
        if self.variant.uses_gcn:
            if self.adjacency is None:
                self.adjacency = resource_graph(self.n_channels)
            self._operator = normalized_adjacency(self.adjacency)
        elif self.adjacency is not None:
            raise ShapeMismatch(f"variant {self.variant.value} takes no graph")

    def lstm(self, name: str) -> LstmParams:
        return LstmParams(*(self.params[f"{name}.{k}"] for k in _LSTM_FIELDS))

    @property
    def gcn(self) -> GcnParams | None:
        if not self.variant.uses_gcn:
            return None
        return GcnParams(self.adjacency, self.params["gcn.w"])

    @property
    def lstm_names(self) -> list[str]:
        if self.variant.bidirectional:
            return ["enc_f", "enc_b", "dec_f", "dec_b"]
        return ["enc_f", "dec_f"]

    @property
    def encoder_input_size(self) -> int:
        return self.n_channels * (1 + self.gcn_features) if self.variant.uses_gcn else self.n_channels

    @property
    def latent_size(self) -> int:
        return self.hidden * (2 if self.variant.bidirectional else 1)

    def copy(self) -> "AutoencoderModel":
        return AutoencoderModel(
            variant=self.variant,
            hidden=self.hidden,
            window_len=self.window_len,
            params={k: v.copy() for k, v in self.params.items()},
            n_channels=self.n_channels,
            gcn_features=self.gcn_features,
            adjacency=None if self.adjacency is None else self.adjacency.copy(),
            standardization=self.standardization,
            threshold=self.threshold,
            train_config=self.train_config,
            meta=dict(self.meta),
        )


def init_model(
    variant: Variant | str,
    hidden: int,
    window_len: int,
    seed: int,
    *,
    n_channels: int = N_CHANNELS,
    gcn_features: int = 2,
) -> AutoencoderModel:
    variant = Variant(variant)
    rng = np.random.default_rng(seed)
    model = AutoencoderModel(
        variant=variant,
        hidden=hidden,
        window_len=window_len,
        params={},
        n_channels=n_channels,
        gcn_features=gcn_features if variant.uses_gcn else 0,
    )
    params: dict[str, np.ndarray] = {}
    if variant.uses_gcn:
        params["gcn.w"] = rng.uniform(-1.0, 1.0, (1, gcn_features))
    sizes = {"enc": model.encoder_input_size, "dec": model.latent_size}
    for name in model.lstm_names:
        p = LstmParams.init(rng, sizes[name[:3]], hidden)
        for k in _LSTM_FIELDS:
            params[f"{name}.{k}"] = getattr(p, k)
    readout_in = model.latent_size
    a = 1.0 / np.sqrt(readout_in)
    params["out.w"] = rng.uniform(-a, a, (n_channels, readout_in))
    params["out.b"] = rng.uniform(-a, a, n_channels)
    model.params = params
    return model


def _forward(model: AutoencoderModel, X: np.ndarray, latent_mask: np.ndarray | None = None):
    """Time-major forward. ``X`` is (T, B, C); returns (Y, cache)."""
    T, B, C = X.shape
    if C != model.n_channels:
        raise ShapeMismatch(f"window has {C} channels, model expects {model.n_channels}")
    H = model.hidden
    cache: dict[str, Any] = {"shape": X.shape}
    if model.variant.uses_gcn:
        g, cache["gcn"] = gcn_forward(model._operator, model.params["gcn.w"], X[..., None])
        enc_in = np.concatenate([X, g.reshape(T, B, -1)], axis=-1)
    else:
        enc_in = X
    hs_f, cache["enc_f"] = lstm_forward(model.lstm("enc_f"), enc_in)
    finals = [(hs_f[-1], cache["enc_f"].cs[-1])]
    if model.variant.bidirectional:
        hs_b, cache["enc_b"] = lstm_forward(model.lstm("enc_b"), enc_in[::-1])
        finals.append((hs_b[-1], cache["enc_b"].cs[-1]))
    latent = np.concatenate([h for h, _ in finals], axis=-1)
    if latent_mask is not None:
        latent = latent * latent_mask
    cache["latent_mask"] = latent_mask
    dec_in = np.broadcast_to(latent, (T, B, latent.shape[-1]))
    d_f, cache["dec_f"] = lstm_forward(model.lstm("dec_f"), dec_in, *finals[0])
    states = [d_f]
    if model.variant.bidirectional:
        d_b, cache["dec_b"] = lstm_forward(model.lstm("dec_b"), dec_in, *finals[1])
        states.append(d_b[::-1])
    D = np.concatenate(states, axis=-1) if len(states) > 1 else d_f
    cache["D"] = D
    Y = D @ model.params["out.w"].T + model.params["out.b"]
    return Y, cache


def _backward(model: AutoencoderModel, cache, dY: np.ndarray) -> dict[str, np.ndarray]:
    T, B, C = cache["shape"]
    H = model.hidden
    grads: dict[str, np.ndarray] = {}
    D = cache["D"]
    grads["out.w"] = dY.reshape(-1, C).T @ D.reshape(-1, D.shape[-1])
    grads["out.b"] = dY.sum(axis=(0, 1))
    dD = dY @ model.params["out.w"]

    def store(name, g: LstmParams):
        for k in _LSTM_FIELDS:
            grads[f"{name}.{k}"] = getattr(g, k)

    g, dx, dh0_f, dc0_f = lstm_backward(model.lstm("dec_f"), cache["dec_f"], dD[..., :H])
    store("dec_f", g)
    d_latent = dx.sum(axis=0)
    if model.variant.bidirectional:
        g, dx, dh0_b, dc0_b = lstm_backward(model.lstm("dec_b"), cache["dec_b"], dD[..., H:][::-1])
        store("dec_b", g)
        d_latent = d_latent + dx.sum(axis=0)
    if cache["latent_mask"] is not None:
        d_latent = d_latent * cache["latent_mask"]

    g, d_in, _, _ = lstm_backward(
        model.lstm("enc_f"), cache["enc_f"], None, d_latent[:, :H] + dh0_f, dc0_f
    )
    store("enc_f", g)
    if model.variant.bidirectional:
        g, d_in_b, _, _ = lstm_backward(
            model.lstm("enc_b"), cache["enc_b"], None, d_latent[:, H:] + dh0_b, dc0_b
        )
        store("enc_b", g)
        d_in = d_in + d_in_b[::-1]
    if model.variant.uses_gcn:
        d_g = d_in[..., C:].reshape(T, B, C, model.gcn_features)
        grads["gcn.w"] = gcn_backward(model.params["gcn.w"], cache["gcn"], d_g)
    return grads


def _time_major(windows: np.ndarray) -> tuple[np.ndarray, bool]:
    w = np.asarray(windows, dtype=float)
    single = w.ndim == 2
    if single:
        w = w[None]
    if w.ndim != 3:
        raise ShapeMismatch(f"expected (T, C) or (B, T, C) windows, got {w.shape}")
    return np.ascontiguousarray(w.transpose(1, 0, 2)), single


def autoencoder_forward(model: AutoencoderModel, window: np.ndarray) -> np.ndarray:
    """Reconstruct a (window_len, C) window, or a (B, window_len, C) batch."""
    X, single = _time_major(window)
    if X.shape[0] != model.window_len:
        raise ShapeMismatch(f"window length {X.shape[0]} != model window_len {model.window_len}")
    Y, _ = _forward(model, X)
    Y = Y.transpose(1, 0, 2)
    return Y[0] if single else Y


def loss_and_grads(
    model: AutoencoderModel, windows: np.ndarray, latent_mask: np.ndarray | None = None
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean squared reconstruction error over a (B, T, C) batch and its gradient."""
    X, _ = _time_major(windows)
    Y, cache = _forward(model, X, latent_mask)
    diff = Y - X
    loss = float(np.mean(diff * diff))
    grads = _backward(model, cache, 2.0 * diff / diff.size)
    return loss, grads


def reconstruction_mse(model: AutoencoderModel, windows: np.ndarray, batch: int = 512) -> float:
    windows = np.asarray(windows, dtype=float)
    total = 0.0
    for s in range(0, len(windows), batch):
        chunk = windows[s : s + batch]
        Y = autoencoder_forward(model, chunk)
        total += float(np.sum((Y - chunk) ** 2))
    return total / windows.size
