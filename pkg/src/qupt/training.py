"""Binary-cross-entropy training with Adam and parameter-shift gradients.

Training always runs on the ideal backend with exact expectations.  Every
quantum derivative uses the parameter-shift rule:

* Rot and encoder RY angles: df/dt = [f(t + pi/2) - f(t - pi/2)] / 2.
* Pooling CRZ angles: the gate is expanded into its exact decomposition
  CRZ(t) = RZ(t/2) . CNOT . RZ(-t/2) . CNOT and the two RZ slots are
  shifted, combined with chain-rule weights +-1/2.

Filter-stage gradients reach the loss through the feature-map chain: loss
-> sigmoid -> <Z_0> -> encoder angles -> band features -> map cells ->
shifted quanvolutions.  The classical links (sigmoid, BCE, band averaging)
are differentiated analytically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (
    MAP_SIZE,
    N_CONV,
    N_PARAMETERS,
    N_VQC,
    POOL_PARAMS,
    VQC_QUBITS,
    QnnParams,
    downsample_batch,
    encoded_filter_amps,
    encoded_vqc_amps,
    extract_patches,
    feature_map_batch,
    filter_z_from_encoded,
    sigmoid,
    vqc_z_batch,
    vqc_z_from_encoded,
)

CLAMP = 1e-7
_SHIFT = np.pi / 2.0

# d(feature)/d(map cell): band features average 2 * MAP_SIZE cells, the
# global feature averages every cell; both pass the (v + 1) / 2 rescale
_BAND_CELL_W = 1.0 / (2.0 * 2 * MAP_SIZE)
_GLOBAL_CELL_W = 1.0 / (2.0 * MAP_SIZE * MAP_SIZE)


@dataclass
class TrainConfig:
    lr0: float = 1e-4
    step_size: int = 10
    gamma: float = 0.75
    batch_size: int = 64
    epochs: int = 100
    seed: int = 0
    gradient_mode: str = "parameter-shift"
    init_scale: float = 0.1

    def __post_init__(self):
        if self.gradient_mode not in ("parameter-shift", "finite-difference"):
            raise ValueError(f"unknown gradient_mode {self.gradient_mode!r}")
        if self.batch_size < 1 or self.epochs < 0 or self.step_size < 1:
            raise ValueError("invalid training configuration")


@dataclass
class AdamState:
    m: np.ndarray = field(default_factory=lambda: np.zeros(N_PARAMETERS))
    v: np.ndarray = field(default_factory=lambda: np.zeros(N_PARAMETERS))
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.m.shape != (N_PARAMETERS,) or self.v.shape != (N_PARAMETERS,):
            raise ValueError(f"Adam accumulators must have {N_PARAMETERS} entries")


@dataclass
class TrainHistory:
    loss: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)
    lr: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.loss)

    def to_csv(self) -> str:
        lines = ["epoch,loss,accuracy,lr"]
        for e, (l, a, r) in enumerate(zip(self.loss, self.accuracy, self.lr)):
            lines.append(f"{e},{l!r},{a!r},{r!r}")
        return "\n".join(lines) + "\n"


def bce_loss(p: float, y: int) -> float:
    """Binary cross-entropy with probabilities clamped away from 0 and 1."""
    p = min(max(float(p), CLAMP), 1.0 - CLAMP)
    return float(-(y * np.log(p) + (1 - y) * np.log(1.0 - p)))


def lr_at_epoch(epoch: int, config: TrainConfig) -> float:
    """Step decay: lr0 * gamma^floor(epoch / step_size)."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    return config.lr0 * config.gamma ** (epoch // config.step_size)


def _forward_parts(params: QnnParams, images: np.ndarray):
    fmaps = feature_map_batch(images, params)
    feats = downsample_batch(fmaps)
    m = vqc_z_batch(feats, params.vqc)
    return fmaps, feats, m


def _mean_bce(p: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(p, CLAMP, 1.0 - CLAMP)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))


def batch_loss(params: QnnParams, images: np.ndarray, labels: np.ndarray) -> float:
    """Mean BCE of a batch on the ideal backend."""
    _, _, m = _forward_parts(params, images)
    return _mean_bce(sigmoid(m), np.asarray(labels, dtype=np.float64))


def param_shift_gradient(
    params: QnnParams, images: np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, float]:
    """Gradient of the mean batch BCE for all 111 parameters, plus the loss.

    Ideal backend with exact expectations only; there is no noisy gradient
    path.
    """
    images = np.asarray(images, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    n_batch = images.shape[0]

    _, feats, m = _forward_parts(params, images)
    p = sigmoid(m)
    loss = _mean_bce(p, y)
    # d(mean BCE)/dm composed analytically through the sigmoid
    dl_dm = (p - y) / n_batch

    grad = np.zeros(N_PARAMETERS)

    # variational Rot angles (encoded features reused across all shifts)
    encoded_feats = encoded_vqc_amps(feats)
    for k in range(N_VQC):
        shifted = params.vqc.copy()
        shifted[k] += _SHIFT
        z_plus = vqc_z_from_encoded(encoded_feats, shifted)
        shifted[k] -= 2.0 * _SHIFT
        z_minus = vqc_z_from_encoded(encoded_feats, shifted)
        grad[N_CONV + POOL_PARAMS + k] = float(dl_dm @ (z_plus - z_minus)) / 2.0

    # loss sensitivity to each band feature, via the encoder RY angles
    dl_df = np.empty((n_batch, VQC_QUBITS))
    offsets = np.zeros(VQC_QUBITS)
    for q in range(VQC_QUBITS):
        offsets[q] = _SHIFT
        z_plus = vqc_z_batch(feats, params.vqc, encoder_offsets=offsets)
        offsets[q] = -_SHIFT
        z_minus = vqc_z_batch(feats, params.vqc, encoder_offsets=offsets)
        offsets[q] = 0.0
        dl_df[:, q] = dl_dm * np.pi * (z_plus - z_minus) / 2.0

    # loss sensitivity to each feature-map cell
    dl_dcell = np.repeat(dl_df[:, :7] * _BAND_CELL_W, 2, axis=1)[:, :, None]
    dl_dcell = dl_dcell + (dl_df[:, 7] * _GLOBAL_CELL_W)[:, None, None]
    dl_dcell = np.broadcast_to(dl_dcell, (n_batch, MAP_SIZE, MAP_SIZE))

    encoded_patches = encoded_filter_amps(extract_patches(images))

    def map_from(conv_vec, pool_vec, pool_expand=None):
        z = filter_z_from_encoded(encoded_patches, conv_vec, pool_vec, pool_expand)
        return z.reshape(n_batch, MAP_SIZE, MAP_SIZE)

    # filter Rot angles
    for t in range(N_CONV):
        shifted = params.conv.copy()
        shifted[t] += _SHIFT
        map_plus = map_from(shifted, params.pool)
        shifted[t] -= 2.0 * _SHIFT
        map_minus = map_from(shifted, params.pool)
        grad[t] = float(np.sum(dl_dcell * (map_plus - map_minus))) / 2.0

    # pooling CRZ angles, through the two shifted RZ slots (weights -+1/2)
    for i in range(POOL_PARAMS):
        g_slots = []
        for slot in range(2):
            shift = [0.0, 0.0]
            shift[slot] = _SHIFT
            map_plus = map_from(params.conv, params.pool, (i, shift[0], shift[1]))
            shift[slot] = -_SHIFT
            map_minus = map_from(params.conv, params.pool, (i, shift[0], shift[1]))
            g_slots.append(np.sum(dl_dcell * (map_plus - map_minus)) / 2.0)
        grad[N_CONV + i] = float(g_slots[1] - g_slots[0]) / 2.0

    return grad, loss


def finite_difference_gradient(
    params: QnnParams,
    images: np.ndarray,
    labels: np.ndarray,
    h: float = 1e-3,
) -> tuple[np.ndarray, float]:
    """Central-difference gradient of the mean batch BCE (check mode)."""
    vec = params.to_vector()
    grad = np.zeros(N_PARAMETERS)
    for k in range(N_PARAMETERS):
        bumped = vec.copy()
        bumped[k] += h
        loss_plus = batch_loss(QnnParams.from_vector(bumped), images, labels)
        bumped[k] -= 2.0 * h
        loss_minus = batch_loss(QnnParams.from_vector(bumped), images, labels)
        grad[k] = (loss_plus - loss_minus) / (2.0 * h)
    return grad, batch_loss(params, images, labels)


def adam_step(
    params_vec: np.ndarray, grads: np.ndarray, state: AdamState, lr: float
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; returns the new vector and state."""
    if params_vec.shape != (N_PARAMETERS,) or grads.shape != (N_PARAMETERS,):
        raise ValueError(f"expected {N_PARAMETERS}-dimensional vectors")
    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads**2
    m_hat = m / (1.0 - state.beta1**step)
    v_hat = v / (1.0 - state.beta2**step)
    new_vec = params_vec - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    new_state = AdamState(m, v, step, state.beta1, state.beta2, state.eps)
    return new_vec, new_state


def train(
    images: np.ndarray, labels: np.ndarray, config: TrainConfig
) -> tuple[QnnParams, TrainHistory]:
    """Mini-batch Adam training; fully determined by (data, config)."""
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels)
    if images.shape[0] == 0:
        raise ValueError("training dataset is empty")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")

    rng = np.random.default_rng(config.seed)
    vec = rng.uniform(-config.init_scale, config.init_scale, N_PARAMETERS)
    state = AdamState()
    history = TrainHistory()
    n = images.shape[0]

    gradient = (
        param_shift_gradient
        if config.gradient_mode == "parameter-shift"
        else finite_difference_gradient
    )

    for epoch in range(config.epochs):
        lr = lr_at_epoch(epoch, config)
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            params = QnnParams.from_vector(vec)
            grads, loss = gradient(params, images[batch], labels[batch])
            vec, state = adam_step(vec, grads, state, lr)
            loss_sum += loss * batch.size
        params = QnnParams.from_vector(vec)
        _, _, m = _forward_parts(params, images)
        accuracy = float(np.mean((sigmoid(m) >= 0.5) == (labels == 1)))
        history.loss.append(loss_sum / n)
        history.accuracy.append(accuracy)
        history.lr.append(lr)

    return QnnParams.from_vector(vec), history
