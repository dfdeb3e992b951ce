"""The quanvolutional binary classifier.

Pipeline: a 28x28 image is scanned by a 2x2/stride-2 quantum filter (4
qubits: angle encoder, 3 strongly-entangling layers, a controlled-RZ
pooling chain, <Z> on qubit 0), giving a 14x14 feature map.  The map is
reduced to 8 band features that feed an 8-qubit strongly-entangling
variational circuit; sigmoid of its <Z_0> is the class-1 probability.

Parameter budget: 36 filter angles + 3 pooling angles + 72 variational
angles = 111 trainable parameters.

Batched row kernels do the heavy lifting; the per-image functions are thin
wrappers over the same code paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, GateOp, cnot, crz, rot, ry, rz
from .noise import NoiseSpec, TrajectoryPlan, estimate_expectation
from .simulator import (
    apply_ops_rows,
    apply_ry_rows,
    expectation_z_rows,
    zero_rows,
)

CONV_QUBITS = 4
CONV_LAYERS = 3
POOL_PARAMS = 3
VQC_QUBITS = 8
VQC_LAYERS = 3
KERNEL = 2
STRIDE = 2
IMAGE_SIZE = 28
MAP_SIZE = IMAGE_SIZE // STRIDE

N_CONV = CONV_QUBITS * CONV_LAYERS * 3
N_VQC = VQC_QUBITS * VQC_LAYERS * 3
N_PARAMETERS = N_CONV + POOL_PARAMS + N_VQC


@dataclass
class QnnParams:
    conv: np.ndarray = field(default_factory=lambda: np.zeros(N_CONV))
    pool: np.ndarray = field(default_factory=lambda: np.zeros(POOL_PARAMS))
    vqc: np.ndarray = field(default_factory=lambda: np.zeros(N_VQC))

    def __post_init__(self):
        self.conv = np.asarray(self.conv, dtype=np.float64)
        self.pool = np.asarray(self.pool, dtype=np.float64)
        self.vqc = np.asarray(self.vqc, dtype=np.float64)
        if self.conv.shape != (N_CONV,):
            raise ValueError(f"conv must have {N_CONV} angles")
        if self.pool.shape != (POOL_PARAMS,):
            raise ValueError(f"pool must have {POOL_PARAMS} angles")
        if self.vqc.shape != (N_VQC,):
            raise ValueError(f"vqc must have {N_VQC} angles")
        if not (
            np.isfinite(self.conv).all()
            and np.isfinite(self.pool).all()
            and np.isfinite(self.vqc).all()
        ):
            raise ValueError("parameters must be finite")

    @property
    def n_parameters(self) -> int:
        return self.conv.size + self.pool.size + self.vqc.size

    @classmethod
    def init_random(cls, seed: int, scale: float = 0.1) -> "QnnParams":
        rng = np.random.default_rng(seed)
        vec = rng.uniform(-scale, scale, N_PARAMETERS)
        return cls.from_vector(vec)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.conv, self.pool, self.vqc])

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "QnnParams":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (N_PARAMETERS,):
            raise ValueError(f"expected {N_PARAMETERS} parameters")
        return cls(
            vec[:N_CONV].copy(),
            vec[N_CONV : N_CONV + POOL_PARAMS].copy(),
            vec[N_CONV + POOL_PARAMS :].copy(),
        )


def sigmoid(m: float | np.ndarray):
    return 1.0 / (1.0 + np.exp(-np.asarray(m, dtype=np.float64)))


# -- circuit construction ---------------------------------------------------

def encode_angles(values, n_qubits: int) -> Circuit:
    """Angle encoder: RY(pi * v_i) on qubit i.  Values must lie in [0, 1]."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (n_qubits,):
        raise ValueError(f"expected {n_qubits} values, got shape {values.shape}")
    if np.any(values < 0.0) or np.any(values > 1.0):
        raise ValueError("encoder values must lie in [0, 1]")
    return Circuit(n_qubits, tuple(ry(q, np.pi * v) for q, v in enumerate(values)))


def _sel_ops(n_qubits: int, angles: np.ndarray) -> list[GateOp]:
    """Strongly-entangling layers: per-qubit Rot then a CNOT ring."""
    ops = []
    for layer in angles:
        for q in range(n_qubits):
            ops.append(rot(q, *layer[q]))
        for q in range(n_qubits):
            ops.append(cnot(q, (q + 1) % n_qubits))
    return ops


def _expanded_crz(control: int, target: int, theta: float, shift_a: float, shift_b: float) -> list[GateOp]:
    # CRZ(t) = RZ(t/2)_target . CNOT . RZ(-t/2)_target . CNOT, with optional
    # shifts on the two RZ slots (parameter-shift differentiation)
    return [
        cnot(control, target),
        rz(target, -theta / 2.0 + shift_a),
        cnot(control, target),
        rz(target, theta / 2.0 + shift_b),
    ]


def _pool_ops(pool: np.ndarray, expand: tuple[int, float, float] | None = None) -> list[GateOp]:
    """Pooling chain: CRZ(pool[i]) on target i controlled by qubit i + 1."""
    ops: list[GateOp] = []
    for i in range(POOL_PARAMS):
        if expand is not None and expand[0] == i:
            ops.extend(_expanded_crz(i + 1, i, pool[i], expand[1], expand[2]))
        else:
            ops.append(crz(i + 1, i, pool[i]))
    return ops


def _filter_body_ops(conv: np.ndarray, pool: np.ndarray, pool_expand=None) -> list[GateOp]:
    angles = conv.reshape(CONV_LAYERS, CONV_QUBITS, 3)
    return _sel_ops(CONV_QUBITS, angles) + _pool_ops(pool, pool_expand)


def _vqc_body_ops(vqc: np.ndarray) -> list[GateOp]:
    return _sel_ops(VQC_QUBITS, vqc.reshape(VQC_LAYERS, VQC_QUBITS, 3))


def build_filter_circuit(patch, params: QnnParams) -> Circuit:
    """Filter circuit for one flattened 2x2 patch (4 qubits, <Z_0> measured)."""
    enc = encode_angles(patch, CONV_QUBITS)
    body = _filter_body_ops(params.conv, params.pool)
    return Circuit(CONV_QUBITS, enc.ops + tuple(body), measured_qubit=0)


def build_vqc_circuit(features, params: QnnParams, ancilla: bool = False) -> Circuit:
    """Variational stage for one 8-feature vector.

    With ``ancilla`` a ninth, idle qubit is appended; trojan implants and
    shields are the only ops that ever touch it.
    """
    enc = encode_angles(features, VQC_QUBITS)
    body = _vqc_body_ops(params.vqc)
    width = VQC_QUBITS + 1 if ancilla else VQC_QUBITS
    return Circuit(width, enc.ops + tuple(body), measured_qubit=0)


# -- batched evaluation ------------------------------------------------------
#
# The filter batch is wide (up to tens of thousands of patches) over a tiny
# 16-dim state, so its parameter-dependent body is fused into one dense
# 16x16 unitary applied with a single matmul.  The variational stage keeps
# the per-op row kernels: its batches are small and its state is larger.

def encoded_filter_amps(
    patches: np.ndarray, encoder_offsets: np.ndarray | None = None
) -> np.ndarray:
    patches = np.asarray(patches, dtype=np.float64)
    amps = zero_rows(CONV_QUBITS, patches.shape[0])
    for q in range(CONV_QUBITS):
        angles = np.pi * patches[:, q]
        if encoder_offsets is not None:
            angles = angles + encoder_offsets[q]
        apply_ry_rows(amps, q, angles, CONV_QUBITS)
    return amps


def _filter_body_unitary(conv, pool, pool_expand=None) -> np.ndarray:
    cols = np.eye(1 << CONV_QUBITS, dtype=np.complex128)
    apply_ops_rows(cols, _filter_body_ops(conv, pool, pool_expand), CONV_QUBITS)
    # rows of the batch are columns of the unitary, so right-multiplying
    # encoded rows by this matrix applies the body to every row
    return cols


def filter_z_from_encoded(
    encoded: np.ndarray,
    conv: np.ndarray,
    pool: np.ndarray,
    pool_expand: tuple[int, float, float] | None = None,
) -> np.ndarray:
    out = encoded @ _filter_body_unitary(conv, pool, pool_expand)
    return expectation_z_rows(out, 0, CONV_QUBITS)


def filter_z_batch(
    patches: np.ndarray,
    conv: np.ndarray,
    pool: np.ndarray,
    pool_expand: tuple[int, float, float] | None = None,
    encoder_offsets: np.ndarray | None = None,
) -> np.ndarray:
    """<Z_0> of the filter circuit for a batch of flattened patches."""
    encoded = encoded_filter_amps(patches, encoder_offsets)
    return filter_z_from_encoded(encoded, conv, pool, pool_expand)


def encoded_vqc_amps(
    features: np.ndarray, encoder_offsets: np.ndarray | None = None
) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    amps = zero_rows(VQC_QUBITS, features.shape[0])
    for q in range(VQC_QUBITS):
        angles = np.pi * features[:, q]
        if encoder_offsets is not None:
            angles = angles + encoder_offsets[q]
        apply_ry_rows(amps, q, angles, VQC_QUBITS)
    return amps


def vqc_z_from_encoded(encoded: np.ndarray, vqc: np.ndarray) -> np.ndarray:
    amps = encoded.copy()
    apply_ops_rows(amps, _vqc_body_ops(vqc), VQC_QUBITS)
    return expectation_z_rows(amps, 0, VQC_QUBITS)


def vqc_z_batch(
    features: np.ndarray,
    vqc: np.ndarray,
    encoder_offsets: np.ndarray | None = None,
) -> np.ndarray:
    """<Z_0> of the variational stage for a batch of feature vectors."""
    return vqc_z_from_encoded(encoded_vqc_amps(features, encoder_offsets), vqc)


def _check_image(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.shape != (IMAGE_SIZE, IMAGE_SIZE):
        raise ValueError(f"expected a {IMAGE_SIZE}x{IMAGE_SIZE} image")
    return image


def extract_patches(images: np.ndarray) -> np.ndarray:
    """(B, 28, 28) -> (B * 196, 4) row-major flattened 2x2 patches."""
    b = images.shape[0]
    return (
        images.reshape(b, MAP_SIZE, KERNEL, MAP_SIZE, KERNEL)
        .transpose(0, 1, 3, 2, 4)
        .reshape(b * MAP_SIZE * MAP_SIZE, KERNEL * KERNEL)
    )


def feature_map_batch(images: np.ndarray, params: QnnParams) -> np.ndarray:
    """(B, 28, 28) -> (B, 14, 14) quanvolution feature maps (ideal backend)."""
    images = np.asarray(images, dtype=np.float64)
    z = filter_z_batch(extract_patches(images), params.conv, params.pool)
    return z.reshape(images.shape[0], MAP_SIZE, MAP_SIZE)


def quanvolve(image, params: QnnParams) -> np.ndarray:
    """14x14 feature map of one image: <Z_0> of the filter on each patch."""
    image = _check_image(image)
    return feature_map_batch(image[None, :, :], params)[0]


def downsample_features(fmap: np.ndarray) -> np.ndarray:
    """14x14 map -> 8 features in [0, 1].

    Features 0..6 are means of row bands (2i, 2i+1); feature 7 is the
    whole-map mean; all are rescaled from [-1, 1] via (v + 1) / 2.
    """
    fmap = np.asarray(fmap, dtype=np.float64)
    if fmap.shape != (MAP_SIZE, MAP_SIZE):
        raise ValueError(f"expected a {MAP_SIZE}x{MAP_SIZE} feature map")
    return downsample_batch(fmap[None, :, :])[0]


def downsample_batch(fmaps: np.ndarray) -> np.ndarray:
    v = np.empty((fmaps.shape[0], VQC_QUBITS))
    v[:, :7] = fmaps.reshape(fmaps.shape[0], 7, 2, MAP_SIZE).mean(axis=(2, 3))
    v[:, 7] = fmaps.mean(axis=(1, 2))
    return (v + 1.0) / 2.0


def features_batch(images: np.ndarray, params: QnnParams) -> np.ndarray:
    return downsample_batch(feature_map_batch(images, params))


def scores_batch(images: np.ndarray, params: QnnParams) -> np.ndarray:
    """Class-1 probabilities for a batch of images on the ideal backend."""
    return sigmoid(vqc_z_batch(features_batch(images, params), params.vqc))


def forward(
    image,
    params: QnnParams,
    noise: NoiseSpec | None = None,
    plan: TrajectoryPlan | None = None,
) -> float:
    """Class-1 probability of one image.

    The quanvolution stage always runs ideally; the variational stage runs
    on the requested backend (ideal when ``noise`` is None, otherwise
    trajectory-sampled with ``plan``).
    """
    image = _check_image(image)
    feats = downsample_features(quanvolve(image, params))
    if noise is None:
        m = float(vqc_z_batch(feats[None, :], params.vqc)[0])
    else:
        if plan is None:
            raise ValueError("noisy forward requires a TrajectoryPlan")
        circuit = build_vqc_circuit(feats, params)
        m, _ = estimate_expectation(circuit, 0, noise, plan)
    return float(sigmoid(m))


def predict(p: float, threshold: float = 0.5) -> int:
    """Decision rule: class 1 iff p >= threshold (ties go to class 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability {p} outside (0, 1)")
    return 1 if p >= threshold else 0
