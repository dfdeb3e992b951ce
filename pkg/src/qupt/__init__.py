"""Trojan attacks on a quanvolutional binary classifier, built on a
from-scratch statevector simulator with a config-file-triggered compile
pipeline and depolarizing-noise execution."""

from .circuits import (
    Circuit,
    GateOp,
    adjoint,
    cnot,
    crz,
    h,
    ising_xx,
    ising_yy,
    ising_zz,
    rot,
    rx,
    ry,
    rz,
    swap,
    with_control,
    x,
)
from .compiler import (
    ConfigError,
    DeviceConfig,
    LoweredProgram,
    cancel_adjacent_inverses,
    compile_circuit,
    eliminate_idle_qubits,
    parse_config,
    verify_equivalence,
)
from .dataset import DatasetError, DatasetSplit, load_mnist_idx
from .experiments import (
    Scenario,
    ScenarioError,
    load_model,
    run_experiment,
    save_model,
)
from .gates import GateKind, build_gate_matrix
from .metrics import EvalReport, compute_metrics, impact_pct, render_report, roc_auc
from .model import (
    QnnParams,
    build_filter_circuit,
    build_vqc_circuit,
    downsample_features,
    encode_angles,
    forward,
    predict,
    quanvolve,
)
from .noise import (
    DensityMatrix,
    NoiseSpec,
    TrajectoryPlan,
    estimate_expectation,
    evolve_density,
    expectation_from_density,
    run_noisy_trajectory,
    sample_pauli_error,
)
from .simulator import (
    Statevector,
    apply_circuit,
    apply_gate,
    expectation_z,
    sample_measurements,
)
from .training import (
    AdamState,
    TrainConfig,
    TrainHistory,
    adam_step,
    bce_loss,
    lr_at_epoch,
    param_shift_gradient,
    train,
)
from .trojans import (
    InsertionPoint,
    TrojanSpec,
    build_class_a,
    build_class_b,
    build_class_c,
    build_trojan_shield,
    build_ui_block,
    implant,
)

__version__ = "0.1.0"
