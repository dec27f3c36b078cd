"""Quantum-circuit screening toolkit.

Filters an OpenQASM corpus under hardware/parameter budgets, ranks the
survivors by short-training each one inside a standardized hybrid
quantum-classical classifier, and fully trains the winner. Ships its own
statevector simulator and parameter-shift differentiation.
"""

from .data import Dataset, ScalerParams, SplitSet, load_csv, minmax_scale, smote, stratified_split
from .errors import QcScreenError, ShapeMismatchError
from .gradients import QuantumJacobian, finite_diff_jacobian, param_shift_jacobian
from .hybrid import (
    ForwardCache,
    HybridConfig,
    HybridParams,
    backward,
    forward,
    init_hybrid_params,
    predict_proba,
)
from .metrics import ConfusionCounts, EvalReport, confusion, evaluate, macro_f1, roc_auc
from .neural import Activation, AdamState, DenseLayer, adam_step, bce_with_logits, dense_backward, dense_forward
from .qasm import (
    CircuitIR,
    GateKind,
    GateOp,
    Literal,
    Trainable,
    mark_trainable,
    parse_qasm,
    strip_nonunitary,
    to_qasm,
)
from .screening import (
    Checkpoint,
    FilterConfig,
    FilterReport,
    RejectReason,
    ScreeningRecord,
    TrainConfig,
    filter_circuits,
    full_train_and_test,
    select_best,
    short_train,
    validate_execution,
)
from .simulator import StateVector, apply_gate, expect_all_z, init_zero_state, run

__version__ = "0.1.0"
