"""Differentially private SGD with dynamic noise, random projection and
automatic per-sample clipping, plus a Renyi accountant and experiment harness."""
from .accountant import (
    MechanismParams,
    PrivacyLedger,
    accumulate_step,
    c1_feasibility,
    epsilon_at_delta,
    epsilon_or_inf,
    per_step_renyi,
    required_sigma,
)
from .clip import ClipConfig, auto_clip, clip_batch
from .data import generate_synthetic, load_csv, train_test_split, write_csv
from .kernels import BACKEND
from .model import MLP, Dataset, Logistic, Quadratic
from .noise import NoiseSchedule, sample_noise, schedule_sum, variance_at
from .optimizer import OptimizerConfig, TrainState, step, train, variant_dispatch
from .project import (
    ProjectionOperator,
    jl_min_dim,
    project_down,
    project_up,
    sample_operator,
)

__version__ = "0.1.0"
