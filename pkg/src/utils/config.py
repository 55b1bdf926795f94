"""
Configuration settings for the binary latent ranking engine.
"""
from typing import Dict

# --- Package / logging ---
LOGGER_NAME = "src"
DEFAULT_LOG_LEVEL = "INFO"
ENV_LOG_LEVEL = "BINRANK_LOG_LEVEL"
ENV_SEED = "BINRANK_SEED"
ENV_RUNS_DB = "BINRANK_RUNS_DB"
DEFAULT_SEED = 42

# --- Dataset settings ---
DATA_FORMATS = ("dat", "csv")
DEFAULT_SPLIT_FRACTIONS = (0.8, 0.1, 0.1)
SPLIT_FRACTION_TOLERANCE = 1e-9
SPLIT_FILE_NAMES = ("train.blri", "test.blri", "validation.blri")
ID_MAPS_FILE_NAME = "id_maps.npz"
MANIFEST_FILE_NAME = "manifest.json"

# --- Model settings ---
WORD_BITS = 32
DEFAULT_DIM = 32
REPRESENTATIONS = ("dense", "binary")
MODEL_MAGIC = b"BLRM"
MODEL_FORMAT_VERSION = 1
MODEL_KIND_DENSE = 0
MODEL_KIND_PACKED = 1
MODEL_KIND_DENSE_BINARY = 2

# --- Intermediate dataset file ---
INTERACTION_MAGIC = b"BLRI"
INTERACTION_FORMAT_VERSION = 1

# --- Training settings ---
LOSSES = ("bpr", "adaptive_hinge")
BPR_VARIANTS = ("sigmoid", "log_sigmoid")
DEFAULT_LEARNING_RATE = 1e-2
DEFAULT_L2 = 1e-6
DEFAULT_MINIBATCH_SIZE = 256
DEFAULT_EPOCHS = 10
DEFAULT_MAX_SAMPLED = 5
NEGATIVE_REJECTION_ATTEMPTS = 100
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8

# --- Benchmark settings ---
DEFAULT_DIMS = (32, 64, 128, 256, 512, 1024)
DEFAULT_BENCH_ITEMS = 100_000
DEFAULT_BENCH_REPETITIONS = 500
FLOAT_BYTES = 4

# --- Hyperparameter search space ---
# Ranges are not taken from any published protocol; they are reasonable defaults.
SEARCH_SPACE: Dict[str, object] = {
    "learning_rate": (1e-4, 1e-1),
    "l2": (1e-9, 1e-3),
    "minibatch_size": (128, 256, 512, 1024, 2048),
    "epochs": (5, 10, 20, 30, 50),
    "loss": ("bpr", "adaptive_hinge"),
}
DEFAULT_SEARCH_TRIALS = 30

# --- Report columns ---
COMPARISON_COLUMNS: Dict[str, str] = {
    "dim": "Dimension",
    "mrr": "MRR",
    "binary_mrr": "Binary MRR",
    "mrr_ratio": "MRR ratio",
    "ppms": "PPMS",
    "binary_ppms": "Binary PPMS",
    "ppms_ratio": "PPMS ratio",
    "memory_ratio": "Memory use ratio",
}

# --- Exit codes ---
EXIT_CODES = {
    'success': 0,
    'usage': 1,
    'data': 2,
    'runtime': 3,
}

# --- Error Messages ---
ERROR_MESSAGES = {
    'usage': 'Invalid arguments: {detail}',
    'data': 'Could not read input data: {detail}',
    'runtime': 'Command failed: {detail}',
    'dim': 'Dimension must be a positive multiple of 32, got {dim}.',
    'fingerprint': 'Dataset {path} changed since it was recorded in {manifest}.',
}
