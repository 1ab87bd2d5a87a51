# weights container
PETW_MAGIC = b'PETW'
PETW_VERSION = 1
DTYPE_CODES = {'float32': 0, 'float64': 1}
DTYPE_NAMES = {code: name for name, code in DTYPE_CODES.items()}

# checkpoint reserved names
OPTIM_PREFIX = '__optim__.'
META_PREFIX = '__meta__.'
STEP_KEY = '__meta__.step'

# numerics
LAYER_NORM_EPS = 1e-5
STATS_POOL_EPS = 1e-9
GRAD_CHECK_STEP = 1e-5
GRAD_CHECK_FLOOR = 1e-6

# optimizer
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
LR_GROUP_A_PEAK = 5e-4
LR_GROUP_A_FLOOR = 1.5e-5
LR_GROUP_B_PEAK = 1e-4
LR_GROUP_B_FLOOR = 3e-6
WARMUP_FRACTION = 0.1

# pet defaults
BOTTLENECK_DIM = 256
ADAPTER_SCALE = 0.5
PROMPT_LENGTH = 30
LORA_RANK = 64
INTER_DIM = 512
EMBED_DIM = 512

# scoring
DCF_P_TARGET = 0.05
DCF_C_MISS = 1.0
DCF_C_FA = 1.0
SCORE_DECIMALS = 6

# synthetic corpus
SAMPLE_RATE = 4000
NUM_HARMONICS = 6
SNR_DB = 10.0
MIN_DURATION = 1.0
MAX_DURATION = 3.0
TRAIN_SPEAKERS = 20
EVAL_SPEAKERS = 10
UTTS_PER_SPEAKER = 30
WAVEFORM_TENSOR = 'waveform'
PERLIN_OCTAVES = 2

# pseudo-pretraining
MASK_FRACTION = 0.2
TARGET_BANDS = 8

# CLI exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_ABORT = 3
