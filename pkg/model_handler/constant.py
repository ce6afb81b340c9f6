VERSION = "0.3.0"

# Latent variance of the probit link, fixed by convention. Not a knob.
SIGMA_Z2 = 1.0

# Sampler schedule used for the SOC re-analysis and the full simulation study.
DEFAULT_ITERATIONS = 20000
DEFAULT_BURN_IN = 10000
DEFAULT_THINNING = 1
DEFAULT_CHAINS = 1

# Desk-scale schedule behind `--fast`.
FAST_ITERATIONS = 4000
FAST_BURN_IN = 2000

DEFAULT_SEED = 20240517

# Half-Cauchy scale on sqrt(lambda).
DEFAULT_A = 10.0
# Initial values of the global shrinkage variance and its mixing auxiliary.
LAMBDA_INIT = 1.0
MU_INIT = 1.0

# FPCA expansion.
DEFAULT_XI = 0.01
DEFAULT_L_SCORES = 2
SPLINE_ORDER = 4  # cubic
PSI_INIT_SD = 0.1  # N(0, 0.01) entries
SIGMA_EPS2_INIT = 1.0
LAMBDA_ELL_INIT = 1.0
JITTER = 1e-8

DEFAULT_BOOTSTRAP_RESAMPLES = 10000
BOOTSTRAP_BLOCK_SIZE = 1000

CONFIDENCE = 0.95
SIGNIFICANCE_LEVEL = 0.05

# Truncated normal: switch from inverse-CDF to exponential rejection once the
# kept region holds less than this much standard-normal mass.
TAIL_MASS_THRESHOLD = 1e-5
MAX_REJECTION_ROUNDS = 10000

# Table 2 orientation: the row player is specialty care (j=2), the column
# player primary care (j=1); index 1 means "yes", 2 means "no".
PRIMARY_CARE, SPECIALTY_CARE = "primary", "specialty"
OBSERVATION_LABELS = (PRIMARY_CARE, SPECIALTY_CARE)

SOC_SET_LABELS = ("DD", "MH", "JJ", "CW", "ED")
SOC_SET_NAMES = {
    "DD": "Developmental Disabilities",
    "MH": "Mental Health",
    "JJ": "Juvenile Justice",
    "CW": "Child Welfare",
    "ED": "Education",
}

# Published multivariate re-analysis of the SOC data:
# (median rho, 2.5%, 97.5%, P(rho > 0), R-hat, upper 95%).
SOC_PUBLISHED_SUMMARY = {
    "DD": (0.035, -0.002, 0.096, 0.970, 1.003, 1.008),
    "MH": (-0.110, -0.259, 0.035, 0.068, 1.000, 1.001),
    "JJ": (-0.024, -0.089, 0.031, 0.170, 1.002, 1.006),
    "CW": (-0.040, -0.150, 0.063, 0.224, 1.001, 1.002),
    "ED": (-0.394, -0.533, -0.240, 0.000, 1.000, 1.001),
}

# Simulation study design.
SIM_N_SUBJECTS = 75
SIM_K_GRID = (2, 3, 4, 5)
SIM_THETA12_GRID = (0.05, 0.10, 0.15, 0.20)
SIM_THETA_DRAW_SD = 0.02
SIM_REPLICATES = 200
SIM_BATCH_SIZE = 1000
SIM_MAX_BATCHES = 10
SIM_SPARSE_SET = 1  # zero-based index of the designed sparse set (k = 2)
SIM_YIELD_TARGET = (0.294, 0.422)
SIM_CALIBRATION_GRID = (0.0, 0.005, 0.01, 0.015, 0.02, 0.025, 0.03, 0.04, 0.05)

# theta vectors by K, in column order (j=1, k=1..K, j=2, k=1..K); None marks theta_12.
SIM_THETA_TEMPLATES = {
    2: (0.05, None, 0.25, 0.005),
    3: (0.05, None, 0.1, 0.25, 0.005, 0.15),
    4: (0.05, None, 0.005, 0.1, 0.25, 0.005, 0.05, 0.15),
    5: (0.05, None, 0.005, 0.1, 0.25, 0.25, 0.005, 0.05, 0.15, 0.35),
}

BAYESIAN_MODELS = ("naive", "penalized", "mvp")
FREQUENTIST_MODELS = ("gee", "bootstrap", "erm")
ALL_MODELS = BAYESIAN_MODELS + FREQUENTIST_MODELS
SIM_DEFAULT_MODELS = ("mvp", "gee", "bootstrap", "erm")

THREADS_ENV_VAR = "MMP_THREADS"
