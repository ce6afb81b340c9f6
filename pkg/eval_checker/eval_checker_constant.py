# Truth for coverage and bias: the theta* that generated each replicate, or the design theta.
TRUTH_DATASET = "dataset"
TRUTH_DESIGN = "design"
TRUTH_MODES = (TRUTH_DATASET, TRUTH_DESIGN)

# One theta* draw per dataset, or one per subject.
THETA_DRAW_DATASET = "dataset"
THETA_DRAW_SUBJECT = "subject"
THETA_DRAW_MODES = (THETA_DRAW_DATASET, THETA_DRAW_SUBJECT)

METRICS = ("coverage", "power", "bias", "width")

# Stream ids under a scenario's RngStream.
GENERATION_STREAM = 0
SUBSAMPLE_STREAM = 1
METHOD_STREAM = 2

RED_FONT = "\033[91m"
RESET = "\033[0m"
