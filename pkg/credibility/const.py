"""Constants for news-sharing credibility inference."""

DOMAIN = "credibility"

CONF_ALPHA = "alpha"
CONF_BETA = "beta"
CONF_TOLERANCE = "tolerance"
CONF_MAX_ITERATIONS = "max_iterations"
CONF_SEED_FRACTION = "seed_fraction"
CONF_DANGLING = "dangling"

DEFAULT_ALPHA = 0.85
DEFAULT_BETA = 0.85
DEFAULT_TOLERANCE = 1e-8
DEFAULT_MAX_ITERATIONS = 100
DEFAULT_SEED_FRACTION = 0.02

DANGLING_TELEPORT = "teleport"
DANGLING_DROP = "drop"

REPUTATION_SCALE_MAX = "max"
REPUTATION_SCALE_RAW = "raw"

DEFAULT_MIN_ACCOUNT_LINKS = 5
DEFAULT_MIN_DOMAIN_SHARES = 5
DEFAULT_LABEL_THRESHOLD = 60.0
DEFAULT_CONFIDENCE_FLOOR = 1.0

DEFAULT_DIMENSION = 128
DEFAULT_WINDOW = 10
DEFAULT_WALKS_PER_NODE = 10
DEFAULT_WALK_LENGTH = 80
DEFAULT_EPOCHS = 10
DEFAULT_NEGATIVES = 5
DEFAULT_LEARNING_RATE = 0.025
DEFAULT_KNN_K = 10
DEFAULT_PQ_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)

DEFAULT_FOLDS = 5
DEFAULT_F1_THRESHOLDS = 1000
DEFAULT_SEED = 42

# Export presets used for the figures.
RESHARE_KCORE_PRESET = 3
BIPARTITE_KCORE_PRESET = 4
BACKBONE_SIGNIFICANCE_PRESET = 0.3
COSHARE_TOP_EDGE_FRACTION = 0.1
COSHARE_CORE_NODE_FRACTION = 0.1

# Best (p, q) reported per network and dataset.
PQ_PRESETS: dict[str, tuple[float, float]] = {
    "reshare": (1.0, 1.0),
    "coshare": (1.0, 1.0),
    "coshare_covid": (2.0, 0.5),
    "coshare_facebook": (0.25, 4.0),
}

# Links to these platforms are not news sources.
PLATFORM_DOMAINS = frozenset(
    {
        "amazon.com",
        "yelp.com",
        "youtube.com",
        "youtu.be",
        "facebook.com",
        "fb.me",
        "twitter.com",
        "x.com",
        "t.co",
        "instagram.com",
        "linkedin.com",
        "reddit.com",
        "tiktok.com",
        "google.com",
        "apple.com",
    }
)

NETWORK_RESHARE = "reshare"
NETWORK_TRUST = "trust"
NETWORK_BIPARTITE = "bipartite"
NETWORK_COSHARE = "coshare"
NETWORKS = (NETWORK_RESHARE, NETWORK_TRUST, NETWORK_BIPARTITE, NETWORK_COSHARE)
