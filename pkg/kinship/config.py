import os

from dotenv import load_dotenv

load_dotenv()

# Application settings
APP_NAME = "Kinship Inference Engine"
APP_VERSION = "1.0.0"
DEBUG = os.getenv("DEBUG", "False").lower() == "true"

# Engine settings
PATH_CAP = int(os.getenv("KINSHIP_PATH_CAP", 16))
THREADS = int(os.getenv("KINSHIP_THREADS", 1))
MAX_ENUM_EDGES = int(os.getenv("KINSHIP_MAX_ENUM_EDGES", 12))

# Registry extension file (optional)
REGISTRY_FILE = os.getenv("KINSHIP_REGISTRY_FILE") or None

# Prometheus textfile target (optional)
METRICS_FILE = os.getenv("KINSHIP_METRICS_FILE") or None

# Output settings
JSON_SCHEMA_VERSION = 1
