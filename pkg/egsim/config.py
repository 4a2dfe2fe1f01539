"""Configuration constants for the Enhanced Gateway WSN simulator."""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# ---------------------------------------------------------------------------
# Runtime / output
# ---------------------------------------------------------------------------
OUTPUT_DIR = Path(os.getenv("EGSIM_OUTPUT_DIR", "./results"))
LOG_LEVEL = os.getenv("EGSIM_LOG_LEVEL", "INFO").upper()
SHOW_PROGRESS = os.getenv("EGSIM_SHOW_PROGRESS", "1").strip().lower() not in ("0", "false", "no")
COMPARE_WORKERS = int(os.getenv("EGSIM_COMPARE_WORKERS", "1"))

# CSV numeric formatting (fixed 6 decimals everywhere)
CSV_FLOAT_FORMAT = "%.6f"

# ---------------------------------------------------------------------------
# Simulation clock
# ---------------------------------------------------------------------------
DEFAULT_TICK = 1.0
DIURNAL_PERIOD = 86400.0
DEFAULT_DECISION_PERIOD = 30.0

# ---------------------------------------------------------------------------
# Relevance weighting
# ---------------------------------------------------------------------------
DEFAULT_D0 = 500.0

# Built-in sensor types; scenarios may declare more.
BUILTIN_SENSOR_TYPES = ("Temperature", "Humidity", "CO2", "Smoke")

# ---------------------------------------------------------------------------
# Monitor (filter) defaults
# ---------------------------------------------------------------------------
Z_EPSILON = 1e-9
Z_CLIP = 10.0
DEFAULT_Z_MAX = 4.0
DEFAULT_FILTER_WINDOW = 20
MIN_Z_WINDOW = 5
DEFAULT_WINDOW_MAX_AGE = 900.0
DEFAULT_MIN_CORROBORATION = 2
DEFAULT_CORROBORATION_HORIZON = 120.0

# (value_min, value_max, max_rate per second) for the built-in types
DEFAULT_FILTER_BOUNDS: dict[str, tuple[float, float, float]] = {
    "Temperature": (-40.0, 120.0, 20.0),
    "Humidity": (0.0, 100.0, 10.0),
    "CO2": (0.0, 10000.0, 1000.0),
    "Smoke": (0.0, 1000.0, 200.0),
}

# (theta_low, theta_high) evidence ramps for the built-in types
DEFAULT_THRESHOLDS: dict[str, tuple[float, float]] = {
    "Temperature": (30.0, 45.0),
    "Humidity": (90.0, 100.0),
    "CO2": (600.0, 1400.0),
    "Smoke": (50.0, 200.0),
}

# ---------------------------------------------------------------------------
# Trust
# ---------------------------------------------------------------------------
DEFAULT_TRUST_ALPHA = 0.1
DEFAULT_DELTA_MAX = 4.0
DEFAULT_TAU0 = 0.5

# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------
DEFAULT_HISTORY_CAPACITY = 2000
DEFAULT_KNN_K = 5
DEFAULT_INFERENCE_MODE = "Max"

# ---------------------------------------------------------------------------
# Planner / quality
# ---------------------------------------------------------------------------
DEFAULT_INTERVAL_SET = (10.0, 30.0, 60.0, 120.0, 300.0)
DEFAULT_Q_MIN = 0.2
DEFAULT_Q_MAX = 0.9
DEFAULT_P_ALERT = 0.5
DEFAULT_ALERT_MAX_INTERVAL = 10.0
DEFAULT_HYSTERESIS = 0.05
DEFAULT_GRID_RESOLUTION = 10.0
DEFAULT_SUMMARY_TTL_PERIODS = 3

# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------
DEFAULT_GRACE = 60.0

# ---------------------------------------------------------------------------
# Output file names and headers (normative)
# ---------------------------------------------------------------------------
TIMESERIES_CSV = "timeseries.csv"
EVENTS_CSV = "events.csv"
SUMMARY_CSV = "summary.csv"
COUNTS_CSV = "counts.csv"
COMPARE_CSV = "compare.csv"
COMPARE_STATIC_CSV = "compare_static.csv"

TIMESERIES_COLUMNS = [
    "tick", "network_id", "power_w", "energy_j", "q", "p",
    "n_active", "report_interval", "alert",
]
EVENTS_COLUMNS = ["event_id", "start", "end", "detected", "latency_s", "detecting_eg"]
SUMMARY_COLUMNS = [
    "network_id", "total_energy_j", "mean_q", "detections", "misses", "false_alerts",
]
COUNTS_COLUMNS = [
    "network_id", "accepted", "rejected_syntactic", "rejected_semantic",
    "summaries_sent", "summaries_delivered", "summaries_dropped",
    "dead_nodes", "config_changes", "degraded_plans",
]
COMPARE_COLUMNS = [
    "seed", "network_id", "energy_on", "energy_off", "energy_saving_pct",
    "latency_on", "latency_off", "misses_on", "misses_off",
    "false_alerts_on", "false_alerts_off",
]
COMPARE_STATIC_COLUMNS = [
    "seed", "network_id", "energy_static", "energy_on", "saving_vs_static_pct",
]
