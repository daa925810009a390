"""Heavy-tailed cadlag processes, stable limits and their Monte Carlo diagnostics."""

__version__ = "0.1.0"

from .errors import ConfigError, ConvergenceError, DegenerateFitError, DomainError, TruncationError
from .cadlag import *  # noqa: F401,F403
from .heavy_tail import *  # noqa: F401,F403
from .spectral import *  # noqa: F401,F403
from .models import *  # noqa: F401,F403
from .renewal import *  # noqa: F401,F403
from .verification import *  # noqa: F401,F403
from .parallel import map_replicates
from .config import EXPERIMENTS, ExperimentConfig, load_config, parse_config
from .cli import ReportBundle, SummaryRow, emit_reports, run_experiment
