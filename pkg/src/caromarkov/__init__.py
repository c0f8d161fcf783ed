"""Two-type Markov model of scoring streaks in carom billiards."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CaromarkovError,
    ConvergenceError,
    DegenerateError,
    DegenerateFitError,
    DivergenceError,
    EmptyInputError,
    InfeasibleError,
    ParseError,
    ValidationError,
)
from .ingest import (  # noqa: E402
    ScoreHistogram,
    SurvivalCurve,
    composite,
    empirical_survival,
    mean_score,
    parse_histogram,
    read_histogram,
)
from .models import (  # noqa: E402
    BernoulliModel,
    MarkovModel,
    SpectralFit,
    bernoulli_mean,
    bernoulli_survival,
    eigen2,
    markov_mean,
    markov_survival,
    spectral_form,
    spectral_survival,
    y_from,
)
from .fitting import FitReport, fit_bernoulli, fit_histogram, fit_markov2  # noqa: E402
from .recovery import (  # noqa: E402
    IntervalMatrix,
    feasible_region,
    parameter_count,
    recover_k,
    validate_k,
)
from .simulate import (  # noqa: E402
    OpponentSurface,
    opponent_surface,
    simulate_histogram,
    simulate_inning,
)
from .analysis import (  # noqa: E402
    asymptote_slope,
    check_rho2_lambda,
    dedimensionalize,
    easy_start_mean,
)
