# Comparing type-error reports of the bundled benchmarks across sensitivities
import numpy as np

from notjsAbsInt import AnalysisLimits, LimitExceeded, analyze, report_errors
from notjsAbsInt.cli import load_corpus
from notjsAbsInt.vis_utils import (error_reduction, plot_performance_heatmap,
                                   plot_precision_heatmap, relative_cost)

# Default parameters
sensitivities = ["fs", "stack:1.0", "stack:2.1", "acyclic:1", "obj:1.0", "sig:1.0", "mixed:2.1"]
limits = AnalysisLimits(max_iterations=100_000, wall_clock=60.0)

corpus = load_corpus()
programs = [name for name, _ in corpus]
errors = np.full((len(corpus), len(sensitivities)), np.nan)
times = np.full_like(errors, np.nan)

for i, (name, program) in enumerate(corpus):
    for j, strategy in enumerate(sensitivities):
        try:
            result = analyze(program, strategy, limits)
        except LimitExceeded:
            continue  # timeout, left as NaN
        errors[i, j] = report_errors(program, result).counts["total"]
        times[i, j] = result.stats.millis / 1000.0
    print(f"{name:<24}" + "".join(f"{e:>8.0f}" for e in errors[i]))

# Plotting precision and cost relative to flow sensitivity
plot_precision_heatmap(
    error_reduction(errors, errors[:, 0]),
    programs,
    sensitivities,
    output_filename="error_reduction.png",
)
plot_performance_heatmap(
    relative_cost(times, times[:, 0]),
    programs,
    sensitivities,
    output_filename="relative_time.png",
)
