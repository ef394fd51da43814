"""A small phase-transition sweep written as CSV with its recipe in the header.

Success of basis pursuit drops from one to zero as the sparsity m grows
past a threshold depending on n/N.  Re-running the config in the header
reproduces the file exactly.
"""

from cspolytope.harness import ExperimentConfig, PhaseDiagram, run_phase_transition

cfg = ExperimentConfig("gaussian", 30, 60, [1, 4, 8, 12, 16, 20], 40, seed=0, delta_trials=20)
d = run_phase_transition(cfg)
print(d.to_csv())
print("monotonicity violations:", d.monotone_violations())
again = run_phase_transition(ExperimentConfig.from_dict(PhaseDiagram.from_csv(d.to_csv()).metadata["config"]))
print("reproduced from header:", again.to_csv() == d.to_csv())
