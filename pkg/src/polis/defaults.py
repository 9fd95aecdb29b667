"""Single table of default parameters.

Full-scale and desk-scale runs differ only in the values overridden on top
of this table (flags, config file, or keyword arguments).
"""

DEFAULTS = {
    # geography
    "grid": 100,
    "firms": 100,
    "markets": 5,
    # demand and transport
    "intercept": 200.0,
    "slope": 3.0,
    "transport": 1.0,
    # learning dynamics
    "neighbors": 4,
    "mimic_prob": 0.5,
    "mutate_prob": 0.0,
    "steps": 1000,
    "warmup": 100,
    # estimation
    "n_sim": 10_000,
    "confidence": 0.95,
    # policy space
    "rate_min": -0.25,
    "rate_max": 0.25,
    "fixed_min": -50.0,
    "fixed_max": 50.0,
    "rate_radius": 0.02,
    "fixed_radius": 5.0,
    # simulated annealing
    "t0": 10.0,
    "alpha": 0.8,
    "t_final": 0.001,
    "inner_iters": 10,
    "max_evals": 210,
    # stochastic local search
    "iterations": 200,
    # campaigns
    "executions": 1,
    "seed": 0,
}
