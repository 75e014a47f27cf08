"""Uniform-sampling Monte Carlo for first-passage times of correlated jump-diffusions."""
