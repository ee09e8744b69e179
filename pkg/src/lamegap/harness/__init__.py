"""Run configuration, epsilon sweeps, rate fits, reports and the command line."""
