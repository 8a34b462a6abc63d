# KdV Lab — Experiment Runner
