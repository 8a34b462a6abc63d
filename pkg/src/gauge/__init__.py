# KdV Lab — Gauge Transformation
