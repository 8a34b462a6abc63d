# KdV Lab — Spatial Grid
