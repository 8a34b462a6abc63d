# KdV Lab — Coefficient Sets
