# KdV Lab — Geometric-Optics Wave Packets
