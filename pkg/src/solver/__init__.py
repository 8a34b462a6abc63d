# KdV Lab — Crank–Nicolson Solver
