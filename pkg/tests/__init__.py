# KdV Lab — Tests
