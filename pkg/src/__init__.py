# KdV Lab — Variable-Coefficient KdV-Type Numerical Laboratory
# Copyright (C) 2026. Licensed under GPLv3.

__version__ = "0.1.0"
__app_name__ = "KdV Lab"
