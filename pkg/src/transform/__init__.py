# KdV Lab — Variable Changes and Symmetries
