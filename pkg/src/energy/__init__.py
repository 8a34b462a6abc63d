# KdV Lab — Energy Identities
