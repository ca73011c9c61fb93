# Tests package for notjsAbsInt
