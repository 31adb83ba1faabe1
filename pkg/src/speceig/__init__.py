"""Classical simulator for the spectroscopic eigensolver."""
