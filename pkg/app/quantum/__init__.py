"""States, operators, channels and their Choi duality."""
