"""Command-line surface for the helium thermodynamics pipeline."""
