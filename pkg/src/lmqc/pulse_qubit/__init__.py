"""Tunable-coupler emitters, cascaded simulations and the two-phonon pipeline."""
