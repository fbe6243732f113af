"""AFC Memory - atomic-frequency-comb quantum memory simulator for Er:TFLN waveguides."""

__version__ = "0.1.0"
