"""Deep congruences between p-new Hecke eigenforms, computed exactly."""

__version__ = "0.1.0"
