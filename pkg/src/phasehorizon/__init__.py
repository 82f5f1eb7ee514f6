"""Particle creation by moving refractive-index pulses in dispersive media.

Modules:
    numerics    ODE, oscillatory quadrature and Bessel helpers
    dispersion  Sellmeier silica and the massive-field surrogate
    frames      comoving coordinates, clocks and light cones
    planar      planar Bogoliubov engine (Models I and II)
    filament    cylindrical pair-emission engine
    config, cli, reproduce, svg   scenario front end
"""

__version__ = "0.1.0"
