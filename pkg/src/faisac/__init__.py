"""Joint beamforming, fluid-antenna placement and trajectory design for UAV ISAC."""

__version__ = "0.1.0"
