"""Zero-G free-flyer control sandbox: simulator, PD baseline, learned policy,
safety-supervised maneuver replay, and the CLI tying them together."""

__version__ = "0.1.0"

from . import actuation, baseline, config, dynamics, env, learn, math3d, mission

__all__ = [
    "actuation",
    "baseline",
    "config",
    "dynamics",
    "env",
    "learn",
    "math3d",
    "mission",
    "__version__",
]
