"""Named synthetic scenes used by the experiments and the acceptance suite.

All are 640x360, 120 frames.  Speeds stay within 5-9 px/frame per axis
except the smash, which runs at 45 px/frame.
"""

from __future__ import annotations

from .synth import Blinker, Hit, Occlusion, PlayerSpec, SynthConfig

SMASH_START = 51
SMASH_FRAMES = tuple(range(SMASH_START, SMASH_START + 6))


def _players() -> list[PlayerSpec]:
    return [
        PlayerSpec(x=560.0, y=60.0, w=24, h=64, shirt=(60, 70, 190), amp_x=10.0, period=80.0),
        PlayerSpec(x=470.0, y=250.0, w=26, h=70, shirt=(190, 150, 40), amp_x=14.0, period=100.0),
    ]


def clean_rally(seed: int = 7) -> SynthConfig:
    """Three flights joined by two hits, no occlusion."""
    return SynthConfig(
        seed=seed,
        start=(60.0, 250.0),
        velocity=(7.0, -6.0),
        hits=[Hit(40, -6.5, -5.0), Hit(80, 7.0, -3.0)],
        players=_players(),
        specks=[(150.0, 320.0), (420.0, 60.0)],
    )


def occlusion_rally(seed: int = 7) -> SynthConfig:
    """The clean rally with the ball crossing a player for five frames."""
    cfg = clean_rally(seed)
    cfg.occlusions = [Occlusion(20, 24, "player-overlap")]
    return cfg


def smash_rally(seed: int = 7) -> SynthConfig:
    """A lob, a six-frame smash at 45 px/frame, and a slow return."""
    return SynthConfig(
        seed=seed,
        start=(200.0, 250.0),
        velocity=(7.0, -6.0),
        hits=[Hit(SMASH_START - 1, -40.0, 20.6), Hit(SMASH_FRAMES[-1], 5.0, -7.0)],
        players=[PlayerSpec(x=40.0, y=60.0, w=24, h=64, amp_x=10.0, period=80.0)],
    )


def blinker_rally(seed: int = 7) -> SynthConfig:
    """The clean rally plus a light blinking every other frame for ten flashes."""
    cfg = clean_rally(seed)
    cfg.blinkers = [Blinker(x=300.0, y=300.0, start=30, count=10, period=2)]
    return cfg


def static_ball(seed: int = 0) -> SynthConfig:
    return SynthConfig(seed=seed, start=(100.0, 100.0), velocity=(0.0, 0.0), gravity=0.0, noise=0.0)


SCENARIOS = {
    "clean": clean_rally,
    "occlusion": occlusion_rally,
    "smash": smash_rally,
    "blinker": blinker_rally,
    "static": static_ball,
}
