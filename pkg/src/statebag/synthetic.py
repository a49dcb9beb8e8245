"""Synthetic labeled feature tracks driven by a latent behavioral-state model.

Each video is a sequence of dwell chunks, one latent state per chunk. A state
fixes the emission parameters of all 14 channels: affect means for valence and
arousal, an eye-closure pulse train for AU45 (its period sets the blink rate),
and sinusoid-plus-noise motion regimes for the positional channels.

The four default states form a 2x2 grid of two independent factors. The
affect factor drives valence/arousal means, the blink pulse period, and the
head-rotation dynamics (sleepy nodding, off-task head turning); the body
factor drives the gaze, head-location, and wrist dynamics:

                      still body      restless body
    positive affect   focused         facepalm
    negative affect   sleepy_eyes     offtask_gaze

Because every per-channel emission parameter depends on exactly one factor,
any class recipe pair that matches both factor marginals also matches every
whole-video per-channel statistic in expectation; such classes are separable
only through the joint frequencies of individual states. The default binary
recipes are built this way: the two levels differ in the affect-by-body
pairing, not in any channel's marginal statistics.

Labeling modes:

* ``frequency`` - the chunk order is randomly permuted; labels depend only on
  state occupancy.
* ``order`` - both levels share an identical chunk multiset and differ only
  in arrangement (level 0: state blocks in name order, level 1: reversed).
  Videos come in matched pairs (2i, 2i+1) that share structure draws, and
  chunks align to ``dwell_align`` so at zero noise the mirrored pair yields
  identical segment multisets.

Determinism: video ``i`` draws its structure from ``SeedSequence([seed, pair, 0])``
(pair = i in frequency mode, i // 2 in order mode) and its emission noise from
``SeedSequence([seed, i, 1])``, so generation is reproducible and
order-independent across parallel workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import InfeasibleRecipe
from .tracks import CHANNELS, DatasetManifest, FeatureTrack, ManifestEntry

AFFECT_NOISE = 0.15
AU45_NOISE = 0.03
AU45_BASELINE = 0.05
BLINK_PULSE_AMP = 1.5

#: Positional channels split into two dynamics groups; indices are offsets
#: into the positional block (channels 3..13). Base offsets are invisible to
#: the features, which only use channel dynamics.
_LOC_IDX = np.array([0, 1, 2, 3, 4, 8, 9, 10])   # gaze_x/y, head_x/y/z, wrist_x/y/z
_ROT_IDX = np.array([5, 6, 7])                   # head_pitch/yaw/roll
_CHANNEL_SCALE = np.array([1.0, 1.0, 0.8, 0.8, 0.8, 0.5, 0.5, 0.5, 1.2, 1.2, 1.2])
_CHANNEL_BASE = np.array([0.0, 0.0, 0.0, -0.1, 0.6, 0.0, 0.0, 0.0, 0.3, 0.8, 0.4])
_CHANNEL_PHASE = 0.9 * np.arange(len(_CHANNEL_SCALE))


@dataclass(frozen=True)
class LatentState:
    """Emission parameters of one behavioral/affective state."""

    name: str
    valence_mean: float
    arousal_mean: float
    blink_period: int          # frames between eye-closure pulses
    rot_amp: float             # head-rotation sinusoid amplitude
    rot_freq: float            # Hz
    rot_noise: float           # per-frame noise sigma of rotation channels
    loc_amp: float             # gaze/head-location/wrist sinusoid amplitude
    loc_freq: float            # Hz
    loc_noise: float           # per-frame noise sigma of location channels
    affect_noise: float = AFFECT_NOISE


def default_states() -> dict[str, LatentState]:
    still = dict(loc_amp=0.03, loc_freq=0.25, loc_noise=0.01)
    restless = dict(loc_amp=0.4, loc_freq=0.6, loc_noise=0.06)
    pos = dict(valence_mean=0.5, arousal_mean=0.3, blink_period=90,
               rot_amp=0.02, rot_freq=0.2, rot_noise=0.008)
    neg = dict(valence_mean=-0.1, arousal_mean=-0.3, blink_period=240,
               rot_amp=0.3, rot_freq=0.5, rot_noise=0.05)
    return {
        "focused": LatentState(name="focused", **pos, **still),
        "sleepy_eyes": LatentState(name="sleepy_eyes", **neg, **still),
        "offtask_gaze": LatentState(name="offtask_gaze", **neg, **restless),
        "facepalm": LatentState(name="facepalm", **pos, **restless),
    }


@dataclass
class GeneratorConfig:
    """Knobs of the synthetic dataset generator."""

    level_recipes: list          # per-level {state name: occupancy fraction}
    num_videos: int = 600
    frames_per_video: int = 2400
    fps: float = 24.0
    num_levels: int = 2
    seed: int = 0
    labeling_mode: str = "frequency"     # "frequency" | "order"
    dwell_min: int = 150
    dwell_max: int = 600
    dwell_align: int = 0                 # 0 = unaligned chunk lengths
    occupancy_jitter: float = 0.015      # per-video recipe perturbation (zero-sum)
    noise_scale: float = 1.0             # multiplies every emission sigma
    affect_offset_sigma: float = 0.05    # per-video valence/arousal calibration shift
    frame_dropout: float = 0.0           # fraction of frames marked invalid

    def validate(self, states: dict[str, LatentState]) -> None:
        if self.labeling_mode not in ("frequency", "order"):
            raise ValueError(f"unknown labeling_mode {self.labeling_mode!r}")
        if self.num_levels < 2 or len(self.level_recipes) != self.num_levels:
            raise InfeasibleRecipe(
                f"need one recipe per level ({self.num_levels}), got {len(self.level_recipes)}"
            )
        if self.num_videos < 1 or self.frames_per_video < 1 or self.fps <= 0:
            raise ValueError("num_videos, frames_per_video, fps must be positive")
        if not (3 <= self.dwell_min <= self.dwell_max):
            raise ValueError("need 3 <= dwell_min <= dwell_max")
        if self.dwell_max < 2 * self.dwell_min:
            raise ValueError("dwell_max must be >= 2 * dwell_min")
        if not 0.0 <= self.occupancy_jitter <= 0.025:
            # per-state deviation can reach twice the jitter (zero-sum draws),
            # and the realized occupancy must stay within 5% of the recipe
            raise ValueError("occupancy_jitter must stay within [0, 0.025]")
        if not 0.0 <= self.frame_dropout < 0.5:
            raise ValueError("frame_dropout must stay within [0, 0.5)")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")
        for level, recipe in enumerate(self.level_recipes):
            if not recipe:
                raise InfeasibleRecipe(f"level {level}: empty recipe")
            for name, frac in recipe.items():
                if name not in states:
                    raise InfeasibleRecipe(f"level {level}: unknown state {name!r}")
                if frac < 0:
                    raise InfeasibleRecipe(f"level {level}: negative fraction for {name!r}")
                low = frac - 2.0 * self.occupancy_jitter
                if frac > 0 and low * self.frames_per_video < self.dwell_min:
                    raise InfeasibleRecipe(
                        f"level {level}: state {name!r} can be allotted fewer than "
                        f"dwell_min={self.dwell_min} frames"
                    )
            total = sum(recipe.values())
            if abs(total - 1.0) > 1e-9:
                raise InfeasibleRecipe(f"level {level}: fractions sum to {total}, expected 1")
        if self.dwell_align:
            if self.occupancy_jitter:
                raise ValueError("aligned dwells require occupancy_jitter = 0")
            for bound in (self.dwell_min, self.dwell_max, self.frames_per_video):
                if bound % self.dwell_align:
                    raise ValueError("dwell bounds and frames_per_video must be "
                                     "multiples of dwell_align")
        if self.labeling_mode == "order":
            if self.num_levels != 2:
                raise InfeasibleRecipe("order mode is a binary construction")
            if self.level_recipes[0] != self.level_recipes[1]:
                raise InfeasibleRecipe("order mode requires identical recipes per level")
            if not self.dwell_align:
                raise ValueError("order mode requires dwell_align > 0")
            if self.num_videos % 2:
                raise ValueError("order mode requires an even num_videos")

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")

    @classmethod
    def from_json(cls, path) -> "GeneratorConfig":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**payload)


# -- preset configurations -----------------------------------------------------

def default_frequency_config(num_videos: int = 600, frames_per_video: int = 2400,
                             seed: int = 0) -> GeneratorConfig:
    """Binary multi-state dataset whose levels differ only in the
    affect-by-motion pairing of state frequencies (level 1 = engaged-style)."""
    return GeneratorConfig(
        level_recipes=[
            {"focused": 0.10, "sleepy_eyes": 0.40, "offtask_gaze": 0.10, "facepalm": 0.40},
            {"focused": 0.40, "sleepy_eyes": 0.10, "offtask_gaze": 0.40, "facepalm": 0.10},
        ],
        num_videos=num_videos,
        frames_per_video=frames_per_video,
        seed=seed,
    )


def order_probe_config(num_videos: int = 500, frames_per_video: int = 2400,
                       seed: int = 0) -> GeneratorConfig:
    """Order-labeled probe: identical state multisets, labels set by arrangement."""
    recipe = {"focused": 0.5, "sleepy_eyes": 0.5}
    return GeneratorConfig(
        level_recipes=[dict(recipe), dict(recipe)],
        num_videos=num_videos if num_videos % 2 == 0 else num_videos + 1,
        frames_per_video=frames_per_video,
        labeling_mode="order",
        dwell_min=200,
        dwell_max=600,
        dwell_align=200,
        occupancy_jitter=0.0,
        seed=seed,
    )


def single_state_config(num_videos: int = 200, frames_per_video: int = 2400,
                        seed: int = 0) -> GeneratorConfig:
    """Control dataset with one latent state per video."""
    return GeneratorConfig(
        level_recipes=[{"sleepy_eyes": 1.0}, {"focused": 1.0}],
        num_videos=num_videos,
        frames_per_video=frames_per_video,
        occupancy_jitter=0.0,
        seed=seed,
    )


def graded_levels_config(num_levels: int = 4, num_videos: int = 120,
                         frames_per_video: int = 2400, seed: int = 0) -> GeneratorConfig:
    """Multi-level dataset: recipes interpolate between two state profiles."""
    lo = {"focused": 0.10, "sleepy_eyes": 0.40, "offtask_gaze": 0.10, "facepalm": 0.40}
    hi = {"focused": 0.40, "sleepy_eyes": 0.10, "offtask_gaze": 0.40, "facepalm": 0.10}
    recipes = []
    for k in range(num_levels):
        r = k / (num_levels - 1)
        recipes.append({name: (1 - r) * lo[name] + r * hi[name] for name in lo})
    return GeneratorConfig(
        level_recipes=recipes,
        num_videos=num_videos,
        frames_per_video=frames_per_video,
        num_levels=num_levels,
        dwell_min=60,
        dwell_max=240,
        seed=seed,
    )


PRESETS = {
    "frequency": default_frequency_config,
    "order": order_probe_config,
    "single-state": single_state_config,
    "levels4": graded_levels_config,
}


# -- chunk scheduling ------------------------------------------------------------

@dataclass
class _Chunk:
    state: str
    length: int
    phase: float
    blink_offset: int


def _frame_targets(recipe: dict, frames: int, unit: int, jitter: float, rng) -> dict:
    """Exact per-state frame allocations (multiples of ``unit``) summing to ``frames``."""
    names = sorted(recipe)
    fracs = np.array([recipe[n] for n in names], dtype=np.float64)
    if jitter > 0:
        # zero-sum perturbation: keeps the total at 1 without renormalization,
        # bounding each state's deviation by < 2 * jitter
        noise = rng.uniform(-jitter, jitter, fracs.size)
        fracs = np.maximum(fracs + noise - noise.mean(), 0.0)
        fracs /= fracs.sum()
    slots = frames // unit
    raw = fracs * slots
    base = np.floor(raw).astype(np.int64)
    remainder = raw - base
    for idx in np.argsort(-remainder, kind="stable")[: slots - base.sum()]:
        base[idx] += 1
    return {name: int(cnt) * unit for name, cnt in zip(names, base)}


def _split_chunks(total: int, dmin: int, dmax: int, unit: int, rng) -> list[int]:
    """Split ``total`` frames into dwell lengths within [dmin, dmax]."""
    if 0 < total < dmin:
        raise InfeasibleRecipe(f"allocation {total} frames < dwell_min {dmin}")
    out = []
    rem = total
    lo, hi = dmin // unit, dmax // unit
    while rem > 0:
        if rem <= dmax:
            c = rem
        else:
            c = unit * int(rng.integers(lo, hi + 1))
            if rem - c < dmin:
                c = rem - dmin
        out.append(c)
        rem -= c
    return out


def _build_chunks(cfg: GeneratorConfig, states: dict, level: int, rng) -> list[_Chunk]:
    unit = cfg.dwell_align if cfg.dwell_align else 1
    jitter = cfg.occupancy_jitter if cfg.labeling_mode == "frequency" else 0.0
    targets = _frame_targets(cfg.level_recipes[level], cfg.frames_per_video, unit, jitter, rng)
    chunks = []
    for name in sorted(targets):
        total = targets[name]
        if total == 0:
            continue
        for length in _split_chunks(total, cfg.dwell_min, cfg.dwell_max, unit, rng):
            chunks.append(_Chunk(
                state=name,
                length=length,
                phase=float(rng.uniform(0.0, 2.0 * math.pi)),
                blink_offset=int(rng.integers(states[name].blink_period)),
            ))
    if cfg.labeling_mode == "frequency":
        order = rng.permutation(len(chunks))
        chunks = [chunks[i] for i in order]
    elif level == 1:
        # reverse the state-block order, keeping within-state order
        names = sorted(targets, reverse=True)
        chunks = [c for name in names for c in chunks if c.state == name]
    return chunks


def _audit_occupancy(cfg: GeneratorConfig, level: int, chunks: list[_Chunk]) -> None:
    realized = {}
    for c in chunks:
        realized[c.state] = realized.get(c.state, 0) + c.length
    for name, frac in cfg.level_recipes[level].items():
        got = realized.get(name, 0) / cfg.frames_per_video
        if abs(got - frac) > 0.05 + 1e-9:
            raise InfeasibleRecipe(
                f"level {level}: realized occupancy {got:.3f} of {name!r} "
                f"deviates from recipe {frac:.3f} by more than 5%"
            )


# -- emission ----------------------------------------------------------------------

def _emit_chunk(state: LatentState, chunk: _Chunk, cfg: GeneratorConfig,
                affect_offset: np.ndarray, rng) -> np.ndarray:
    n = chunk.length
    out = np.empty((n, len(CHANNELS)), dtype=np.float64)
    scale = cfg.noise_scale

    def noise(sigma, shape):
        if sigma * scale > 0:
            return sigma * scale * rng.standard_normal(shape)
        return np.zeros(shape)

    out[:, 0] = np.clip(state.valence_mean + affect_offset[0] + noise(state.affect_noise, n),
                        -1.0, 1.0)
    out[:, 1] = np.clip(state.arousal_mean + affect_offset[1] + noise(state.affect_noise, n),
                        -1.0, 1.0)

    au = AU45_BASELINE + noise(AU45_NOISE, n)
    pulse_pos = (np.arange(n) + chunk.blink_offset) % state.blink_period
    for offset, frac in ((0, 0.6), (1, 1.0), (2, 0.6)):
        au[pulse_pos == offset] += BLINK_PULSE_AMP * frac
    out[:, 2] = np.clip(au, 0.0, None)

    t = np.arange(n, dtype=np.float64)[:, None]
    positional = np.empty((n, len(_CHANNEL_SCALE)))
    for idx, amp, freq, sigma in (
        (_LOC_IDX, state.loc_amp, state.loc_freq, state.loc_noise),
        (_ROT_IDX, state.rot_amp, state.rot_freq, state.rot_noise),
    ):
        arg = 2.0 * math.pi * freq * t / cfg.fps + chunk.phase + _CHANNEL_PHASE[idx]
        positional[:, idx] = (_CHANNEL_BASE[idx] + amp * _CHANNEL_SCALE[idx] * np.sin(arg)
                              + noise(sigma, (n, idx.size)) * _CHANNEL_SCALE[idx])
    out[:, 3:] = positional
    return out


def generate_track(cfg: GeneratorConfig, index: int,
                   states: dict[str, LatentState] | None = None):
    """Generate video ``index``: returns ``(FeatureTrack, level)``."""
    states = states or default_states()
    level = index % cfg.num_levels
    pair = index // 2 if cfg.labeling_mode == "order" else index
    rng_struct = np.random.default_rng(np.random.SeedSequence([cfg.seed, pair, 0]))
    rng_noise = np.random.default_rng(np.random.SeedSequence([cfg.seed, index, 1]))

    if cfg.affect_offset_sigma > 0:
        affect_offset = cfg.affect_offset_sigma * rng_struct.standard_normal(2)
    else:
        affect_offset = np.zeros(2)
    chunks = _build_chunks(cfg, states, level, rng_struct)
    _audit_occupancy(cfg, level, chunks)

    blocks = [_emit_chunk(states[c.state], c, cfg, affect_offset, rng_noise) for c in chunks]
    channels = np.concatenate(blocks, axis=0)
    valid = np.ones(cfg.frames_per_video, dtype=bool)
    if cfg.frame_dropout > 0:
        dropped = rng_noise.random(cfg.frames_per_video) < cfg.frame_dropout
        if dropped.all():
            dropped[0] = False
        channels[dropped] = 0.0
        valid[dropped] = False
    track = FeatureTrack(
        video_id=f"video_{index:04d}",
        fps=cfg.fps,
        frame_index=np.arange(cfg.frames_per_video, dtype=np.int64),
        channels=channels,
        valid=valid,
    )
    return track, level


def _split_for(position_in_level: int) -> str:
    r = position_in_level % 5
    if r < 3:
        return "train"
    return "validation" if r == 3 else "test"


def generate_dataset(cfg: GeneratorConfig,
                     states: dict[str, LatentState] | None = None):
    """Generate the full dataset: ``(tracks, manifest)``.

    Levels rotate across video indices and splits are assigned 60/20/20
    stratified by level; both are deterministic in the config seed.
    """
    states = states or default_states()
    cfg.validate(states)
    tracks = []
    entries = []
    per_level_count = {}
    for index in range(cfg.num_videos):
        track, level = generate_track(cfg, index, states)
        pos = per_level_count.get(level, 0)
        per_level_count[level] = pos + 1
        tracks.append(track)
        entries.append(ManifestEntry(
            video_id=track.video_id,
            track_path=f"tracks/{track.video_id}.csv",
            label=level,
            split=_split_for(pos),
        ))
    return tracks, DatasetManifest(entries=entries, num_levels=cfg.num_levels)
