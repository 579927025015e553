"""Deterministic synthetic music-like clips used as a test corpus.

Three textures of decreasing time-frequency sparsity: a plucked melody over
sustained chords, a bowed ensemble with vibrato, and a band mix with
percussion.  Every clip is a pure function of its seed.
"""

from __future__ import annotations

import numpy as np

SAMPLE_RATE = 44100
CLIP_SECONDS = 10.0
STYLES = ("plucked", "bowed", "band")


def _midi_hz(note: float) -> float:
    return 440.0 * 2.0 ** ((note - 69) / 12.0)


def _tone(f0: float, duration: float, fs: int, rng, n_partials: int = 8,
          decay: float = 3.0, brightness: float = 1.0, vibrato: float = 0.0,
          attack: float = 0.01) -> np.ndarray:
    n = int(duration * fs)
    t = np.arange(n) / fs
    phase_mod = 0.0
    if vibrato:
        rate = rng.uniform(4.5, 6.0)
        phase_mod = vibrato / rate * np.sin(2 * np.pi * rate * t)
    out = np.zeros(n)
    for h in range(1, n_partials + 1):
        fh = f0 * h * (1.0 + 0.0004 * h * h)  # slight inharmonicity
        if fh > 0.45 * fs:
            break
        amp = h ** (-1.0 / brightness) * rng.uniform(0.6, 1.0)
        env = np.exp(-decay * h ** 0.5 * t)
        out += amp * env * np.sin(2 * np.pi * fh * (t + phase_mod) + rng.uniform(0, 2 * np.pi))
    ramp = min(n, max(1, int(attack * fs)))
    out[:ramp] *= np.linspace(0.0, 1.0, ramp)
    release = min(n, int(0.02 * fs))
    out[n - release:] *= np.linspace(1.0, 0.0, release)
    return out


def _place(track: np.ndarray, note: np.ndarray, start: int, gain: float):
    end = min(len(track), start + len(note))
    if end > start:
        track[start:end] += gain * note[:end - start]


def _progression(rng, bars: int):
    roots = [48, 53, 55, 50, 45, 52]
    return [int(rng.choice(roots)) for _ in range(bars)]


def make_clip(style: str, seed: int = 0, seconds: float = CLIP_SECONDS,
              fs: int = SAMPLE_RATE) -> np.ndarray:
    """Render one clip, peak-normalised to 0.8."""
    if style not in STYLES:
        raise ValueError(f"unknown style {style!r}")
    rng = np.random.default_rng([seed, STYLES.index(style)])
    n = int(seconds * fs)
    out = np.zeros(n)
    tempo = {"plucked": 0.25, "bowed": 0.5, "band": 0.2}[style]
    bar = 8 * tempo
    scale = np.array([0, 2, 4, 5, 7, 9, 11, 12])
    chords = _progression(rng, int(seconds / bar) + 1)

    for b, root in enumerate(chords):
        start = int(b * bar * fs)
        for interval in (0, 4, 7):
            if style == "band" and interval == 4:
                interval = 3
            note = _tone(_midi_hz(root + interval), bar, fs, rng,
                         n_partials=6, decay=0.4 if style != "plucked" else 0.8,
                         brightness=0.7, vibrato=0.003 if style == "bowed" else 0.0,
                         attack=0.08 if style == "bowed" else 0.01)
            _place(out, note, start, 0.25)

    t = 0.0
    while t < seconds:
        dur = tempo * rng.choice([1, 1, 2, 0.5]) if style != "bowed" else tempo * rng.choice([1, 2, 3])
        root = chords[min(int(t / bar), len(chords) - 1)]
        pitch = root + 12 + scale[rng.integers(len(scale))]
        note = _tone(_midi_hz(pitch), dur * 1.5, fs, rng,
                     n_partials=10 if style != "bowed" else 12,
                     decay={"plucked": 4.0, "bowed": 0.3, "band": 2.0}[style],
                     brightness=1.2, vibrato=0.006 if style == "bowed" else 0.0,
                     attack=0.05 if style == "bowed" else 0.004)
        _place(out, note, int(t * fs), 0.5)
        t += dur

    if style == "band":
        beat = 0
        while beat * tempo < seconds:
            start = int(beat * tempo * fs)
            length = int(0.08 * fs)
            tt = np.arange(length) / fs
            if beat % 4 == 0:
                hit = np.sin(2 * np.pi * 60 * tt * (1 - 0.5 * tt / tt[-1])) * np.exp(-30 * tt)
                gain = 0.6
            else:
                hit = rng.standard_normal(length) * np.exp(-60 * tt)
                gain = 0.15
            _place(out, hit, start, gain)
            beat += 1

    out += 1e-4 * rng.standard_normal(n)
    return 0.8 * out / np.max(np.abs(out))


def default_corpus(seconds: float = CLIP_SECONDS, fs: int = SAMPLE_RATE, seed: int = 0):
    """The three clips as ``(signal_id, samples, sample_rate)`` tuples."""
    return [(style, make_clip(style, seed, seconds, fs), fs) for style in STYLES]
