"""WAV reading and writing for mono float signals."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

FORMATS = ("pcm16", "float32")


class WavError(ValueError):
    """Unreadable, malformed or unsupported WAV data."""


@dataclass(frozen=True)
class AudioSignal:
    samples: np.ndarray
    sample_rate: int
    source_format: str | None = None

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1:
            raise ValueError("AudioSignal holds a single channel")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample rate must be positive")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def read_wav(path) -> AudioSignal:
    """Read a PCM16 or float32 WAV file, averaging channels to mono.

    PCM16 values are scaled by 1/32768.
    """
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except (FileNotFoundError, IsADirectoryError, PermissionError):
        raise
    except (ValueError, EOFError) as exc:
        raise WavError(f"{path}: {exc}") from None
    if data.dtype == np.int16:
        x, fmt = data.astype(np.float64) / 32768.0, "pcm16"
    elif data.dtype == np.float32:
        x, fmt = data.astype(np.float64), "float32"
    else:
        raise WavError(f"{path}: unsupported sample format {data.dtype}; "
                       "expected 16-bit PCM or 32-bit float")
    if x.ndim == 2:
        x = x.mean(axis=1) if x.shape[1] else np.zeros(x.shape[0])
    if not np.all(np.isfinite(x)):
        raise WavError(f"{path}: non-finite samples")
    return AudioSignal(x, rate, fmt)


def to_pcm16(samples: np.ndarray) -> np.ndarray:
    """Scale by 32768 and round, saturating at the int16 limits."""
    scaled = np.rint(np.asarray(samples, dtype=float) * 32768.0)
    return np.clip(scaled, -32768, 32767).astype(np.int16)


def write_wav(path, signal: AudioSignal, format: str = "float32") -> None:
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; choose from {FORMATS}")
    x = np.asarray(signal.samples, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    data = to_pcm16(x) if format == "pcm16" else x.astype(np.float32)
    wavfile.write(path, signal.sample_rate, data)


def peak_normalize(samples: np.ndarray, peak: float = 1.0) -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    top = float(np.max(np.abs(x))) if x.size else 0.0
    return x.copy() if top == 0.0 else x * (peak / top)
