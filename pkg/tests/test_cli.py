import json
import subprocess
import sys

import numpy as np
import pytest

from spain.audio_io import AudioSignal, read_wav, write_wav
from spain.cli import main
from spain.evaluation import GapSpec, records_from_csv, snr


@pytest.fixture
def sine_wav(tmp_path):
    fs = 16000
    t = np.arange(3 * fs) / fs
    x = (0.5 * np.sin(2 * np.pi * 437.5 * t) + 0.3 * np.sin(2 * np.pi * 703.125 * t + 1)
         + 0.2 * np.sin(2 * np.pi * 1093.75 * t + 2))
    path = tmp_path / "sine.wav"
    write_wav(path, AudioSignal(x, fs))
    return path, x


def test_degrade_masks_expected_sample_count(tmp_path, sine_wav):
    src, _ = sine_wav
    out, gaps = tmp_path / "d.wav", tmp_path / "d.gaps"
    assert main(["degrade", str(src), str(out), str(gaps), "--gap-ms", "50", "--seed", "4"]) == 0
    spec = GapSpec.from_text(gaps.read_text())
    assert len(spec) == 6 and sum(n for _, n in spec) == round(6 * 0.05 * 16000)
    prov = json.loads((tmp_path / "d.wav.provenance.json").read_text())
    assert prov["flags"]["gap_ms"] == 50 and prov["masked_samples"] == 4800
    y = read_wav(out).samples
    for s, n in spec:
        assert np.all(y[s:s + n] == 0)


def test_degrade_is_deterministic(tmp_path, sine_wav):
    src, _ = sine_wav
    outs = []
    for i in range(2):
        out, gaps = tmp_path / f"{i}.wav", tmp_path / f"{i}.gaps"
        main(["degrade", str(src), str(out), str(gaps), "--gap-ms", "10", "--seed", "7"])
        outs.append((out.read_bytes(), gaps.read_text()))
    assert outs[0] == outs[1]


def test_degrade_count_zero_copies_input(tmp_path, sine_wav):
    src, _ = sine_wav
    out, gaps = tmp_path / "c.wav", tmp_path / "c.gaps"
    assert main(["degrade", str(src), str(out), str(gaps), "--gap-ms", "10", "--count", "0"]) == 0
    assert out.read_bytes() == src.read_bytes()
    assert gaps.read_text() == ""


def test_empty_gap_file_returns_input(tmp_path, sine_wav):
    src, _ = sine_wav
    gaps = tmp_path / "none.gaps"
    gaps.write_text("")
    out = tmp_path / "r.wav"
    assert main(["inpaint", str(src), str(gaps), str(out)]) == 0
    assert out.read_bytes() == src.read_bytes()


def test_aspain_pipeline_on_sinusoids(tmp_path, sine_wav):
    src, x = sine_wav
    deg, gaps, out = tmp_path / "d.wav", tmp_path / "d.gaps", tmp_path / "r.wav"
    assert main(["degrade", str(src), str(deg), str(gaps), "--gap-ms", "5", "--seed", "1"]) == 0
    assert main(["inpaint", str(deg), str(gaps), str(out), "--algo", "aspain"]) == 0
    restored = read_wav(out).samples
    ref = x.astype(np.float32).astype(float)
    for s, n in GapSpec.from_text(gaps.read_text()):
        assert snr(ref[s:s + n], restored[s:s + n]) > 40
    prov = json.loads((tmp_path / "r.wav.provenance.json").read_text())
    for flag in ("algo", "win_ms", "hop_ms", "redundancy", "s", "r", "epsilon"):
        assert flag in prov["flags"]
    assert prov["frame"]["window_length"] == 1024


def test_bench_rows_and_summary(tmp_path, sine_wav, capsys):
    src, _ = sine_wav
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "sine.wav").write_bytes(src.read_bytes())
    csv_path = tmp_path / "out.csv"
    args = ["bench", str(corpus), str(csv_path), "--algos", "aspain", "--gap-lengths", "5",
            "--spacing", "2000", "--draws", "200"]
    assert main(args) == 0
    text = csv_path.read_text()
    assert len(text.splitlines()) == 7
    table = capsys.readouterr().out
    records = records_from_csv(text)
    mean = np.mean([r.snr_db for r in records])
    assert f"{mean:.3f}" in table
    assert main(args) == 0
    assert csv_path.read_text() == text


def test_make_corpus(tmp_path):
    assert main(["make-corpus", str(tmp_path / "c"), "--seconds", "0.5"]) == 0
    files = sorted(p.name for p in (tmp_path / "c").glob("*.wav"))
    assert files == ["band.wav", "bowed.wav", "plucked.wav"]


def test_usage_errors_exit_1(tmp_path, sine_wav, capsys):
    src, _ = sine_wav
    gaps = tmp_path / "g"
    gaps.write_text("")
    with pytest.raises(SystemExit) as exc:
        main(["inpaint", str(src), str(gaps), str(tmp_path / "o.wav"), "--algo", "magic"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["degrade", str(src), "o.wav", "o.gaps", "--gap-ms", "-3"])
    assert exc.value.code == 1
    # invalid frame geometry is caught before any file is touched
    assert main(["inpaint", "nowhere.wav", "nowhere.gaps", str(tmp_path / "o.wav"),
                 "--win-ms", "1", "--hop-ms", "64"]) == 1


def test_io_errors_exit_2(tmp_path, sine_wav):
    src, _ = sine_wav
    assert main(["inpaint", str(src), str(tmp_path / "missing.gaps"), str(tmp_path / "o.wav")]) == 2
    gaps = tmp_path / "g"
    gaps.write_text("")
    assert main(["inpaint", str(tmp_path / "missing.wav"), str(gaps), str(tmp_path / "o.wav")]) == 2
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["bench", str(empty), str(tmp_path / "o.csv")]) == 2
    gaps.write_text("nonsense\n")
    assert main(["inpaint", str(src), str(gaps), str(tmp_path / "o.wav")]) == 2


def test_infeasible_degradation_exit_3(tmp_path, sine_wav):
    src, _ = sine_wav
    code = main(["degrade", str(src), str(tmp_path / "o.wav"), str(tmp_path / "o.gaps"),
                 "--gap-ms", "50", "--count", "40"])
    assert code == 3


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "spain.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "spain" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "spain.cli"], capture_output=True, text=True)
    assert proc.returncode == 1
