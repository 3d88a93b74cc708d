import csv
import math

import numpy as np
import pytest

from pcsi import framing as fr
from pcsi.cli import main
from pcsi.image_model import quantized_reference
from pcsi.io import load_image, read_stream, save_image, write_stream
from pcsi.reconstruction import psnr
from pcsi.samples import test_pattern


@pytest.fixture
def image_file(tmp_path, pattern64):
    path = tmp_path / "in.ppm"
    save_image(path, pattern64)
    return path


def test_encode_default_packet_count(tmp_path, capsys):
    src = tmp_path / "sstv.ppm"
    save_image(src, test_pattern(240, 320))
    assert main(["encode", "-i", str(src), "-o", str(tmp_path / "s.bin")]) == 0
    records, _ = read_stream(tmp_path / "s.bin")
    assert len(records) == math.ceil(76800 / 332)
    assert "83 colour + 249 grey" in capsys.readouterr().out
    assert all(len(r) == 276 for r in records)


def test_encode_single_packet(tmp_path, image_file):
    out = tmp_path / "s.hex"
    assert main(["encode", "-i", str(image_file), "-o", str(out), "--packets", "1"]) == 0
    assert len(read_stream(out)[0]) == 1


@pytest.mark.parametrize("framing,ext,extra", [
    ("ax25", ".bin", []),
    ("ssdv", ".hex", ["--callsign", "n0call"]),
    ("raw", ".b91", ["--base91"]),
    ("ax25", ".kiss", []),
    ("ssdv", ".kiss", []),
])
def test_encode_decode_no_channel(tmp_path, image_file, pattern64, framing, ext, extra):
    stream = tmp_path / f"s{ext}"
    assert main(["encode", "-i", str(image_file), "-o", str(stream),
                 "--framing", framing, *extra]) == 0
    out = tmp_path / "out.ppm"
    assert main(["decode", "--in", str(stream), "-o", str(out)]) == 0
    ref = quantized_reference(pattern64, 4)
    assert psnr(load_image(out), ref) >= 20


def test_encode_rejects_bad_dims(tmp_path):
    src = tmp_path / "odd.ppm"
    src.write_bytes(b"P6\n20 16\n255\n" + bytes(20 * 16 * 3))
    assert main(["encode", "-i", str(src), "-o", str(tmp_path / "s.bin")]) == 1


def test_encode_rejects_oversized_plan(tmp_path, image_file):
    assert main(["encode", "-i", str(image_file), "-o", str(tmp_path / "s.bin"),
                 "--n-color", "100", "--n-grey", "300"]) == 1


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as e:
        main(["encode"])
    assert e.value.code == 1


def test_channel_passthrough(tmp_path, image_file):
    s = tmp_path / "s.bin"
    main(["encode", "-i", str(image_file), "-o", str(s)])
    assert main(["channel", "--in", str(s), "-o", str(tmp_path / "c.bin")]) == 0
    assert (tmp_path / "c.bin").read_bytes() == s.read_bytes()


def test_channel_deterministic(tmp_path, image_file):
    s = tmp_path / "s.bin"
    main(["encode", "-i", str(image_file), "-o", str(s), "--packets", "40"])
    for name in ("a.bin", "b.bin"):
        main(["channel", "--in", str(s), "-o", str(tmp_path / name),
              "--loss", "0.5", "--seed", "7"])
    a = (tmp_path / "a.bin").read_bytes()
    assert a == (tmp_path / "b.bin").read_bytes()
    kept = read_stream(tmp_path / "a.bin")[0]
    assert 0 < len(kept) < 40
    assert set(kept) <= set(read_stream(s)[0])


def test_channel_unreadable(tmp_path):
    assert main(["channel", "--in", str(tmp_path / "none.bin"), "-o",
                 str(tmp_path / "x.bin")]) == 2


def test_channel_crc_failure_rate(tmp_path):
    # 256-byte payload AX.25 frames are 2208 bits long
    pdp = bytes([0, 1, 1, 0, 0, 0, 7]) + bytes(249)
    frame = fr.encode_ax25(fr.Ax25Address("PCSI"), fr.Ax25Address("N0CALL"), [], pdp)
    n = 3000
    write_stream(tmp_path / "s.bin", [frame] * n)
    main(["channel", "--in", str(tmp_path / "s.bin"), "-o", str(tmp_path / "c.bin"),
          "--ber", "1e-3", "--seed", "3"])
    fails = 0
    for rec in read_stream(tmp_path / "c.bin")[0]:
        try:
            fr.decode_ax25(rec)
        except fr.FrameError:
            fails += 1
    p = 1 - (1 - 1e-3) ** 2208
    assert abs(fails / n - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_decode_corrupt_only(tmp_path, image_file, capsys):
    s = tmp_path / "s.bin"
    main(["encode", "-i", str(image_file), "-o", str(s), "--packets", "3"])
    bad = [r[:30] + bytes([r[30] ^ 1]) + r[31:] for r in read_stream(s)[0]]
    write_stream(s, bad)
    assert main(["decode", "--in", str(s), "-o", str(tmp_path / "o.ppm")]) == 2
    out = capsys.readouterr().out
    assert "rejected: 3" in out and "crc=3" in out


def test_decode_mixed_images(tmp_path, pattern64, capsys):
    a, b = tmp_path / "a.ppm", tmp_path / "b.ppm"
    save_image(a, pattern64)
    save_image(b, test_pattern(32, 48))
    main(["encode", "-i", str(a), "-o", str(tmp_path / "a.bin"), "--image-id", "1"])
    main(["encode", "-i", str(b), "-o", str(tmp_path / "b.bin"), "--image-id", "2"])
    ra, rb = read_stream(tmp_path / "a.bin")[0], read_stream(tmp_path / "b.bin")[0]
    mixed = [r for pair in zip(ra, rb) for r in pair]
    write_stream(tmp_path / "m.bin", mixed)
    assert main(["decode", "--in", str(tmp_path / "m.bin"), "-o", str(tmp_path / "o.ppm")]) == 0
    assert load_image(tmp_path / "o_001.ppm").pixels.shape == (64, 64, 3)
    assert load_image(tmp_path / "o_002.ppm").pixels.shape == (32, 48, 3)


def test_decode_partial_stream(tmp_path, image_file):
    s = tmp_path / "s.bin"
    main(["encode", "-i", str(image_file), "-o", str(s), "--pdp-size", "64"])
    records = read_stream(s)[0]
    keep = np.random.default_rng(0).permutation(len(records))[: round(0.536 * len(records))]
    write_stream(s, [records[i] for i in sorted(keep)])
    assert main(["decode", "--in", str(s), "-o", str(tmp_path / "o.ppm")]) == 0
    assert load_image(tmp_path / "o.ppm").pixels.shape == (64, 64, 3)


def test_decode_progressive(tmp_path, image_file):
    s = tmp_path / "s.bin"
    main(["encode", "-i", str(image_file), "-o", str(s)])
    assert main(["decode", "--in", str(s), "-o", str(tmp_path / "o.ppm"),
                 "--progressive", "5"]) == 0
    snaps = sorted(p.name for p in tmp_path.glob("o_000_p*.ppm"))
    assert snaps == ["o_000_p00005.ppm", "o_000_p00010.ppm"]


def test_pipeline_deterministic(tmp_path, image_file):
    outs = []
    for run in ("1", "2"):
        s, c, o = (tmp_path / f"{n}{run}.bin" for n in "sco")
        main(["encode", "-i", str(image_file), "-o", str(s)])
        main(["channel", "--in", str(s), "-o", str(c), "--loss", "0.3",
              "--ber", "1e-4", "--seed", "11"])
        main(["decode", "--in", str(c), "-o", str(tmp_path / f"o{run}.ppm")])
        outs.append((c.read_bytes(), (tmp_path / f"o{run}.ppm").read_bytes()))
    assert outs[0] == outs[1]


def test_analyze(tmp_path, capsys):
    out = tmp_path / "e.csv"
    assert main(["analyze", "--ber", "1e-5", "1e-3", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "1.000e-05     ssdv       256" in text
    assert "1.000e-05     ax25       256" in text
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 249 * 2 * 2
    assert set(rows[0]) == {"framing", "pdp_len", "ber", "efficiency"}


def test_analyze_loss(capsys):
    assert main(["analyze", "--loss", "50", "--framing", "ax25"]) == 0
    first = capsys.readouterr().out.splitlines()[0]
    assert first == "packet loss 50% -> ber 3.1617e-04"


def test_analyze_bad_loss():
    assert main(["analyze", "--loss", "100"]) == 1
