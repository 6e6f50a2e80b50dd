"""Smoke test for the changedet extension: a bright square moving over a
textured background."""

import json

import changedet

W, H, SIDE = 48, 36, 10


def frame(t):
    x0, y0 = (3 * t) % (W - SIDE), (2 * t) % (H - SIDE)
    out = bytearray()
    truth = bytearray()
    for y in range(H):
        for x in range(W):
            inside = x0 <= x < x0 + SIDE and y0 <= y < y0 + SIDE
            v = 40 + (3 * x + y) % 40
            out += bytes((250, 250, 250)) if inside else bytes((v, v // 2 + 20, 90 - v // 2))
            truth.append(255 if inside else 0)
    return bytes(out), bytes(truth)


def main():
    assert changedet.ltp_compare(100, 120) == 1
    assert changedet.ltp_compare(100, 50) == 2
    assert changedet.ltp_compare(100, 104) == 0
    bv, cv = changedet.brightness_chroma((100, 100, 100), (100, 100, 100))
    assert abs(bv) < 1e-9 and abs(cv) < 1e-9
    assert 0.49 < changedet.posterior(1.0, 1.0, 0.5) < 0.51
    table = changedet.kde_density([0], -20, 20)
    assert abs(sum(table) - 1.0) < 1e-9 and max(table) == table[20]

    speck = bytearray(W * H)
    speck[5 * W + 5] = 1
    assert sum(changedet.post_process(bytes(speck), W, H, 25)) == 0
    assert "samples" in changedet.default_config()

    video = [frame(t) for t in range(1, 131)]
    det = changedet.Detector([f for f, _ in video[:100]], W, H, seed=3)
    masks = [det.process(f) for f, _ in video]
    assert det.frames_processed == 130
    assert not det.in_warmup
    assert len(det.posteriors) == W * H
    diag = json.loads(det.diagnostics)
    assert diag["frame"] == 130

    metrics = changedet.evaluate(masks[100:], [g for _, g in video[100:]], W, H)
    print("F-measure over frames 101-130: %.4f" % metrics["fmeasure"])
    assert metrics["fmeasure"] > 0.8, metrics

    try:
        changedet.Detector([b"\x00" * 5], W, H)
    except ValueError:
        pass
    else:
        raise AssertionError("short frame accepted")
    try:
        changedet.Detector([video[0][0]], W, H, config="bogus_key = 1")
    except ValueError as e:
        assert "bogus_key" in str(e)
    else:
        raise AssertionError("unknown key accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
