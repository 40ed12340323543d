"""Smoke test for the Python bindings.

Builds a tiny model with the command line tool when PUNCTUATE_BIN is set,
otherwise only exercises the model-free functions.
"""

import os
import subprocess
import sys
import tempfile
from pathlib import Path

import punctuate

TIMED = """\
0.00 0.30 A how
0.35 0.25 A are
0.65 0.30 A you
1.60 0.30 B fine
1.95 0.40 B thanks
"""


def main() -> int:
    rows = punctuate.label(TIMED, "How are you? Fine, thanks.")
    assert [r[4] for r in rows] == ["BLANK", "BLANK", "QUESTION", "COMMA", "PERIOD"], rows

    scores = {name: (p, r, f1) for name, p, r, f1, _ in punctuate.score(
        ["PERIOD", "BLANK", "QUESTION", "BLANK"],
        ["PERIOD", "PERIOD", "QUESTION", "BLANK"],
    )}
    p, r, f1 = scores["PERIOD"]
    assert (p, r) == (1.0, 0.5) and abs(f1 - 2 / 3) < 1e-12, scores

    with tempfile.TemporaryDirectory() as tmp:
        sample = Path(tmp) / "sample"
        punctuate.make_sample(str(sample), conversations=10)
        pretrained = sample / "pretrained.txt"
        assert punctuate.similarity(str(pretrained), "okay", "okay") > 0.999999
        print("cancel | cancer", round(punctuate.similarity(str(pretrained), "cancel", "cancer"), 4))

        binary = os.environ.get("PUNCTUATE_BIN")
        if binary:
            conf = sample / "pipeline.conf"
            conf.write_text(conf.read_text().replace("tagger.epochs = 20", "tagger.epochs = 2"))
            for step in ["prepare", "cooc", "retrofit", "train-tagger"]:
                subprocess.run([binary, "--config", str(conf), step], check=True, capture_output=True)
            out = sample / "out" / "model"
            tagger = punctuate.Tagger(str(out / "tagger.ckpt"), str(out / "embeddings.txt"))
            text = tagger.punctuate(TIMED)
            assert len(text.split()) == 5, text
            assert len(tagger.classes(TIMED)) == 5
            print(f"tagger ({tagger.parameters} parameters):", text)

    print("ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
