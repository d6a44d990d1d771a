"""Regenerate the golden CSV fixtures from the primary pipelines.

Run from the repository root:  python3 frontend/tests/fixtures/generate.py
"""

import shutil
import sys
import tempfile
from pathlib import Path

from wienerlab.cli import parse_config, run

HERE = Path(__file__).parent

BALL = """
[run]
scenario = full-ball-complement
ball_radius = 0.5
h = 0.05
extent = -1.0 1.0
[capacity]
r0 = 0.2
levels = 6
s = p
"""

SCALING = """
[run]
scenario = flat-halfspace
h = 0.05
extent = -1.0 1.0
[capacity]
r0 = 0.4
levels = 5
s = p
"""

DECAY = """
[run]
scenario = flat-halfspace
h = 0.0125
extent = -0.4 0.4
[phase]
shape = zero
[datum]
shape = boundary-distance
amplitude = 1.8
cap = 0.5
[solve]
t_final = 0.05
max_snapshots = 400
[capacity]
r0 = 0.15
levels = 4
s = p
[verifiers]
decay = on
c_p = 1.25
c_q = 1.25
"""

FLAT = DECAY.replace("""[datum]
shape = boundary-distance
amplitude = 1.8
cap = 0.5""", """[datum]
shape = constant
amplitude = 0.4""")


def main():
    jobs = (("capacity_ball.csv", BALL, "capacity.csv"),
            ("capacity_scaling.csv", SCALING, "capacity.csv"),
            ("trace_decay.csv", DECAY, "trace.csv"),
            ("trace_flat.csv", FLAT, "trace.csv"))
    for target, cfg, source in jobs:
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "out"
            code = run(parse_config(cfg, is_text=True), out_dir=out)
            if code != 0:
                sys.exit(f"pipeline for {target} exited {code}")
            shutil.copyfile(out / source, HERE / target)
            print(f"wrote {target}")


if __name__ == "__main__":
    main()
