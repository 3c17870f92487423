#!/usr/bin/env python3
"""Run the full command pipeline over every bundled fixture and print a
verdict table.  Exit code is nonzero when any fixture deviates from its
documented verdict."""

import pathlib
import sys
import tempfile

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from lcm_dilate.cli import parse_instance, run_command  # noqa: E402

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"

# (fixture, command, expected exit code)
PLAN = [
    ("sznagy_half.json", "validate", 0),
    ("sznagy_half.json", "check-cp", 0),
    ("sznagy_half.json", "check-nica", 0),
    ("sznagy_half.json", "dilate", 0),
    ("cuntz_m2.json", "validate", 0),
    ("cuntz_m2.json", "check-cp", 0),
    ("cuntz_m2.json", "dilate", 0),
    ("commuting_unitaries.json", "dilate", 0),
    ("transpose_m2.json", "check-cp", 1),
    ("transpose_m2.json", "dilate", 1),
    ("nica_nilpotent.json", "check-nica", 1),
    ("nica_nilpotent.json", "dilate", 1),
    ("uhf_stage_m2.json", "validate", 1),
]


def main() -> int:
    bad = 0
    tmp = tempfile.mkdtemp(prefix="lcm-dilate-")
    for name, command, expected in PLAN:
        instance = parse_instance(str(FIXTURES / name))
        flags = {"depth": None, "max_dim": None, "result": None, "max_f": None,
                 "output": f"{tmp}/{name}.{command}.result.json"}
        report = run_command(command, instance, flags)
        got = report["exit_code"]
        ok = got == expected
        bad += 0 if ok else 1
        extra = ""
        if command == "dilate" and got == 0:
            extra = f"rank {report['extra']['rank']}/{report['extra']['space_size']}"
        print(f"{'ok ' if ok else 'BAD'}  {name:28s} {command:11s} "
              f"exit {got} (want {expected})  {extra}")
    print(f"\n{len(PLAN) - bad}/{len(PLAN)} fixture verdicts reproduced")
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
