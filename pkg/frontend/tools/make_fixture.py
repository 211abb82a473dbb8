#!/usr/bin/env python3
"""Regenerate the recorded snapshot log used by the replay tests.

Runs the bundled stone-phantom scenario with the fixture enabled and writes
the scene message plus ~30 Hz snapshots, exactly as the session service
would emit them:

    python3 tools/make_fixture.py [out.jsonl]
"""

import json
import sys
from pathlib import Path

from sdfguide.scenario import (build_session, load_bundled_scenario,
                               make_force_script, resolve_volume)
from sdfguide.service import scene_message

DURATION_S = 6.0
SNAPSHOT_EVERY_TICKS = 33


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parent.parent / "test" / "fixtures"
        / "vf_on_snapshots.jsonl")
    scn = load_bundled_scenario("dental_stone_analog")
    scn["duration_s"] = DURATION_S
    _, segments = resolve_volume(scn)
    session = build_session(scn, vf_override=True)
    script = make_force_script(scn["force_script"], scn["dt_s"])

    lines = [json.dumps(scene_message(scn, session, segments),
                        sort_keys=True, separators=(",", ":"))]
    n_ticks = int(round(scn["duration_s"] / scn["dt_s"]))
    for k in range(n_ticks):
        session.step(script.force(k, session.tip_position(), session.rng))
        if (k + 1) % SNAPSHOT_EVERY_TICKS == 0:
            lines.append(json.dumps(session.snapshot(),
                                    sort_keys=True, separators=(",", ":")))
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out} ({len(lines)} lines)")


if __name__ == "__main__":
    main()
