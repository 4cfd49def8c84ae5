"""
Regenerate fixtures/*.json from the corpus definitions.

    python scripts/build_fixtures.py [--out fixtures] [--check]

With --check nothing is written; the exit code is 1 when a committed fixture
differs from what would be generated.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from app.corpus import KNOWN_PAIRS, known_pair, reflexive_polygons, search_mirrors, stacked_pair  # noqa: E402

logger = logging.getLogger("build_fixtures")


def _nabla_entry(pair) -> dict:
    return pair.to_json()


def fixtures() -> dict:
    out = {name: _nabla_entry(known_pair(name)) for name in KNOWN_PAIRS}

    bn51 = known_pair("bn51")
    out["bn51-delta"] = {
        "rank": 2,
        "delta1": [p.to_json() for p in bn51.delta1.parts],
        "delta2": [p.to_json() for p in bn51.delta2.parts],
    }
    out["stacked-2x"] = _nabla_entry(stacked_pair())
    out["degenerate-singleton"] = {"rank": 1, "delta1": [[[0]]], "translations": [[0]]}
    out["segment-r2"] = {"rank": 2, "delta1": [[[0, 0], [0, 1]]], "translations": [[0, 0]]}
    out["square"] = {"rank": 2, "nabla": [reflexive_polygons()["diamond-dual"].to_json()]}
    out["bn51-triangle"] = {"rank": 2, "polytope": reflexive_polygons()["triangle"].to_json(), "parts": 2}
    return out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "fixtures"))
    parser.add_argument("--check", action="store_true")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    triangle = reflexive_polygons()["triangle"]
    logger.info("mirror search on the triangle: %d tuple(s)", len(search_mirrors(triangle, 2)))

    out = Path(args.out)
    stale = []
    for name, data in fixtures().items():
        path = out / f"{name}.json"
        if args.check:
            if not path.exists() or json.loads(path.read_text()) != data:
                stale.append(name)
            continue
        path.write_text(json.dumps(data, indent=2) + "\n")
        logger.info("wrote %s", path)

    if stale:
        logger.error("stale fixtures: %s", ", ".join(stale))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
