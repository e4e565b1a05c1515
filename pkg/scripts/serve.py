#!/usr/bin/env python3
"""Launch the simulation session service.

Example:
    python3 scripts/serve.py --port 8000
Then point the web UI (frontend/) or curl at http://127.0.0.1:8000.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ttl", type=float, default=1800.0,
                   help="idle session expiry in seconds (default 1800)")
    args = p.parse_args(argv)

    import uvicorn

    from hetsim.service import SessionManager, create_app

    app = create_app(SessionManager(ttl_seconds=args.ttl))
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
