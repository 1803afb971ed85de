"""Stand-in external classifier for tests.

Answers every burst of requests in reverse order, so the client has to
match responses by id.  ``--crash`` exits on the first request and
``--garbage`` replies with a malformed line.
"""

import os
import select
import sys

from shuttletrack.classify import decode_request, encode_response, heuristic_backend


def main() -> None:
    mode = sys.argv[1] if len(sys.argv) > 1 else ""
    buf = b""
    while True:
        chunk = os.read(0, 1 << 16)
        if not chunk:
            return
        buf += chunk
        # drain whatever else arrives right behind this chunk
        while select.select([0], [], [], 0.05)[0]:
            more = os.read(0, 1 << 16)
            if not more:
                break
            buf += more
        *lines, buf = buf.split(b"\n")
        if not lines:
            continue
        if mode == "--crash":
            return
        out = []
        for line in reversed(lines):
            rid, stack = decode_request(line.decode())
            label, conf, feat = heuristic_backend(stack)
            out.append("not json" if mode == "--garbage" else encode_response(rid, label, conf, feat))
        sys.stdout.write("\n".join(out) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
