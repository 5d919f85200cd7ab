"""Test provider: 16-dim byte-count vectors, rows returned in reverse order.

With --fail it exits nonzero after writing a diagnostic.
"""
import json
import sys

DIM = 16


def main():
    if "--fail" in sys.argv:
        sys.stderr.write("model not available\n")
        sys.exit(3)
    items = [json.loads(line) for line in sys.stdin if line.strip()]
    out = [json.dumps({"dim": DIM, "provider": "bytes-test", "normalized": False})]
    for it in reversed(items):
        v = [1.0] * DIM
        for i, b in enumerate(it["text"].encode()):
            v[i % DIM] += b
        out.append(json.dumps({"id": it["id"], "v": v}))
    sys.stdout.write("\n".join(out) + "\n")


if __name__ == "__main__":
    main()
