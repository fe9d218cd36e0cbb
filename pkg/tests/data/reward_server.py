"""Line-delimited JSON reward server used by the external-client tests.

Reads {"id": int, "text": str} requests from stdin and writes one reply per
line. The single argv mode selects a behavior:

  count_a    reward = number of "a" characters in the text
  shuffle    buffer three requests, then reply to them in reverse order
  invalid    mark every item invalid (reward field must be ignored)
  malformed  reply with a line that is not JSON
  badid      reply with an id the client never issued
  silent     consume requests and never reply
  die        exit immediately without reading anything
"""

import json
import sys


def reply(request, **overrides):
    body = {"id": request["id"], "reward": float(request["text"].count("a")), "valid": True}
    body.update(overrides)
    sys.stdout.write(json.dumps(body) + "\n")
    sys.stdout.flush()


def main():
    mode = sys.argv[1] if len(sys.argv) > 1 else "count_a"
    if mode == "die":
        return
    buffered = []
    for line in sys.stdin:
        request = json.loads(line)
        if mode == "count_a":
            reply(request)
        elif mode == "shuffle":
            buffered.append(request)
            if len(buffered) == 3:
                for held in reversed(buffered):
                    reply(held)
                buffered = []
        elif mode == "invalid":
            reply(request, reward=123.0, valid=False)
        elif mode == "malformed":
            sys.stdout.write("!!not-json!!\n")
            sys.stdout.flush()
        elif mode == "badid":
            reply(request, id=request["id"] + 999)
        elif mode == "silent":
            pass
        else:
            raise SystemExit(f"unknown mode {mode}")


if __name__ == "__main__":
    main()
