"""Minimale externe Policy fuer Protokolltests.

Liest Beobachtungen zeilenweise von stdin und antwortet auf stdout. Die
Modi bilden die Fehlerfaelle des Harness ab:

    greedy      volle Geschwindigkeit Richtung Ziel (Standard)
    constant    immer (--vx, --vy)
    garbage     antwortet mit Text statt JSON
    slow        antwortet erst nach --delay Sekunden
    exit        beendet sich nach dem Handshake
    refuse      lehnt den Handshake ab
"""

import argparse
import json
import math
import sys
import time


def emit(obj) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def greedy(obs: dict) -> dict:
    robot = obs["robot"]
    dx, dy = robot["gx"] - robot["px"], robot["gy"] - robot["py"]
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        return {"vx": 0.0, "vy": 0.0}
    return {"vx": robot["vmax"] * dx / dist, "vy": robot["vmax"] * dy / dist}


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument(
        "--mode", choices=["greedy", "constant", "garbage", "slow", "exit", "refuse"], default="greedy"
    )
    parser.add_argument("--vx", type=float, default=0.3)
    parser.add_argument("--vy", type=float, default=-0.4)
    parser.add_argument("--delay", type=float, default=2.0)
    args = parser.parse_args()

    handshake = sys.stdin.readline()
    if not handshake:
        return 1
    if args.mode == "refuse":
        emit({"ok": False, "error": "unsupported"})
        return 0
    emit({"ok": True})
    if args.mode == "exit":
        return 0

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        obs = json.loads(line)
        if args.mode == "garbage":
            sys.stdout.write("not json at all\n")
            sys.stdout.flush()
        elif args.mode == "slow":
            time.sleep(args.delay)
            emit(greedy(obs))
        elif args.mode == "constant":
            emit({"vx": args.vx, "vy": args.vy})
        else:
            emit(greedy(obs))
    return 0


if __name__ == "__main__":
    sys.exit(main())
