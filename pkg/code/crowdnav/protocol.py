"""NDJSON-Protokoll fuer Roboter-Policies in einem Kindprozess.

Der Harness schreibt pro Schritt eine Anfragezeile auf stdin des Kindprozesses
und wartet auf genau eine Antwortzeile auf dessen stdout. Der erste Austausch
ist ein Handshake:

    harness -> {"proto": 1, "dt": 0.25, "time_limit": 30.0}
    policy  -> {"ok": true}
    harness -> {"t": ..., "robot": {...}, "humans": [{"px", "py", "rho"}, ...]}
    policy  -> {"vx": ..., "vy": ...}

Antworten liest ein Hintergrund-Thread, damit der Timeout pro Nachricht auf
jeder Plattform gleich funktioniert.
"""

from __future__ import annotations

import json
import logging
import math
import queue
import shlex
import subprocess
import threading
from typing import Any, Dict, List, Optional, Sequence, Union

from .sim import Action, Observation

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT = 1.0

_EOF = object()


class ExternalPolicyFailure(RuntimeError):
    """Timeout, fehlerhafte Antwort oder Ende des externen Policy-Prozesses."""


def encode_observation(obs: Observation) -> Dict[str, Any]:
    r = obs.robot
    return {
        "t": obs.time,
        "robot": {
            "px": r.px, "py": r.py, "vx": r.vx, "vy": r.vy,
            "gx": r.gx, "gy": r.gy, "vmax": r.v_max, "theta": r.theta, "rho": r.rho,
        },
        "humans": [{"px": h.px, "py": h.py, "rho": h.rho} for h in obs.humans],
    }


def _number(payload: Dict[str, Any], key: str) -> float:
    value = payload.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ExternalPolicyFailure(f"Antwort ohne numerisches Feld {key!r}: {payload!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ExternalPolicyFailure(f"Feld {key!r} ist nicht endlich: {value}")
    return value


def decode_action(line: str, v_max: float) -> Action:
    """Parst eine Antwortzeile und begrenzt die Geschwindigkeit auf ``v_max``."""
    try:
        payload = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ExternalPolicyFailure(f"Antwort ist kein JSON: {line.strip()[:80]!r}") from exc
    if not isinstance(payload, dict):
        raise ExternalPolicyFailure(f"Antwort ist kein JSON-Objekt: {line.strip()[:80]!r}")
    return Action(_number(payload, "vx"), _number(payload, "vy")).clamped(v_max)


class PolicyProcess:
    """Ein Kindprozess pro Episode; als Context-Manager verwenden."""

    def __init__(self, command: Union[str, Sequence[str]], timeout: float = DEFAULT_TIMEOUT):
        self.argv: List[str] = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.argv:
            raise ExternalPolicyFailure("Leerer Befehl fuer externe Policy")
        self.timeout = timeout
        self._proc: Optional[subprocess.Popen] = None
        self._lines: "queue.Queue[object]" = queue.Queue()
        self._reader: Optional[threading.Thread] = None

    def __enter__(self) -> "PolicyProcess":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _read_stdout(self) -> None:
        assert self._proc is not None and self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(_EOF)

    def start(self, dt: float, time_limit: float) -> None:
        try:
            self._proc = subprocess.Popen(
                self.argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise ExternalPolicyFailure(f"Start von {self.argv[0]!r} fehlgeschlagen: {exc}") from exc
        self._reader = threading.Thread(target=self._read_stdout, daemon=True)
        self._reader.start()
        reply = self._exchange({"proto": PROTOCOL_VERSION, "dt": dt, "time_limit": time_limit})
        try:
            payload = json.loads(reply)
        except json.JSONDecodeError as exc:
            raise ExternalPolicyFailure(f"Handshake-Antwort ist kein JSON: {reply.strip()[:80]!r}") from exc
        if not isinstance(payload, dict) or payload.get("ok") is not True:
            raise ExternalPolicyFailure(f"Handshake abgelehnt: {reply.strip()[:80]!r}")
        logger.debug("Externe Policy %s bereit", self.argv[0])

    def _exchange(self, message: Dict[str, Any]) -> str:
        if self._proc is None or self._proc.stdin is None:
            raise ExternalPolicyFailure("Externe Policy nicht gestartet")
        try:
            self._proc.stdin.write(json.dumps(message, separators=(",", ":")) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ExternalPolicyFailure(f"Schreiben an externe Policy fehlgeschlagen: {exc}") from exc
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise ExternalPolicyFailure(
                f"Keine Antwort der externen Policy innerhalb von {self.timeout:g} s"
            ) from None
        if line is _EOF:
            code = self._proc.poll()
            raise ExternalPolicyFailure(f"Externe Policy hat sich beendet (exit code {code})")
        return str(line)

    def request(self, obs: Observation) -> Action:
        return decode_action(self._exchange(encode_observation(obs)), obs.robot.v_max)

    def close(self) -> None:
        proc = self._proc
        if proc is None:
            return
        self._proc = None
        try:
            if proc.stdin is not None:
                proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=self.timeout)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()


def protocol_roundtrip(endpoint: PolicyProcess, obs: Observation) -> Action:
    """Eine Beobachtung senden, eine Aktion empfangen (innerhalb des Timeouts)."""
    return endpoint.request(obs)
