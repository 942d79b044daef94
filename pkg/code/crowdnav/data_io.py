"""Hilfsfunktionen zum Laden und Speichern von Benchmark-Dateien."""  # Zweck der Datei

from __future__ import annotations  # Aktiviert neue Typfeatures

import json  # Zum Schreiben und Lesen von JSON-Dateien
import logging  # Einheitliche Protokollausgaben
import math  # Endlichkeitspruefungen
from pathlib import Path  # Komfortable Pfadobjekte
from typing import Any, Dict, Iterable, List, Optional  # Typ-Hilfen

import numpy as np  # Numerische Arrays
import pandas as pd  # Tabellendatenverarbeitung

from .trajmetric import Trajectory  # Zieltyp fuer eingelesene Pfade

logger = logging.getLogger(__name__)

TRAJECTORY_COLS = ["t", "x", "y"]  # Erwartete CSV-Spalten (t optional)
LOG_KEYS = ["ep", "t", "robot", "humans", "r_base", "r_shape", "d"]  # Felder je JSONL-Zeile


class TrajectoryFormatError(ValueError):
    """Trajektoriendatei fehlt Spalten oder enthaelt unlesbare Werte."""


def ensure_dirs(*directories: Path) -> None:  # Legt benoetigte Verzeichnisse an
    for directory in directories:  # Jedes Verzeichnis der Reihe nach
        Path(directory).mkdir(parents=True, exist_ok=True)  # Inklusive Eltern


def _write_bytes(data: bytes, path: Path) -> None:  # Schreibt Rohdaten mit Pfad im Fehlerfall
    path = Path(path)  # Pfadobjekt sicherstellen
    try:
        path.parent.mkdir(parents=True, exist_ok=True)  # Elternordner anlegen
        path.write_bytes(data)  # Datei in einem Zug schreiben
    except OSError as exc:  # I/O-Fehler mit Pfad weiterreichen
        raise OSError(f"Schreiben nach {path} fehlgeschlagen: {exc.strerror or exc}") from exc


def save_text(data: bytes, path: Path, kind: str = "Datei") -> None:  # Speichert fertige Bytes
    _write_bytes(data, path)  # Datei schreiben
    logger.info("Gespeicherte %s: %s", kind, path)  # Rueckmeldung


def _finite_or_none(obj: Any) -> Any:  # Ersetzt inf/NaN rekursiv durch None
    if isinstance(obj, float):  # Einzelner Float
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):  # Verschachtelte Objekte
        return {key: _finite_or_none(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):  # Listen und Tupel
        return [_finite_or_none(value) for value in obj]
    return obj  # Alles andere unveraendert


def dump_json(obj: Any, indent: Optional[int] = 2) -> str:  # JSON-Text ohne inf/NaN
    separators = None if indent else (",", ":")  # Kompakt fuer Logzeilen
    return json.dumps(_finite_or_none(obj), ensure_ascii=False, indent=indent,
                      separators=separators, allow_nan=False)


def save_json(obj: dict, path: Path) -> None:  # Speichert JSON-Dateien
    save_text((dump_json(obj) + "\n").encode("utf-8"), path, "JSON-Datei")


def load_json(path: Path) -> Dict[str, Any]:  # Laedt ein JSON-Objekt
    path = Path(path)  # Pfadobjekt sicherstellen
    if not path.exists():  # Fehlende Datei klar melden
        raise FileNotFoundError(f"Datei nicht gefunden: {path}")
    with path.open("r", encoding="utf-8") as handle:  # Datei lesen
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:  # Parsefehler mit Pfad melden
            raise ValueError(f"{path}: kein gueltiges JSON ({exc})") from exc
    if not isinstance(data, dict):  # Nur Objekte sind sinnvoll
        raise ValueError(f"{path}: JSON-Objekt erwartet")
    return data


def _uniform_dt(times: np.ndarray, path: Path) -> float:  # Bestimmt den Zeitschritt
    if len(times) < 2:  # Ohne Differenzen kein Zeitschritt
        return 1.0
    steps = np.diff(times)  # Zeitdifferenzen
    if np.any(steps <= 0):  # Zeit muss streng wachsen
        raise TrajectoryFormatError(f"{path}: Zeitstempel nicht streng aufsteigend")
    dt = float(steps.mean())  # Mittlerer Schritt
    if not np.allclose(steps, dt, rtol=1e-6, atol=1e-9):  # Ungleichmaessige Abtastung melden
        logger.warning("%s: ungleichmaessige Zeitstempel, verwende mittleres dt=%.4f", path, dt)
    return dt


def load_trajectory_csv(path: Path) -> Trajectory:  # Liest t,x,y-CSV
    path = Path(path)  # Pfadobjekt sicherstellen
    if not path.exists():  # Fehlende Datei klar melden
        raise FileNotFoundError(f"Datei nicht gefunden: {path}")
    try:
        df = pd.read_csv(path)  # CSV einlesen
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise TrajectoryFormatError(f"{path}: CSV nicht lesbar ({exc})") from exc
    df.columns = [str(c).strip().lower() for c in df.columns]  # Spaltennamen normalisieren
    missing = [c for c in ("x", "y") if c not in df.columns]  # Pflichtspalten pruefen
    if missing:
        raise TrajectoryFormatError(f"{path}: Spalten fehlen: {missing}")
    cols = [c for c in TRAJECTORY_COLS if c in df.columns]  # t ist optional
    try:
        values = df[cols].apply(pd.to_numeric, errors="raise")  # Nur Zahlen zulassen
    except (ValueError, TypeError) as exc:
        raise TrajectoryFormatError(f"{path}: nicht-numerische Werte ({exc})") from exc
    points = values[["x", "y"]].to_numpy(dtype=float)  # Punktmatrix
    if not np.all(np.isfinite(points)):  # NaN oder Inf abweisen
        raise TrajectoryFormatError(f"{path}: leere oder nicht-endliche Koordinaten")
    dt = _uniform_dt(values["t"].to_numpy(dtype=float), path) if "t" in values else 1.0
    logger.info("Trajektorie aus %s geladen (%d Punkte)", path, len(points))
    return Trajectory(points, dt)


def load_log_frame(path: Path) -> pd.DataFrame:  # Liest das JSONL-Trajektorienlog
    path = Path(path)  # Pfadobjekt sicherstellen
    if not path.exists():  # Fehlende Datei klar melden
        raise FileNotFoundError(f"Datei nicht gefunden: {path}")
    rows: List[Dict[str, Any]] = []  # Gesammelte Zeilen
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):  # Zeilenweise parsen
            if not line.strip():  # Leerzeilen ueberspringen
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TrajectoryFormatError(f"{path}:{lineno}: kein gueltiges JSON") from exc
            if not isinstance(row, dict) or "robot" not in row:  # Mindestinhalt pruefen
                raise TrajectoryFormatError(f"{path}:{lineno}: Feld 'robot' fehlt")
            rows.append(row)
    if not rows:
        raise TrajectoryFormatError(f"{path}: keine Logzeilen")
    frame = pd.DataFrame(rows)  # Eine Zeile je Zeitschritt
    for key in LOG_KEYS:  # Fehlende Spalten auffuellen
        if key not in frame.columns:
            frame[key] = None
    frame["ep"] = frame["ep"].fillna(0).astype(int)  # Einzel-Episoden ohne ep erlauben
    return frame[LOG_KEYS]


def episode_rows(frame: pd.DataFrame, ep: int, path: Path) -> pd.DataFrame:  # Zeilen einer Episode
    rows = frame[frame["ep"] == ep]  # Episode filtern
    if rows.empty:
        raise TrajectoryFormatError(f"{path}: Episode {ep} nicht im Log")
    return rows.sort_values("t", kind="stable")  # Zeitlich sortiert


def load_trajectory_jsonl(path: Path, ep: int = 0) -> Trajectory:  # Roboterpfad aus dem Log
    frame = load_log_frame(path)  # Log einlesen
    rows = episode_rows(frame, ep, Path(path))  # Gewuenschte Episode
    try:
        points = np.array(rows["robot"].tolist(), dtype=float).reshape(-1, 2)
    except (TypeError, ValueError) as exc:
        raise TrajectoryFormatError(f"{path}: ungueltige Roboterpositionen ({exc})") from exc
    times = pd.to_numeric(rows["t"], errors="coerce").to_numpy(dtype=float)
    dt = _uniform_dt(times, Path(path)) if np.all(np.isfinite(times)) else 1.0
    return Trajectory(points, dt)


def load_trajectory(path: Path, ep: int = 0) -> Trajectory:  # Waehlt Format nach Endung
    path = Path(path)
    if path.suffix.lower() in (".jsonl", ".ndjson", ".json"):
        return load_trajectory_jsonl(path, ep)
    return load_trajectory_csv(path)


def load_metrics_file(path: Path) -> Dict[str, Any]:  # Metriken oder Teilscores
    path = Path(path)  # Pfadobjekt sicherstellen
    if path.suffix.lower() == ".csv":  # Einzeilige CSV
        if not path.exists():
            raise FileNotFoundError(f"Datei nicht gefunden: {path}")
        df = pd.read_csv(path)  # CSV einlesen
        if len(df) != 1:
            raise ValueError(f"{path}: genau eine Datenzeile erwartet, gefunden {len(df)}")
        row = df.iloc[0].to_dict()  # Zeile als Dictionary
        return {str(k).strip(): (None if pd.isna(v) else v) for k, v in row.items()}
    return load_json(path)  # Sonst JSON


def iter_lines(objects: Iterable[Dict[str, Any]]) -> bytes:  # JSONL aus Objekten
    return "".join(dump_json(obj, indent=None) + "\n" for obj in objects).encode("utf-8")
