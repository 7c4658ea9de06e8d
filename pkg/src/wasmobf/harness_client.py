"""Client for the runtime-harness protocol: line-delimited JSON over the
harness process's standard streams, responses matched by request id."""

from __future__ import annotations

import json
import shlex
import subprocess
import threading
import uuid

from .errors import HarnessUnavailable

GRACE_S = 1.0


class HarnessClient:
    """One harness subprocess; safe for concurrent requests."""

    def __init__(self, command: str | list[str]):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        self._proc: subprocess.Popen | None = None
        self._write_lock = threading.Lock()
        self._pending: dict[str, dict | None] = {}
        self._events: dict[str, threading.Event] = {}
        self._reader: threading.Thread | None = None

    def start(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            return
        try:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=True, encoding="utf-8",
                bufsize=1)
        except OSError as exc:
            raise HarnessUnavailable(
                f"cannot launch harness {' '.join(self.command)}: {exc}") from exc
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self) -> None:
        proc = self._proc
        assert proc is not None and proc.stdout is not None
        for line in proc.stdout:
            line = line.strip()
            if not line:
                continue
            try:
                message = json.loads(line)
            except json.JSONDecodeError:
                continue
            request_id = message.get("id")
            if request_id in self._events:
                self._pending[request_id] = message
                self._events[request_id].set()
        # EOF: release all waiters so they observe the crash
        for event in self._events.values():
            event.set()

    def request(self, script: str, timeout_ms: int = 5000,
                collect_fingerprint: bool = False,
                monitor_apis: bool = False) -> dict:
        """Execute one script; raises HarnessUnavailable on process trouble."""
        self.start()
        proc = self._proc
        assert proc is not None and proc.stdin is not None
        request_id = uuid.uuid4().hex
        payload = {
            "id": request_id,
            "script": script,
            "timeout_ms": timeout_ms,
            "collect_fingerprint": collect_fingerprint,
            "monitor_apis": monitor_apis,
        }
        event = threading.Event()
        self._events[request_id] = event
        try:
            with self._write_lock:
                try:
                    proc.stdin.write(json.dumps(payload) + "\n")
                    proc.stdin.flush()
                except (BrokenPipeError, OSError) as exc:
                    raise HarnessUnavailable(f"harness pipe closed: {exc}") from exc
            if not event.wait(timeout_ms / 1000 + GRACE_S):
                return {"id": request_id, "status": "timeout",
                        "error": "no response within timeout + grace",
                        "console": []}
            response = self._pending.pop(request_id, None)
            if response is None:
                raise HarnessUnavailable("harness exited before responding")
            return response
        finally:
            self._events.pop(request_id, None)
            self._pending.pop(request_id, None)

    def close(self) -> None:
        proc = self._proc
        if proc is None:
            return
        try:
            if proc.stdin:
                proc.stdin.close()
            proc.wait(timeout=5)
        except Exception:
            proc.kill()
        self._proc = None

    def __enter__(self) -> "HarnessClient":
        self.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
