"""Line-protocol bridge to a policy running in another process.

Each tick the engine writes one JSON observation record (``TeamObservation.to_dict``
plus ``"seed"``) on the child's stdin, terminated by a newline. The child must
answer with one JSON line: either a list of up to 8 action objects or
``{"actions": [...]}``. Action objects use the keys of ``AgentAction.to_dict``.
A reply that is late (default 100 ms), malformed, or missing makes the whole
team stay put for that tick.
"""

from __future__ import annotations

import json
import logging
import os
import selectors
import shlex
import subprocess
import time

from ..sim import AgentAction
from .base import Policy

log = logging.getLogger(__name__)


class SubprocessPolicy(Policy):
    deterministic = False

    def __init__(self, command, name: str | None = None, timeout: float = 0.1):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        self.name = name or os.path.basename(self.command[-1])
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._buf = b""
        self.timeouts = 0

    def _start(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.DEVNULL,
                bufsize=0,
            )
            os.set_blocking(self._proc.stdout.fileno(), False)
            self._buf = b""
        return self._proc

    def _readline(self, deadline: float) -> bytes | None:
        proc = self._proc
        sel = selectors.DefaultSelector()
        sel.register(proc.stdout, selectors.EVENT_READ)
        try:
            while b"\n" not in self._buf:
                left = deadline - time.monotonic()
                if left <= 0 or not sel.select(left):
                    return None
                chunk = proc.stdout.read(65536)
                if not chunk:
                    return None
                self._buf += chunk
        finally:
            sel.close()
        line, self._buf = self._buf.split(b"\n", 1)
        return line

    def act(self, obs, rng_seed=0, scratch=None):
        stay = [AgentAction() for _ in obs.members]
        payload = obs.to_dict()
        payload["seed"] = rng_seed
        try:
            proc = self._start()
            # drop replies that arrived after an earlier timeout
            self._buf = b""
            try:
                while proc.stdout.read(65536):
                    pass
            except (BlockingIOError, TypeError):
                pass
            proc.stdin.write(json.dumps(payload, separators=(",", ":")).encode() + b"\n")
            line = self._readline(time.monotonic() + self.timeout)
        except (OSError, ValueError) as err:
            log.warning("policy %s: %s", self.name, err)
            return stay
        if line is None:
            self.timeouts += 1
            return stay
        try:
            reply = json.loads(line)
            if isinstance(reply, dict):
                reply = reply.get("actions", [])
            acts = [AgentAction.from_dict(d) for d in reply[: len(obs.members)]]
        except (ValueError, TypeError, KeyError, IndexError):
            self.timeouts += 1  # counts every fallback to all-stay
            return stay
        acts += [AgentAction() for _ in range(len(obs.members) - len(acts))]
        return acts

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=1)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        self._proc = None
