"""Reward functions over clean sequences, built in and external.

Built-ins are total and never raise on structurally invalid input, they just
score it zero. The external client speaks a line-delimited JSON protocol to a
child process, so rewards written in any language (for instance a chemistry
scorer) plug in behind the same interface.
"""

from __future__ import annotations

import json
import math
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass, field
from typing import Protocol, Sequence as SequenceABC, runtime_checkable

from .core import Sequence, Vocabulary


class RewardEvaluationError(RuntimeError):
    """A reward function failed or returned a non-finite value."""

    def __init__(self, sequence: Sequence, reason: str) -> None:
        super().__init__(f"reward evaluation failed on {sequence.tokens}: {reason}")
        self.sequence = sequence
        self.reason = reason


class RewardTransportError(RuntimeError):
    """The external reward server broke protocol, timed out, or died.

    Deliberately distinct from a zero reward: transport failures abort the
    caller instead of silently steering the sampler."""


@runtime_checkable
class RewardFn(Protocol):
    def __call__(self, x: Sequence) -> float: ...

    def batch(self, xs: SequenceABC[Sequence]) -> list[float]: ...


def evaluate_reward(reward: RewardFn, x: Sequence) -> float:
    """Call a reward and insist on a finite float, naming the offending sequence."""
    try:
        value = float(reward(x))
    except (RewardEvaluationError, RewardTransportError):
        raise
    except Exception as exc:
        raise RewardEvaluationError(x, str(exc)) from exc
    if not math.isfinite(value):
        raise RewardEvaluationError(x, f"non-finite reward {value}")
    return value


class _MapBatch:
    def batch(self, xs: SequenceABC[Sequence]) -> list[float]:
        return [self(x) for x in xs]


@dataclass(frozen=True)
class TokenCountReward(_MapBatch):
    """Fraction of positions equal to a target token."""

    target: int

    def __call__(self, x: Sequence) -> float:
        return sum(1 for tok in x.tokens if tok == self.target) / len(x)


@dataclass(frozen=True)
class GatedBracketReward(_MapBatch):
    """Zero unless brackets balance, then maximum nesting depth over length.

    Non-bracket tokens are ignored. The all-or-nothing gate makes the reward
    brittle: a single bad token can drop it from its maximum to zero.
    """

    open_token: int
    close_token: int

    def __post_init__(self) -> None:
        if self.open_token == self.close_token:
            raise ValueError("open and close tokens must differ")

    def __call__(self, x: Sequence) -> float:
        depth = 0
        max_depth = 0
        for tok in x.tokens:
            if tok == self.open_token:
                depth += 1
                max_depth = max(max_depth, depth)
            elif tok == self.close_token:
                depth -= 1
                if depth < 0:
                    return 0.0
        if depth != 0:
            return 0.0
        return max_depth / len(x)


@dataclass(frozen=True)
class PatternReward(_MapBatch):
    """Non-overlapping occurrences of a token pattern, normalized by the maximum possible."""

    pattern: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.pattern) == 0:
            raise ValueError("pattern must be nonempty")

    def __call__(self, x: Sequence) -> float:
        m = len(self.pattern)
        capacity = len(x) // m
        if capacity == 0:
            return 0.0
        count = 0
        i = 0
        while i + m <= len(x):
            if x.tokens[i : i + m] == self.pattern:
                count += 1
                i += m
            else:
                i += 1
        return count / capacity


class ExternalRewardClient:
    """Reward served by a child process over line-delimited JSON.

    Each request line is ``{"id": int, "text": str}`` and each reply line is
    ``{"id": int, "reward": float, "valid": bool}``. Replies may arrive out of
    order; they are matched by id. Items the server marks invalid score 0.
    Anything else (malformed replies, unknown ids, timeouts, a dead server)
    raises RewardTransportError.
    """

    def __init__(
        self,
        command: str | list[str],
        vocab: Vocabulary,
        timeout_secs: float = 30.0,
    ) -> None:
        if timeout_secs <= 0:
            raise ValueError(f"timeout must be positive, got {timeout_secs}")
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise ValueError("external reward command is empty")
        self._vocab = vocab
        self._timeout = timeout_secs
        self._lock = threading.Lock()
        self._next_id = 0
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise RewardTransportError(f"could not start reward server {argv}: {exc}") from exc
        self._replies: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump_stdout, daemon=True)
        self._reader.start()

    def _pump_stdout(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._replies.put(line)
        self._replies.put(None)

    def __call__(self, x: Sequence) -> float:
        return self.batch([x])[0]

    def batch(self, xs: SequenceABC[Sequence]) -> list[float]:
        if not xs:
            return []
        with self._lock:
            return self._batch_locked(list(xs))

    def _batch_locked(self, xs: list[Sequence]) -> list[float]:
        import time

        ids = list(range(self._next_id, self._next_id + len(xs)))
        self._next_id += len(xs)
        lines = [
            json.dumps({"id": i, "text": self._vocab.decode(x.tokens)}) for i, x in zip(ids, xs)
        ]
        try:
            assert self._proc.stdin is not None
            self._proc.stdin.write("\n".join(lines) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise RewardTransportError(f"reward server pipe closed: {exc}") from exc

        pending = set(ids)
        rewards: dict[int, float] = {}
        deadline = time.monotonic() + self._timeout
        while pending:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise RewardTransportError(
                    f"reward server timed out after {self._timeout}s with {len(pending)} replies missing"
                )
            try:
                line = self._replies.get(timeout=remaining)
            except queue.Empty:
                continue
            if line is None:
                raise RewardTransportError("reward server closed its stdout before replying")
            reply_id, value = self._parse_reply(line)
            if reply_id not in pending:
                raise RewardTransportError(f"reply for unknown or duplicate id {reply_id}")
            pending.remove(reply_id)
            rewards[reply_id] = value
        return [rewards[i] for i in ids]

    @staticmethod
    def _parse_reply(line: str) -> tuple[int, float]:
        try:
            reply = json.loads(line)
            reply_id = reply["id"]
            valid = bool(reply["valid"])
            value = 0.0 if not valid else float(reply["reward"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise RewardTransportError(f"malformed reply line {line!r}: {exc}") from exc
        if not isinstance(reply_id, int):
            raise RewardTransportError(f"reply id must be an integer, got {reply_id!r}")
        if not math.isfinite(value):
            raise RewardTransportError(f"non-finite reward in reply {line!r}")
        return reply_id, value

    def close(self) -> None:
        proc = self._proc
        if proc.stdin is not None:
            try:
                proc.stdin.close()
            except OSError:
                pass
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self) -> "ExternalRewardClient":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()
