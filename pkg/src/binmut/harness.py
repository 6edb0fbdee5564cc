"""Health check, test execution and passed/killed/trivial classification.

A test manifest is a JSON document::

    {
      "input_set_name": "test",
      "timeout_factor": 2.0,
      "health": {"argv": ["{binary}", "-h"]},
      "tests": [
        {"name": "neg5",
         "command": {"argv": ["{binary}", "-5"], "stdin_file": null},
         "expected_stdout": {"inline": "5\\n"},      # or {"file": "golden/neg5.out"}
         "expected_exit": 0,
         "compare": "exact"}
      ]
    }

``{binary}`` in an argv is replaced by the path of the binary under test.
Relative paths (stdin, inputs, goldens) resolve against the manifest's
directory.
"""

from __future__ import annotations

import ctypes
import hashlib
import json
import logging
import os
import re
import resource
import shutil
import signal
import subprocess
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT_FACTOR = 2.0
TIMEOUT_FLOOR = 1.0
# wall-clock limit, as a multiple of the CPU budget, for processes that block
WALL_BACKSTOP_FACTOR = 8.0
MAX_OUTPUT_BYTES = 64 << 20
BINARY_PLACEHOLDER = "{binary}"
COMPARE_MODES = ("exact", "normalized-whitespace")

PASSED = "passed"
KILLED = "killed"
TRIVIAL = "trivial"

OUTPUT_MISMATCH = "output-mismatch"
EXIT_MISMATCH = "exit-mismatch"
TIMEOUT = "timeout"
CRASH_DURING_TEST = "crash-during-test"
HEALTH_CRASH = "health-crash"
HEALTH_MISMATCH = "health-mismatch"
EXEC_FAILURE = "exec-failure"

_ADDR_NO_RANDOMIZE = 0x0040000
try:
    _personality = ctypes.CDLL(None, use_errno=True).personality
except (OSError, AttributeError):  # pragma: no cover - non-glibc platforms
    _personality = None


class HarnessError(Exception):
    pass


class ParseError(HarnessError):
    pass


class ValidationError(HarnessError):
    pass


class BaselineFailure(HarnessError):
    """The unmutated binary does not pass its own manifest."""


# -- manifest ------------------------------------------------------------------

@dataclass(frozen=True)
class CommandSpec:
    argv: tuple[str, ...]
    stdin_file: str | None = None
    cwd: str | None = None

    def to_dict(self) -> dict:
        d: dict = {"argv": list(self.argv)}
        if self.stdin_file is not None:
            d["stdin_file"] = self.stdin_file
        if self.cwd is not None:
            d["cwd"] = self.cwd
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CommandSpec":
        if not isinstance(d, dict) or not d.get("argv"):
            raise ValidationError("command needs a non-empty argv")
        return cls(tuple(str(a) for a in d["argv"]), d.get("stdin_file"), d.get("cwd"))

    def resolve_argv(self, binary: Path) -> list[str]:
        return [str(binary) if a == BINARY_PLACEHOLDER else a.replace(BINARY_PLACEHOLDER, str(binary))
                for a in self.argv]


@dataclass(frozen=True)
class Golden:
    inline: str | None = None
    file: str | None = None

    def to_dict(self) -> dict:
        return {"inline": self.inline} if self.file is None else {"file": self.file}

    @classmethod
    def from_dict(cls, d) -> "Golden":
        if isinstance(d, str):
            return cls(inline=d)
        if not isinstance(d, dict) or len(d) != 1 or not ({"inline", "file"} & d.keys()):
            raise ValidationError("expected_stdout must be {'inline': ...} or {'file': ...}")
        return cls(inline=d.get("inline"), file=d.get("file"))

    def read(self, base_dir: Path) -> bytes:
        if self.file is not None:
            return (base_dir / self.file).read_bytes()
        return self.inline.encode()


@dataclass(frozen=True)
class TestCase:
    name: str
    command: CommandSpec
    expected_stdout: Golden
    expected_exit: int | None = None
    compare: str = "exact"
    input_files: tuple[str, ...] = ()
    output_files: tuple[str, ...] = ()
    compare_stderr: bool = False

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "command": self.command.to_dict(),
            "expected_stdout": self.expected_stdout.to_dict(),
            "expected_exit": self.expected_exit,
            "compare": self.compare,
        }
        if self.input_files:
            d["input_files"] = list(self.input_files)
        if self.output_files:
            d["output_files"] = list(self.output_files)
        if self.compare_stderr:
            d["compare_stderr"] = True
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TestCase":
        try:
            name = str(d["name"])
            command = CommandSpec.from_dict(d["command"])
            golden = Golden.from_dict(d["expected_stdout"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"test case missing field: {exc}") from None
        compare = d.get("compare", "exact")
        if compare not in COMPARE_MODES:
            raise ValidationError(f"test {name}: compare must be one of {COMPARE_MODES}")
        exit_code = d.get("expected_exit")
        return cls(name, command, golden, None if exit_code is None else int(exit_code), compare,
                   tuple(d.get("input_files", ())), tuple(d.get("output_files", ())),
                   bool(d.get("compare_stderr", False)))


@dataclass(frozen=True)
class TestManifest:
    health: CommandSpec
    tests: tuple[TestCase, ...]
    timeout_factor: float = DEFAULT_TIMEOUT_FACTOR
    input_set_name: str = "test"
    address_space_limit_mb: int | None = None
    base_dir: Path = field(default=Path("."), compare=False)

    def __post_init__(self):
        if not self.tests:
            raise ValidationError("manifest has no tests")
        if self.timeout_factor < 1.0:
            raise ValidationError(f"timeout_factor {self.timeout_factor} < 1.0")
        names = [t.name for t in self.tests]
        if len(set(names)) != len(names):
            raise ValidationError("test names are not unique")

    def to_dict(self) -> dict:
        d = {
            "input_set_name": self.input_set_name,
            "timeout_factor": self.timeout_factor,
            "health": self.health.to_dict(),
            "tests": [t.to_dict() for t in self.tests],
        }
        if self.address_space_limit_mb is not None:
            d["address_space_limit_mb"] = self.address_space_limit_mb
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path = Path(".")) -> "TestManifest":
        if not isinstance(d, dict):
            raise ValidationError("manifest must be a JSON object")
        if "health" not in d or "tests" not in d:
            raise ValidationError("manifest needs 'health' and 'tests'")
        if not isinstance(d["tests"], list):
            raise ValidationError("'tests' must be a list")
        limit = d.get("address_space_limit_mb")
        return cls(
            health=CommandSpec.from_dict(d["health"]),
            tests=tuple(TestCase.from_dict(t) for t in d["tests"]),
            timeout_factor=float(d.get("timeout_factor", DEFAULT_TIMEOUT_FACTOR)),
            input_set_name=str(d.get("input_set_name", "test")),
            address_space_limit_mb=None if limit is None else int(limit),
            base_dir=Path(base_dir),
        )


def parse_manifest(text: str, base_dir: Path | str = ".") -> TestManifest:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc)) from None
    return TestManifest.from_dict(doc, Path(base_dir))


def load_manifest(path: str | os.PathLike) -> TestManifest:
    path = Path(path)
    return parse_manifest(path.read_text(), path.resolve().parent)


# -- process execution -----------------------------------------------------------

@dataclass(frozen=True)
class RunResult:
    returncode: int | None
    stdout: bytes
    stderr_digest: str
    wall: float
    timed_out: bool = False
    exec_error: str | None = None
    output_digests: tuple[tuple[str, str], ...] = ()

    @property
    def crashed(self) -> bool:
        return self.returncode is not None and self.returncode < 0


def digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def normalize(data: bytes, mode: str) -> bytes:
    if mode == "normalized-whitespace":
        return re.sub(rb"\s+", b" ", data).strip()
    return data


def _child_setup(as_limit_mb: int | None):
    def setup():
        resource.setrlimit(resource.RLIMIT_CORE, (0, 0))
        resource.setrlimit(resource.RLIMIT_FSIZE, (MAX_OUTPUT_BYTES, MAX_OUTPUT_BYTES))
        if as_limit_mb is not None:
            limit = as_limit_mb << 20
            resource.setrlimit(resource.RLIMIT_AS, (limit, limit))
        if _personality is not None:
            _personality(_ADDR_NO_RANDOMIZE)
    return setup


_CLK_TCK = os.sysconf("SC_CLK_TCK")
_POLL = 0.05


def _group_cpu_seconds(pgid: int) -> float | None:
    """User+system CPU of every live process in group ``pgid``, plus reaped children
    of the leader.  None when /proc is unavailable."""
    ticks = 0
    try:
        entries = os.listdir("/proc")
    except OSError:
        return None
    for entry in entries:
        if not entry.isdigit():
            continue
        try:
            with open(f"/proc/{entry}/stat", "rb") as fh:
                stat = fh.read()
        except OSError:
            continue
        fields = stat[stat.rfind(b")") + 2:].split()
        # fields[0] is state (stat field 3); pgrp is field 5, utime..cstime are 14..17
        if int(fields[2]) != pgid:
            continue
        ticks += int(fields[11]) + int(fields[12])
        if int(entry) == pgid:
            ticks += int(fields[13]) + int(fields[14])
    return ticks / _CLK_TCK


def _wait_with_budget(proc: subprocess.Popen, timeout: float, start: float) -> bool:
    """Wait for ``proc``; True if it was killed for exceeding ``timeout``.

    The budget is CPU time of the process group, so a mutant starved by
    other workers is not declared a timeout merely for waiting on a core.
    A wall-clock backstop catches processes that block without burning CPU.
    """
    backstop = timeout * WALL_BACKSTOP_FACTOR + TIMEOUT_FLOOR
    wait = timeout
    while True:
        try:
            proc.wait(timeout=max(wait, _POLL))
            return False
        except subprocess.TimeoutExpired:
            pass
        elapsed = time.monotonic() - start
        cpu = _group_cpu_seconds(proc.pid)
        if cpu is None or cpu >= timeout or elapsed >= backstop:
            break
        wait = min(timeout - cpu, backstop - elapsed)
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except ProcessLookupError:
        pass
    proc.wait()
    return True


def run_command(cmd: CommandSpec, binary: Path, manifest: TestManifest, timeout: float,
                test: TestCase | None = None) -> RunResult:
    """Run ``cmd`` against ``binary`` in a fresh scratch directory."""
    root = Path(tempfile.mkdtemp(prefix="binmut-"))
    # captured streams live beside, not inside, the program's working tree
    scratch = root / "work"
    scratch.mkdir()
    try:
        files = list(test.input_files) if test else []
        if cmd.stdin_file:
            files.append(cmd.stdin_file)
        for rel in files:
            dest = scratch / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(manifest.base_dir / rel, dest)
        workdir = scratch / cmd.cwd if cmd.cwd else scratch
        workdir.mkdir(parents=True, exist_ok=True)
        out_path, err_path = root / "stdout", root / "stderr"
        stdin = open(scratch / cmd.stdin_file, "rb") if cmd.stdin_file else subprocess.DEVNULL
        start = time.monotonic()
        try:
            with open(out_path, "wb") as out, open(err_path, "wb") as err:
                try:
                    proc = subprocess.Popen(
                        cmd.resolve_argv(Path(binary).resolve()),
                        stdin=stdin, stdout=out, stderr=err, cwd=workdir,
                        start_new_session=True,
                        preexec_fn=_child_setup(manifest.address_space_limit_mb),
                        env={**os.environ, "LC_ALL": "C"},
                    )
                except OSError as exc:
                    return RunResult(None, b"", "", time.monotonic() - start,
                                     exec_error=f"{type(exc).__name__}: {exc}")
                timed_out = _wait_with_budget(proc, timeout, start)
                wall = time.monotonic() - start
        finally:
            if stdin is not subprocess.DEVNULL:
                stdin.close()
        outputs = []
        if test:
            for rel in test.output_files:
                p = workdir / rel
                outputs.append((rel, digest(p.read_bytes()) if p.exists() else ""))
        return RunResult(proc.returncode, out_path.read_bytes(), digest(err_path.read_bytes()),
                         wall, timed_out, None, tuple(outputs))
    finally:
        shutil.rmtree(root, ignore_errors=True)


# -- baseline --------------------------------------------------------------------

@dataclass(frozen=True)
class BaselineProfile:
    test_runtimes: dict[str, float]
    golden_digests: dict[str, str]
    health_runtime: float
    health_digest: str
    health_exit: int
    stderr_digests: dict[str, str] = field(default_factory=dict)
    output_digests: dict[str, tuple[tuple[str, str], ...]] = field(default_factory=dict)

    def test_timeout(self, manifest: TestManifest, name: str) -> float:
        return max(manifest.timeout_factor * self.test_runtimes[name], TIMEOUT_FLOOR)

    def health_timeout(self, manifest: TestManifest) -> float:
        return max(manifest.timeout_factor * self.health_runtime, TIMEOUT_FLOOR)


# generous limit for the unmutated binary; only a sanity bound
_BASELINE_TIMEOUT = 600.0


def baseline(manifest: TestManifest, original: str | os.PathLike) -> BaselineProfile:
    original = Path(original)
    health = run_command(manifest.health, original, manifest, _BASELINE_TIMEOUT)
    if health.exec_error or health.timed_out or health.crashed:
        raise BaselineFailure(f"{original}: health command failed "
                              f"({health.exec_error or health.returncode})")
    runtimes, goldens, stderrs, outputs = {}, {}, {}, {}
    for test in manifest.tests:
        res = run_command(test.command, original, manifest, _BASELINE_TIMEOUT, test)
        if res.exec_error or res.timed_out or res.crashed:
            raise BaselineFailure(f"{original}: test {test.name} did not run cleanly "
                                  f"({res.exec_error or res.returncode})")
        expected = normalize(test.expected_stdout.read(manifest.base_dir), test.compare)
        if normalize(res.stdout, test.compare) != expected:
            raise BaselineFailure(f"{original}: test {test.name} output differs from its golden")
        if test.expected_exit is not None and res.returncode != test.expected_exit:
            raise BaselineFailure(f"{original}: test {test.name} exited {res.returncode}, "
                                  f"expected {test.expected_exit}")
        runtimes[test.name] = max(res.wall, 1e-6)
        goldens[test.name] = digest(expected)
        stderrs[test.name] = res.stderr_digest
        outputs[test.name] = res.output_digests
    return BaselineProfile(runtimes, goldens, max(health.wall, 1e-6), digest(health.stdout),
                           health.returncode, stderrs, outputs)


# -- verdicts --------------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    status: str
    reason: str | None = None
    test: str | None = None

    @classmethod
    def passed(cls) -> "Verdict":
        return cls(PASSED)

    @classmethod
    def killed(cls, reason: str, test: str | None = None) -> "Verdict":
        return cls(KILLED, reason, test)

    @classmethod
    def trivial(cls, reason: str, test: str | None = None) -> "Verdict":
        return cls(TRIVIAL, reason, test)


def health_check(mutant: str | os.PathLike, manifest: TestManifest,
                 profile: BaselineProfile) -> Verdict | None:
    """None when the mutant is healthy, otherwise a Trivial verdict."""
    res = run_command(manifest.health, Path(mutant), manifest, profile.health_timeout(manifest))
    if res.exec_error:
        log.info("%s: exec failure: %s", mutant, res.exec_error)
        return Verdict.trivial(EXEC_FAILURE, "health")
    if res.crashed:
        return Verdict.trivial(HEALTH_CRASH, "health")
    if (res.timed_out or res.returncode != profile.health_exit
            or digest(res.stdout) != profile.health_digest):
        return Verdict.trivial(HEALTH_MISMATCH, "health")
    return None


def run_tests(mutant: str | os.PathLike, manifest: TestManifest, profile: BaselineProfile,
              wall_times: dict[str, float] | None = None) -> Verdict:
    for test in manifest.tests:
        res = run_command(test.command, Path(mutant), manifest,
                          profile.test_timeout(manifest, test.name), test)
        if wall_times is not None:
            wall_times[test.name] = res.wall
        if res.exec_error:
            log.info("%s: exec failure in %s: %s", mutant, test.name, res.exec_error)
            return Verdict.trivial(EXEC_FAILURE, test.name)
        if res.timed_out:
            return Verdict.killed(TIMEOUT, test.name)
        if res.crashed:
            return Verdict.killed(CRASH_DURING_TEST, test.name)
        if digest(normalize(res.stdout, test.compare)) != profile.golden_digests[test.name]:
            return Verdict.killed(OUTPUT_MISMATCH, test.name)
        if test.expected_exit is not None and res.returncode != test.expected_exit:
            return Verdict.killed(EXIT_MISMATCH, test.name)
        if test.compare_stderr and res.stderr_digest != profile.stderr_digests.get(test.name):
            return Verdict.killed(OUTPUT_MISMATCH, test.name)
        if res.output_digests != profile.output_digests.get(test.name, ()):
            return Verdict.killed(OUTPUT_MISMATCH, test.name)
    return Verdict.passed()


@dataclass(frozen=True)
class Evaluation:
    mutant_id: int
    verdict: Verdict
    wall_times: dict[str, float]

    def record(self) -> dict:
        return {"mutant_id": self.mutant_id, "verdict": self.verdict.status,
                "reason": self.verdict.reason, "test_name_of_divergence": self.verdict.test}

    def timing_record(self) -> dict:
        return {"mutant_id": self.mutant_id, "wall_times": self.wall_times}


def evaluate_one(mutant_id: int, path: str | os.PathLike, manifest: TestManifest,
                 profile: BaselineProfile) -> Evaluation:
    times: dict[str, float] = {}
    try:
        verdict = health_check(path, manifest, profile)
        if verdict is None:
            verdict = run_tests(path, manifest, profile, times)
    except OSError as exc:
        log.warning("mutant %s: %s", mutant_id, exc)
        verdict = Verdict.trivial(EXEC_FAILURE)
    return Evaluation(mutant_id, verdict, times)


def mutant_id_of(path: str | os.PathLike) -> int:
    return int(Path(path).stem)


def evaluate_all(mutant_paths, manifest: TestManifest, profile: BaselineProfile,
                 workers: int = 1) -> list[Evaluation]:
    """Health check then tests for every mutant; results ascend by mutant id.

    ``mutant_paths`` is an iterable of ``<mutant_id>.bin`` paths or of
    ``(mutant_id, path)`` pairs.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    jobs = []
    for item in mutant_paths:
        if isinstance(item, tuple):
            jobs.append((int(item[0]), Path(item[1])))
        else:
            jobs.append((mutant_id_of(item), Path(item)))
    jobs.sort()
    if workers == 1 or len(jobs) <= 1:
        results = [evaluate_one(mid, p, manifest, profile) for mid, p in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            futures = [pool.submit(evaluate_one, mid, p, manifest, profile) for mid, p in jobs]
            results = [f.result() for f in futures]
    return sorted(results, key=lambda e: e.mutant_id)


def write_verdicts(results, path: str | os.PathLike, timings_path: str | os.PathLike | None = None):
    """verdicts.jsonl carries only schedule-independent fields; wall times go to timings."""
    Path(path).write_text("".join(json.dumps(r.record()) + "\n" for r in results))
    if timings_path is not None:
        Path(timings_path).write_text(
            "".join(json.dumps(r.timing_record()) + "\n" for r in results))


def read_verdicts(path: str | os.PathLike) -> list[tuple[int, Verdict]]:
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                out.append((rec["mutant_id"], Verdict(rec["verdict"], rec.get("reason"), rec.get("test_name_of_divergence"))))
    return out
