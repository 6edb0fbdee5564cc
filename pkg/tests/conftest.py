import re
import shutil
import subprocess

import pytest

from binmut.corpus import build_corpus

needs_gcc = pytest.mark.skipif(shutil.which("gcc") is None, reason="gcc not available")
needs_objdump = pytest.mark.skipif(shutil.which("objdump") is None, reason="objdump not available")


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """{(program, level): path} for the whole bundled corpus, built once."""
    if shutil.which("gcc") is None:
        pytest.skip("gcc not available")
    return build_corpus(tmp_path_factory.mktemp("corpus"))


@pytest.fixture(scope="session")
def abs_o0(corpus):
    return corpus[("abs", "O0")]


_OBJDUMP_LINE = re.compile(r"^\s*([0-9a-f]+):\t((?:[0-9a-f]{2} )+)")


def objdump_lengths(path) -> dict[int, int]:
    """Instruction lengths by address according to objdump."""
    if shutil.which("objdump") is None:
        pytest.skip("objdump not available")
    out = subprocess.run(["objdump", "-d", "-w", "--insn-width=16", str(path)],
                         capture_output=True, text=True, check=True).stdout
    lengths = {}
    for line in out.splitlines():
        m = _OBJDUMP_LINE.match(line)
        if m:
            lengths[int(m.group(1), 16)] = len(m.group(2).split())
    return lengths


def readelf_function_count(path) -> int:
    """Defined FUNC entries of .symtab according to readelf."""
    if shutil.which("readelf") is None:
        pytest.skip("readelf not available")
    out = subprocess.run(["readelf", "-sW", str(path)], capture_output=True, text=True,
                         check=True).stdout
    section = None
    n = 0
    for line in out.splitlines():
        if line.startswith("Symbol table"):
            section = ".symtab" if "'.symtab'" in line else "other"
            continue
        f = line.split()
        if section == ".symtab" and len(f) >= 8 and f[0].endswith(":") and f[3] == "FUNC":
            if f[6] not in ("UND", "ABS"):
                n += 1
    return n


def assemble(source: str, tmp_dir) -> bytes:
    """Machine code for AT&T ``source`` according to GNU as."""
    if shutil.which("as") is None or shutil.which("objcopy") is None:
        pytest.skip("binutils assembler not available")
    src, obj, raw = tmp_dir / "x.s", tmp_dir / "x.o", tmp_dir / "x.bin"
    src.write_text(source + "\n")
    subprocess.run(["as", "-o", str(obj), str(src)], check=True, capture_output=True)
    subprocess.run(["objcopy", "-O", "binary", "-j", ".text", str(obj), str(raw)], check=True)
    return raw.read_bytes()


def objdump_raw(blob: bytes, tmp_dir, vaddr: int = 0) -> list[tuple[int, int, str]]:
    """(address, length, text) for each instruction objdump finds in ``blob``."""
    if shutil.which("objdump") is None:
        pytest.skip("objdump not available")
    path = tmp_dir / "blob.bin"
    path.write_bytes(blob)
    out = subprocess.run(["objdump", "-D", "-b", "binary", "-mi386:x86-64", "-w", "-z",
                          "--insn-width=16", f"--adjust-vma={vaddr:#x}", str(path)],
                         capture_output=True, text=True, check=True).stdout
    result = []
    for line in out.splitlines():
        m = re.match(r"^\s*([0-9a-f]+):\t((?:[0-9a-f]{2} )+)\s*\t?(.*)$", line)
        if m:
            result.append((int(m.group(1), 16), len(m.group(2).split()), m.group(3).strip()))
    return result


# -- acceptance summary -----------------------------------------------------------
# Tests marked ``criterion(n, title)`` get one PASS/FAIL line at the end of the run.

_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        detail = getattr(item, "criterion_detail", "")
        _CRITERIA[number] = (title, status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[number]
        line = f"criterion {number:>2} {status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
