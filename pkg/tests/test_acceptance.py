"""Acceptance gate: one test per criterion, each reported as a PASS/FAIL line."""

import json
import time

import pytest

from binmut.binary_model import code_regions, load_binary
from binmut.cli import main
from binmut.corpus import INPUT_SETS, OPT_LEVELS, PROGRAMS, manifest_path
from binmut.forge import SamplePlan, emit, emit_all, sample, verify_diff
from binmut.harness import (KILLED, OUTPUT_MISMATCH, PASSED, TIMEOUT, Verdict, baseline,
                            evaluate_all, evaluate_one, load_manifest, parse_manifest,
                            read_verdicts)
from binmut.isa import InstKind, decode, sweep
from binmut.mutagen import (ARITH_SWAP, CONST_REPLACE, FORCE_FALLTHROUGH, FORCE_TAKE, SKIP,
                            EnumerationStats, MutationOperator, MutationSite, candidates_for,
                            constant_candidates, enumerate_all, instantiate, site_classes)
from binmut.report import breakdown, score
from hypothesis import given
from hypothesis import strategies as st

from conftest import objdump_lengths


def say(request, text):
    request.node.criterion_detail = text
    print(text)


def function_range(b, name):
    sym = next(s for s in b.symbols if s.name == name)
    return sym.vaddr, sym.vaddr + sym.size


def mutants_in(mutants, lo, hi):
    return [m for m in mutants if lo <= m.site.vaddr < hi]


def single_test_manifest(argv, expected, name="t", input_set="test"):
    return parse_manifest(json.dumps({
        "input_set_name": input_set,
        "health": {"argv": ["{binary}", "-h"]},
        "tests": [{"name": name, "command": {"argv": ["{binary}", *argv]},
                   "expected_stdout": {"inline": expected}, "expected_exit": 0}],
    }))


@pytest.mark.criterion(1, "decoder length oracle (objdump), corpus sweep, < 30 s")
def test_c01_decoder_length_oracle(corpus, request):
    start = time.monotonic()
    total = mismatches = 0
    for path in corpus.values():
        ref = objdump_lengths(path)
        b = load_binary(path)
        for r in code_regions(b):
            for i in sweep(b.image[r.file_offset:r.file_offset + r.length], r.vaddr):
                total += 1
                mismatches += ref.get(i.vaddr) != i.length
    elapsed = time.monotonic() - start
    say(request, f"{total} instructions over {len(corpus)} binaries, {mismatches} mismatches, {elapsed:.1f} s")
    assert len(PROGRAMS) >= 5 and len(OPT_LEVELS) >= 3
    assert mismatches == 0
    assert elapsed < 30


def _valid_redecode(patch, vaddr):
    covered = 0
    for i in sweep(patch, vaddr):
        covered += i.length
    return covered == len(patch)


@pytest.mark.criterion(2, "replacement soundness for every enumerated mutant")
def test_c02_replacement_soundness(corpus, request):
    n = force_take = 0
    for path in corpus.values():
        for m in enumerate_all(load_binary(path)):
            n += 1
            insn = m.site.instruction
            assert len(m.patch_bytes) == insn.length, m.to_record()
            assert m.patch_bytes != insn.raw, m.to_record()
            assert _valid_redecode(m.patch_bytes, insn.vaddr), m.to_record()
            first = decode(m.patch_bytes, insn.vaddr)
            if m.operator.variant in (FORCE_FALLTHROUGH, SKIP):
                assert set(m.patch_bytes) == {0x90}
            else:
                assert first.kind is not InstKind.OPAQUE, m.to_record()
            if m.operator.variant == FORCE_TAKE:
                force_take += 1
                assert first.kind is InstKind.JMP_REL
                assert first.branch_target == insn.branch_target
    say(request, f"{n} mutants checked, {force_take} ForceTake targets preserved")
    assert n > 0 and force_take > 0


@pytest.mark.criterion(3, "single-site diff and equal size for every emitted mutant")
def test_c03_single_site_diff(corpus, tmp_path, request):
    n = 0
    for (program, level), path in corpus.items():
        b = load_binary(path)
        out = tmp_path / f"{program}-{level}"
        mutants = enumerate_all(b)
        for m, p in zip(mutants, emit_all(b, mutants, out)):
            assert p.stat().st_size == path.stat().st_size
            assert verify_diff(path, p, m), m.to_record()
            n += 1
            p.unlink()
    say(request, f"{n} mutant files emitted and verified")


def _tree(out):
    files = {"manifest.jsonl": (out / "manifest.jsonl").read_bytes()}
    for p in sorted((out / "mutants").iterdir()):
        files[f"mutants/{p.name}"] = p.read_bytes()
    for s in INPUT_SETS:
        files[f"runs/{s}/verdicts.jsonl"] = (out / "runs" / s / "verdicts.jsonl").read_bytes()
    files["report/score.csv"] = (out / "report" / "score.csv").read_bytes()
    return files


@pytest.fixture(scope="module")
def determinism_runs(corpus, tmp_path_factory):
    """Three cmd_all runs of the abs program: seed 42 twice, then other --workers."""
    binary = corpus[("abs", "O2")]
    root = tmp_path_factory.mktemp("det")
    manifests = []
    for s in INPUT_SETS:
        manifests += ["--manifest", str(manifest_path("abs", s))]
    outs = []
    for name, workers in (("a", "1"), ("b", "1"), ("c", "4")):
        rc = main(["all", str(binary), *manifests, "--seed", "42", "--workers", workers,
                   "--out", str(root / name)])
        assert rc == 0
        outs.append(root / name)
    return outs


@pytest.mark.criterion(4, "determinism of cmd_all (seed 42; --workers 1 vs 4)")
def test_c04_determinism(determinism_runs, request):
    a, b, c = (_tree(o) for o in determinism_runs)
    say(request, f"{len(a)} artifact files compared across 3 runs")
    assert a == b
    assert a == c


@pytest.mark.criterion(5, "known kill: abs sign branch ForceFallthrough / ForceTake")
def test_c05_known_kill(corpus, tmp_path, request):
    path = corpus[("abs", "O0")]
    b = load_binary(path)
    lo, hi = function_range(b, "abs_value")
    jccs = [m for m in mutants_in(enumerate_all(b), lo, hi)
            if m.site.instruction.kind in (InstKind.JCC8, InstKind.JCC32)]
    assert len({m.site.site_id for m in jccs}) == 1, "expected a single sign-test branch"
    by_variant = {m.operator.variant: m for m in jccs}

    neg = single_test_manifest(["-5"], "5\n", "neg5")
    pos = single_test_manifest(["5"], "5\n", "pos5")
    results = {}
    for variant, manifest in ((FORCE_FALLTHROUGH, neg), (FORCE_TAKE, pos)):
        m = by_variant[variant]
        ev = evaluate_one(m.mutant_id, emit(b, m, tmp_path), manifest, baseline(manifest, path))
        results[variant] = ev.verdict
    say(request, f"ForceFallthrough on -5: {results[FORCE_FALLTHROUGH].status}"
                 f"({results[FORCE_FALLTHROUGH].reason}); ForceTake on +5: "
                 f"{results[FORCE_TAKE].status}({results[FORCE_TAKE].reason})")
    assert results[FORCE_FALLTHROUGH].status == KILLED
    assert results[FORCE_FALLTHROUGH].reason == OUTPUT_MISMATCH
    assert results[FORCE_TAKE].status == KILLED


@pytest.mark.criterion(6, "infinite-loop timeout: countdown SUB->ADD killed within 2x baseline + 1 s, < 10 s")
def test_c06_timeout(corpus, tmp_path, request):
    start = time.monotonic()
    path = corpus[("countdown", "O0")]
    b = load_binary(path)
    lo, hi = function_range(b, "countdown")
    # the loop decrement n-- is the only `sub $1, ...` in the function
    swaps = [m for m in mutants_in(enumerate_all(b), lo, hi)
             if m.operator.variant == ARITH_SWAP and m.operator.arg == "add"
             and m.site.instruction.mnemonic == "sub"
             and m.site.instruction.imm is not None and m.site.instruction.imm.value == 1]
    assert len(swaps) == 1, [m.to_record() for m in swaps]
    m = swaps[0]
    manifest = load_manifest(manifest_path("countdown", "ref"))
    profile = baseline(manifest, path)
    ev = evaluate_one(m.mutant_id, emit(b, m, tmp_path), manifest, profile)
    base = profile.test_runtimes["n1e8"]
    wall = ev.wall_times["n1e8"]
    elapsed = time.monotonic() - start
    say(request, f"verdict {ev.verdict.status}({ev.verdict.reason}), baseline {base:.2f} s, "
                 f"mutant wall {wall:.2f} s, bound {2 * base + 1:.2f} s, total {elapsed:.1f} s")
    assert ev.verdict.status == KILLED and ev.verdict.reason == TIMEOUT
    assert wall <= 2 * base + 1.0
    assert elapsed < 10


@pytest.mark.criterion(7, "verdict partition, identity Passed, breakdown sums")
def test_c07_partition(corpus, determinism_runs, tmp_path, request):
    runs = 0
    # full cmd_all runs from criterion 4
    out = determinism_runs[0]
    sampled = [json.loads(l) for l in (out / "mutants" / "manifest.jsonl").read_text().splitlines()]
    for s in INPUT_SETS:
        verdicts = read_verdicts(out / "runs" / s / "verdicts.jsonl")
        sc, bd = score(verdicts), breakdown(sampled, verdicts)
        assert sc.killed + sc.passed + sc.trivial == sc.sampled == len(sampled)
        assert bd.total().sampled == sc.sampled
        runs += 1
    # one sampled run per program, with the original binary appended as an extra mutant
    for program in PROGRAMS:
        path = corpus[(program, "O2")]
        b = load_binary(path)
        chosen = sample(enumerate_all(b), SamplePlan(42, 40))
        d = tmp_path / program
        paths = emit_all(b, chosen, d)
        identity = d / "identity.bin"
        identity.write_bytes(path.read_bytes())
        identity.chmod(0o755)
        manifest = load_manifest(manifest_path(program, "test"))
        jobs = [(m.mutant_id, p) for m, p in zip(chosen, paths)] + [(10**9, identity)]
        results = evaluate_all(jobs, manifest, baseline(manifest, path))
        assert results[-1].mutant_id == 10**9 and results[-1].verdict.status == PASSED
        verdicts = [(r.mutant_id, r.verdict) for r in results[:-1]]
        sc, bd = score(verdicts), breakdown(chosen, verdicts)
        assert sc.killed + sc.passed + sc.trivial == sc.sampled == len(chosen)
        assert sum(r.sampled for r in bd.rows.values()) == len(chosen)
        runs += 1
    say(request, f"{runs} runs partitioned; identity Passed for all {len(PROGRAMS)} programs")


@pytest.mark.criterion(8, "score(killed=564, sampled=1000) reports 56.4%")
def test_c08_score_anchor(request):
    verdicts = [(i, Verdict("killed" if i < 564 else "passed" if i < 864 else "trivial"))
                for i in range(1000)]
    s = score(verdicts)
    say(request, f"raw {s.raw_score_pct}%, adjusted {s.adjusted_score_pct}%")
    assert s.raw_score_pct == "56.4"


def _site_with_imm(width, c):
    if width == 1:
        raw = bytes([0x83, 0xC0]) + c.to_bytes(1, "little", signed=True)            # add $c,%eax
    elif width == 2:
        raw = bytes([0x66, 0x81, 0xC0]) + c.to_bytes(2, "little", signed=True)      # add $c,%ax
    else:
        raw = bytes([0x81, 0xC0]) + c.to_bytes(4, "little", signed=True)            # add $c,%eax
    insn = decode(raw, 0x1000)
    return MutationSite(0, 0x1000, 0, insn, site_classes(None, insn))


def _consts(site):
    return [op.arg for op in candidates_for(site) if op.variant == CONST_REPLACE]


@st.composite
def width_and_value(draw):
    width = draw(st.sampled_from([1, 2, 4]))
    bound = 1 << (8 * width - 1)
    return width, draw(st.integers(-bound, bound - 1))


@given(width_and_value())
def _law(case):
    width, c = case
    site = _site_with_imm(width, c)
    bound = 1 << (8 * width - 1)
    expected = [v for v in constant_candidates(c) if -bound <= v < bound]
    assert _consts(site) == expected
    assert set(expected) == {v for v in (-1, 0, 1, -c, c + 1, c - 1) if v != c and -bound <= v < bound}
    for v in expected:
        patch = instantiate(site, MutationOperator(CONST_REPLACE, v)).patch_bytes
        assert decode(patch).imm.value == v


@pytest.mark.criterion(9, "constant-candidate law: c=5 gives {-1,0,1,-5,6,4}; property over widths")
def test_c09_constant_candidates(request):
    got = _consts(_site_with_imm(4, 5))
    assert got == [-1, 0, 1, -5, 6, 4]
    _law()
    say(request, f"c=5 -> {got}; random c per width 1/2/4 checked")


@pytest.mark.criterion(10, "mutable density at -O2 within [15%, 60%]")
def test_c10_density(corpus, request):
    stats = EnumerationStats()
    for (program, level), path in corpus.items():
        if level == "O2":
            enumerate_all(load_binary(path), stats)
    say(request, f"{stats.mutable_instructions}/{stats.instructions} = {100 * stats.density:.1f}%")
    assert 0.15 <= stats.density <= 0.60


@pytest.mark.criterion(11, "largest program end to end with a 1000-mutant sample in < 10 min")
def test_c11_scale(corpus, tmp_path, request):
    sizes = {key: len(enumerate_all(load_binary(p))) for key, p in corpus.items()}
    program, level = max(sizes, key=sizes.get)
    binary = corpus[(program, level)]
    manifests = []
    for s in INPUT_SETS:
        manifests += ["--manifest", str(manifest_path(program, s))]
    start = time.monotonic()
    rc = main(["all", str(binary), *manifests, "--sample-size", "1000", "--out", str(tmp_path)])
    elapsed = time.monotonic() - start
    rows = (tmp_path / "report" / "score.csv").read_text().splitlines()[1:]
    say(request, f"{program} -{level}: {sizes[(program, level)]} mutants, 1000 sampled, "
                 f"{len(INPUT_SETS)} input sets in {elapsed:.0f} s; " + "; ".join(
                     f"{r.split(',')[1]} {r.split(',')[6]}%" for r in rows))
    assert rc == 0
    assert sizes[(program, level)] >= 1000
    assert all(r.split(",")[2] == "1000" for r in rows)
    assert elapsed < 600
