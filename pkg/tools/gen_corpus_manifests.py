"""Regenerate the corpus test manifests and golden outputs.

Golden outputs are computed here from Python models of each program
(zlib, base64, datetime, math, ...), never by running the corpus binaries,
so the baseline stage independently checks the compiled programs.

    python tools/gen_corpus_manifests.py
"""

from __future__ import annotations

import base64
import codecs
import datetime
import json
import math
import zlib
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "binmut" / "corpus" / "manifests"
MASK = (1 << 64) - 1


def wrap64(v: int) -> int:
    v &= MASK
    return v - (1 << 64) if v >> 63 else v


def c_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def c_mod(a: int, b: int) -> int:
    return a - c_div(a, b) * b


# -- models ------------------------------------------------------------------

def abs_model(args):
    return "".join(f"{abs(int(a))}\n" for a in args)


def countdown_model(n: int) -> str:
    full, rest = divmod(n, 7)
    return f"{full * 21 + rest * (rest + 1) // 2}\n"


def gcd_model(args):
    out = []
    for a, b in zip(args[::2], args[1::2]):
        g = math.gcd(a, b)
        lcm = 0 if g == 0 else c_div(a, g) * b
        out.append(f"gcd={g} lcm={lcm}\n")
    return "".join(out)


def sort_model(text: str) -> str:
    items = sorted(int(t) for t in text.split())
    n = len(items)
    med = 2 * items[n // 2] if n % 2 else items[n // 2 - 1] + items[n // 2]
    return (" ".join(map(str, items)) + "\n"
            + f"n={n} min={items[0]} max={items[-1]} sum={sum(items)} median_x2={med}\n")


def crc_model(data: bytes) -> str:
    ones = sum(bin(b).count("1") for b in data)
    return (f"bytes={len(data)} crc32={zlib.crc32(data):08x} "
            f"adler32={zlib.adler32(data):08x} ones={ones}\n")


def primes_model(n: int) -> str:
    if n < 2:
        return "count=0\n"
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for i in range(2, math.isqrt(n) + 1):
        if sieve[i]:
            sieve[i * i::i] = bytearray(len(range(i * i, n + 1, i)))
    ps = [i for i in range(n + 1) if sieve[i]]
    return f"count={len(ps)} sum={sum(ps)} largest={ps[-1]}\n"


def calc_model(program: str) -> tuple[str, int]:
    stack: list[int] = []
    out = []

    def pop():
        if not stack:
            raise SystemExit("underflow in model")
        return stack.pop()

    for tok in program.split():
        if tok in ("+", "-", "*", "&", "|", "^", "<", ">", "m", "s", "/", "%"):
            b, a = pop(), pop()
            if tok in ("/", "%") and b == 0:
                out.append("error: division by zero\n")
                return "".join(out), 1
            r = {
                "+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b,
                "&": lambda: a & b, "|": lambda: a | b, "^": lambda: a ^ b,
                "<": lambda: a << (b & 63), ">": lambda: a >> (b & 63),
                "m": lambda: max(a, b), "/": lambda: c_div(a, b), "%": lambda: c_mod(a, b),
            }.get(tok)
            if tok == "s":
                stack += [b, a]
            else:
                stack.append(wrap64(r()))
        elif tok == "~":
            stack.append(~pop())
        elif tok == "n":
            stack.append(wrap64(-pop()))
        elif tok == "d":
            stack += [stack[-1]]
        elif tok == "p":
            out.append(f"{stack[-1]}\n")
        elif tok == "!":
            stack.append(wrap64(math.factorial(max(pop(), 1))))
        elif tok == "q":
            stack.append(math.isqrt(pop()))
        elif tok == "pow":
            e, b = pop(), pop()
            stack.append(0 if e < 0 else wrap64(b ** e))
        elif tok == "sum":
            s = sum(stack)
            stack.clear()
            stack.append(wrap64(s))
        else:
            stack.append(int(tok))
    out.append(" ".join(map(str, stack)) + "\n")
    return "".join(out), 0


def rle_model(data: bytes) -> str:
    out, i = [], 0
    while i < len(data):
        j = i
        while j < len(data) and data[j] == data[i] and j - i < 9:
            j += 1
        out.append(f"{j - i}{chr(data[i])}")
        i = j
    return "".join(out) + "\n"


def unrle_model(data: bytes) -> str:
    out, i = [], 0
    while i + 1 < len(data):
        if data[i] == ord("\n"):
            break
        out.append(chr(data[i + 1]) * (data[i] - ord("0")))
        i += 2
    return "".join(out)


def wc_model(data: bytes) -> str:
    lines = data.count(b"\n")
    return f"{lines} {len(data.split())} {len(data)}\n"


def roman_model(n: int) -> str:
    vals = [(1000, "M"), (900, "CM"), (500, "D"), (400, "CD"), (100, "C"), (90, "XC"),
            (50, "L"), (40, "XL"), (10, "X"), (9, "IX"), (5, "V"), (4, "IV"), (1, "I")]
    out = []
    for v, s in vals:
        while n >= v:
            out.append(s)
            n -= v
    return "".join(out) + "\n"


def dow_model(y, m, d) -> str:
    return datetime.date(y, m, d).strftime("%a") + "\n"


def matmul_model(n: int) -> str:
    a = [[(i * 3 + j * 5) % 11 - 5 for j in range(n)] for i in range(n)]
    b = [[c_mod((i * 7) ^ (j * 2), 13) - 6 for j in range(n)] for i in range(n)]
    c = [[sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    trace = sum(c[i][i] for i in range(n))
    total = sum(map(sum, c))
    return f"trace={trace} total={total} c00={c[0][0]}\n"


def bigfact_model(n: int) -> str:
    digits = str(math.factorial(max(n, 1)))
    return f"{digits}\ndigits={len(digits)} digitsum={sum(map(int, digits))}\n"


def collatz_model(limit: int) -> str:
    best, best_steps = 1, 0
    for i in range(1, limit + 1):
        n, s = i, 0
        while n != 1:
            n = 3 * n + 1 if n & 1 else n >> 1
            s += 1
        if s > best_steps:
            best, best_steps = i, s
    return f"best={best} steps={best_steps}\n"


def hist_model(data: bytes) -> str:
    counts = [0] * 26
    for b in data:
        c = b | 0x20
        if ord("a") <= c <= ord("z"):
            counts[c - ord("a")] += 1
    top = max(range(26), key=lambda i: (counts[i], -i))
    return f"letters={sum(counts)} top={chr(ord('a') + top)} count={counts[top]}\n"


# -- manifest assembly ---------------------------------------------------------

LOREM = (b"The quick brown fox jumps over the lazy dog.\n"
         b"Pack my box with five dozen liquor jugs!\n"
         b"Sphinx of black quartz, judge my vow.\n")


def write_input(name: str, data: bytes) -> str:
    path = OUT / "inputs" / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    return f"inputs/{name}"


def test(name, argv, expected: str, stdin: str | None = None, exit_code: int = 0,
         golden_file: str | None = None):
    cmd = {"argv": ["{binary}", *map(str, argv)]}
    if stdin:
        cmd["stdin_file"] = stdin
    if golden_file:
        path = OUT / "golden" / golden_file
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(expected)
        exp = {"file": f"golden/{golden_file}"}
    else:
        exp = {"inline": expected}
    return {"name": name, "command": cmd, "expected_stdout": exp,
            "expected_exit": exit_code, "compare": "exact"}


def manifest(program: str, input_set: str, tests: list[dict]) -> None:
    doc = {
        "input_set_name": input_set,
        "timeout_factor": 2.0,
        "health": {"argv": ["{binary}", "-h"]},
        "tests": tests,
    }
    (OUT / f"{program}.{input_set}.json").write_text(json.dumps(doc, indent=2) + "\n")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)

    manifest("abs", "test", [test("neg5", [-5], abs_model([-5])),
                             test("pos5", [5], abs_model([5]))])
    manifest("abs", "train", [test(f"v{v}", [v], abs_model([v])) for v in (-5, 0, 5, -123, 77)])
    big = [-2147483647, -65536, -1, 0, 1, 42, 99999, -31337]
    manifest("abs", "ref", [test("many", big, abs_model(big))]
             + [test(f"v{v}", [v], abs_model([v])) for v in (-5, 5)])

    manifest("countdown", "test", [test("n1000", [1000], countdown_model(1000))])
    manifest("countdown", "train", [test("n1e6", [1_000_000], countdown_model(1_000_000)),
                                    test("n0", [0], countdown_model(0))])
    manifest("countdown", "ref", [test("n1e8", [100_000_000], countdown_model(100_000_000))])

    manifest("gcd", "test", [test("12_18", [12, 18], gcd_model([12, 18]))])
    pairs = [48, 36, 17, 5, 100, 75, 0, 9]
    manifest("gcd", "train", [test("pairs", pairs, gcd_model(pairs))])
    pairs_ref = [1071, 462, 2 ** 40, 2 ** 20 * 3, 123456789, 987654321, 7, 7, 270, 192]
    manifest("gcd", "ref", [test("pairs", pairs_ref, gcd_model(pairs_ref)),
                            test("12_18", [12, 18], gcd_model([12, 18]))])

    small = "5 3 9 1 7\n"
    mid = " ".join(str((i * 37) % 101 - 50) for i in range(60)) + "\n"
    large = "\n".join(str(((i * 7919) % 10007) - 5000) for i in range(1500)) + "\n"
    manifest("sort", "test", [test("small", [], sort_model(small), write_input("sort_small.txt", small.encode()))])
    manifest("sort", "train", [test("mid", [], sort_model(mid), write_input("sort_mid.txt", mid.encode()))])
    manifest("sort", "ref", [
        test("large", [], sort_model(large), write_input("sort_large.txt", large.encode()),
             golden_file="sort.ref.large.out"),
        test("small", [], sort_model(small), "inputs/sort_small.txt"),
    ])

    blob = bytes((i * 131 + 7) % 256 for i in range(20000))
    manifest("crc", "test", [test("hello", [], crc_model(b"hello\n"), write_input("hello.txt", b"hello\n"))])
    manifest("crc", "train", [test("lorem", [], crc_model(LOREM), write_input("lorem.txt", LOREM))])
    manifest("crc", "ref", [test("blob", [], crc_model(blob), write_input("blob.bin", blob)),
                            test("lorem", [], crc_model(LOREM), "inputs/lorem.txt")])

    manifest("primes", "test", [test("n30", [30], primes_model(30))])
    manifest("primes", "train", [test("n1000", [1000], primes_model(1000)),
                                 test("n1", [1], primes_model(1))])
    manifest("primes", "ref", [test("n1e6", [1_000_000], primes_model(1_000_000)),
                               test("n2", [2], primes_model(2))])

    calc_progs = {
        "basic": "3 4 + 5 *",
        "divmod": "17 5 / 17 5 % -17 5 / -17 5 %",
        "bits": "12 10 & 12 10 | 12 10 ^ 5 ~ 1 10 < 1024 3 >",
        "stack": "1 2 s - 7 d * 9 n 3 m",
        "funcs": "10 ! 1000 q 3 13 pow 2 -1 pow",
        "sum": "1 2 3 4 5 6 7 8 9 10 sum p 2 *",
        "divzero": "1 0 /",
    }
    calc_tests = {}
    for name, prog in calc_progs.items():
        out, code = calc_model(prog)
        calc_tests[name] = test(name, [], out, write_input(f"calc_{name}.txt", (prog + "\n").encode()),
                                exit_code=code)
    manifest("calc", "test", [calc_tests["basic"]])
    manifest("calc", "train", [calc_tests[k] for k in ("basic", "divmod", "stack")])
    manifest("calc", "ref", [calc_tests[k] for k in calc_progs])

    text_in = write_input("lorem.txt", LOREM)
    b64_in = write_input("lorem.b64", base64.b64encode(LOREM) + b"\n")
    rle_src = b"aaabccddddddddddddxyz"
    rle_in = write_input("rle.txt", rle_src)
    unrle_src = b"3a1b2c9d3d1x1y1z\n"
    unrle_in = write_input("unrle.txt", unrle_src)
    tb = {
        "b64enc": test("b64enc", ["b64enc"], base64.b64encode(LOREM).decode() + "\n", text_in),
        "b64enc2": test("b64enc2", ["b64enc"], base64.b64encode(b"hi").decode() + "\n",
                        write_input("hi.txt", b"hi")),
        "b64dec": test("b64dec", ["b64dec"], LOREM.decode(), b64_in),
        "rot13": test("rot13", ["rot13"], codecs.encode(LOREM.decode(), "rot13"), text_in),
        "rle": test("rle", ["rle"], rle_model(rle_src), rle_in),
        "unrle": test("unrle", ["unrle"], unrle_model(unrle_src), unrle_in),
        "wc": test("wc", ["wc"], wc_model(LOREM), text_in),
        "hist": test("hist", ["hist"], hist_model(LOREM), text_in),
        "roman": test("roman", ["roman", 1994], roman_model(1994)),
        "roman2": test("roman2", ["roman", 3888], roman_model(3888)),
        "dow": test("dow", ["dow", 2021, 2, 21], dow_model(2021, 2, 21)),
        "dow2": test("dow2", ["dow", 2000, 1, 1], dow_model(2000, 1, 1)),
        "matmul": test("matmul", ["matmul", 8], matmul_model(8)),
        "bigfact": test("bigfact", ["bigfact", 60], bigfact_model(60), golden_file="toolbox.bigfact60.out"),
        "collatz": test("collatz", ["collatz", 3000], collatz_model(3000)),
    }
    manifest("toolbox", "test", [tb[k] for k in ("b64enc", "wc", "roman")])
    manifest("toolbox", "train", [tb[k] for k in ("b64enc", "b64dec", "rot13", "wc", "roman", "dow", "matmul")])
    manifest("toolbox", "ref", list(tb.values()))


if __name__ == "__main__":
    main()
