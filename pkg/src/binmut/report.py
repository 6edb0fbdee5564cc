"""Mutation scores, per-class breakdowns and their CSV / JSON / SVG renderings."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from pathlib import Path
from xml.sax.saxutils import escape

from .harness import KILLED, PASSED, TRIVIAL
from .isa import OperatorClass

UNDEFINED = "undefined"
FORMATS = ("csv", "json", "svg")
SCORE_COLUMNS = ("binary", "input_set", "sampled", "killed", "passed", "trivial",
                 "raw_score_pct", "adjusted_score_pct")
BREAKDOWN_COLUMNS = ("binary", "input_set", "class", "generated", "sampled", "killed",
                     "passed", "trivial")


class UnknownMutantId(KeyError):
    pass


def percent(ratio: Fraction | None) -> str:
    """Percentage with one decimal, rounded half-even; UNDEFINED for None."""
    if ratio is None:
        return UNDEFINED
    value = Decimal(ratio.numerator * 100) / Decimal(ratio.denominator)
    return str(value.quantize(Decimal("0.1"), rounding=ROUND_HALF_EVEN))


@dataclass(frozen=True)
class MutationScore:
    sampled: int
    killed: int
    passed: int
    trivial: int

    @property
    def raw_score(self) -> Fraction | None:
        return Fraction(self.killed, self.sampled) if self.sampled else None

    @property
    def adjusted_score(self) -> Fraction | None:
        live = self.killed + self.passed
        return Fraction(self.killed, live) if live else None

    @property
    def raw_score_pct(self) -> str:
        return percent(self.raw_score)

    @property
    def adjusted_score_pct(self) -> str:
        return percent(self.adjusted_score)

    def to_dict(self) -> dict:
        return {"sampled": self.sampled, "killed": self.killed, "passed": self.passed,
                "trivial": self.trivial, "raw_score_pct": self.raw_score_pct,
                "adjusted_score_pct": self.adjusted_score_pct}

    @classmethod
    def from_dict(cls, d: dict) -> "MutationScore":
        return cls(int(d["sampled"]), int(d["killed"]), int(d["passed"]), int(d["trivial"]))


def _pairs(verdicts):
    for item in verdicts:
        if isinstance(item, tuple):
            yield item
        else:
            yield item.mutant_id, item.verdict


def score(verdicts) -> MutationScore:
    """Counts and ratios over ``(mutant_id, Verdict)`` pairs (or Evaluations)."""
    counts = {PASSED: 0, KILLED: 0, TRIVIAL: 0}
    n = 0
    for _, v in _pairs(verdicts):
        counts[v.status] += 1
        n += 1
    return MutationScore(n, counts[KILLED], counts[PASSED], counts[TRIVIAL])


@dataclass(frozen=True)
class ClassRow:
    generated: int = 0
    sampled: int = 0
    killed: int = 0
    passed: int = 0
    trivial: int = 0


@dataclass(frozen=True)
class ClassBreakdown:
    rows: dict[OperatorClass, ClassRow]

    def total(self) -> ClassRow:
        return ClassRow(*(sum(getattr(r, f) for r in self.rows.values())
                          for f in ("generated", "sampled", "killed", "passed", "trivial")))


def _id_and_class(m) -> tuple[int, OperatorClass]:
    if isinstance(m, dict):
        return int(m["mutant_id"]), OperatorClass(m["class"])
    return m.mutant_id, m.op_class


def breakdown(mutants, verdicts, generated=None) -> ClassBreakdown:
    """Per-class tallies for a sample.

    ``mutants`` and ``generated`` hold Mutant objects or manifest records;
    ``generated`` defaults to the sample itself.
    """
    cls_of = dict(_id_and_class(m) for m in mutants)
    gen = {c: 0 for c in OperatorClass}
    for m in (mutants if generated is None else generated):
        gen[_id_and_class(m)[1]] += 1
    tallies = {c: {"sampled": 0, KILLED: 0, PASSED: 0, TRIVIAL: 0} for c in OperatorClass}
    for cls in cls_of.values():
        tallies[cls]["sampled"] += 1
    for mid, v in _pairs(verdicts):
        if mid not in cls_of:
            raise UnknownMutantId(mid)
        tallies[cls_of[mid]][v.status] += 1
    return ClassBreakdown({
        c: ClassRow(gen[c], t["sampled"], t[KILLED], t[PASSED], t[TRIVIAL])
        for c, t in tallies.items()
    })


@dataclass(frozen=True)
class RunReport:
    binary: str
    input_set: str
    score: MutationScore
    breakdown: ClassBreakdown


# -- rendering -------------------------------------------------------------------

_BAR_COLORS = ((PASSED, "#4c9f70"), (KILLED, "#c8553d"), (TRIVIAL, "#9a9a9a"))


def render_svg(run: RunReport) -> str:
    """Stacked bars (passed / killed / trivial) per operator class."""
    width, height = 560, 340
    left, right, top, bottom = 60, 130, 50, 60
    plot_w, plot_h = width - left - right, height - top - bottom
    classes = list(OperatorClass)
    peak = max([r.sampled for r in run.breakdown.rows.values()] + [1])
    slot = plot_w / len(classes)
    bar_w = slot * 0.6
    s = run.score
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left}" y="20" font-size="14">{escape(run.binary)} [{escape(run.input_set)}]</text>',
        f'<text x="{left}" y="38">sampled={s.sampled} killed={s.killed} passed={s.passed} '
        f'trivial={s.trivial} score={s.raw_score_pct}% adjusted={s.adjusted_score_pct}%</text>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
    ]
    for tick in range(5):
        value = peak * tick / 4
        y = top + plot_h - plot_h * tick / 4
        parts.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end">{value:.0f}</text>')
    for idx, cls in enumerate(classes):
        row = run.breakdown.rows.get(cls, ClassRow())
        x = left + idx * slot + (slot - bar_w) / 2
        y = top + plot_h
        for status, color in _BAR_COLORS:
            count = getattr(row, status)
            if not count:
                continue
            h = plot_h * count / peak
            y -= h
            parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" height="{h:.1f}" '
                         f'fill="{color}"><title>{cls.value} {status}: {count}</title></rect>')
        parts.append(f'<text x="{x + bar_w / 2:.1f}" y="{top + plot_h + 16}" '
                     f'text-anchor="middle">{cls.value}</text>')
    for i, (status, color) in enumerate(_BAR_COLORS):
        ly = top + 10 + i * 20
        parts.append(f'<rect x="{width - right + 20}" y="{ly}" width="12" height="12" fill="{color}"/>')
        parts.append(f'<text x="{width - right + 38}" y="{ly + 10}">{status}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _score_row(run: RunReport) -> list:
    s = run.score
    return [run.binary, run.input_set, s.sampled, s.killed, s.passed, s.trivial,
            s.raw_score_pct, s.adjusted_score_pct]


def emit_report(runs, out_dir: str | os.PathLike, formats=("csv",)) -> list[Path]:
    """Write score/breakdown files for one RunReport or a list of them."""
    if isinstance(runs, RunReport):
        runs = [runs]
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown report formats: {sorted(unknown)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        path = out_dir / "score.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SCORE_COLUMNS)
            w.writerows(_score_row(r) for r in runs)
        written.append(path)
        path = out_dir / "breakdown.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(BREAKDOWN_COLUMNS)
            for r in runs:
                for cls in OperatorClass:
                    row = r.breakdown.rows.get(cls, ClassRow())
                    w.writerow([r.binary, r.input_set, cls.value, row.generated, row.sampled,
                                row.killed, row.passed, row.trivial])
        written.append(path)
    if "json" in formats:
        path = out_dir / "score.json"
        doc = [{"binary": r.binary, "input_set": r.input_set, **r.score.to_dict(),
                "breakdown": {c.value: vars(r.breakdown.rows.get(c, ClassRow())) for c in OperatorClass}}
               for r in runs]
        path.write_text(json.dumps(doc, indent=2) + "\n")
        written.append(path)
    if "svg" in formats:
        for r in runs:
            path = out_dir / f"breakdown_{r.input_set}.svg"
            path.write_text(render_svg(r))
            written.append(path)
    return written


def load_scores(path: str | os.PathLike) -> list[tuple[str, str, MutationScore]]:
    """Parse score.json back into (binary, input_set, MutationScore) triples."""
    doc = json.loads(Path(path).read_text())
    return [(d["binary"], d["input_set"], MutationScore.from_dict(d)) for d in doc]
