"""
Insight Service - dataset statistics, correlation matrices, heatmaps and the markdown report
"""
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from exceptions import ConstantColumn, EmptyDataset, IncompleteBundle, InsightError, InvalidMap
from models.schemas import CorrMatrix, FidelityReport, FoundationBundle, StatSummary
from services.bundle_service import load_bundle
from utils import read_json, write_json

logger = logging.getLogger(__name__)

PALETTES: Dict[str, List[Tuple[int, int, int]]] = {
    "gray": [(0, 0, 0), (255, 255, 255)],
    "heat": [(0, 0, 0), (180, 0, 0), (255, 160, 0), (255, 255, 255)],
    "viridis": [(68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37)],
}
REPORT_MAPS = ("cell_density", "pin_density", "net_density", "rudy", "congestion")


def pearson(x: Sequence[float], y: Sequence[float], name: str = "column") -> float:
    """Two-pass Pearson coefficient; a constant input raises ConstantColumn."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape or a.size < 2:
        raise InsightError("pearson needs two equal-length vectors of at least 2 values")
    da = a - a.mean()
    db = b - b.mean()
    sxx = float(np.dot(da, da))
    syy = float(np.dot(db, db))
    if sxx == 0.0:
        raise ConstantColumn(name)
    if syy == 0.0:
        raise ConstantColumn(name)
    r = float(np.dot(da, db)) / float(np.sqrt(sxx * syy))
    return min(1.0, max(-1.0, r))


def correlate(columns: Mapping[str, Sequence[float]]) -> CorrMatrix:
    """Pairwise Pearson matrix over named columns."""
    labels = list(columns)
    if len(labels) < 2:
        raise InsightError("correlate needs at least two columns")
    data = {k: np.asarray(v, dtype=np.float64) for k, v in columns.items()}
    lengths = {len(v) for v in data.values()}
    if len(lengths) != 1 or lengths.pop() < 2:
        raise InsightError("columns must have equal lengths of at least 2")
    for k, v in data.items():
        if np.all(v == v[0]):
            raise ConstantColumn(k)
    n = len(labels)
    m = [[1.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            r = pearson(data[labels[i]], data[labels[j]], labels[j])
            m[i][j] = m[j][i] = r
    return CorrMatrix(labels=labels, matrix=m)


def quartiles(values: Sequence[float]) -> Optional[Tuple[float, float, float, float, float]]:
    """(min, q1, median, q3, max) with linear interpolation between closest ranks."""
    if len(values) == 0:
        return None
    q = np.percentile(np.asarray(values, dtype=np.float64), [0, 25, 50, 75, 100])
    return tuple(float(v) for v in q)


def summarize(bundles: Sequence[FoundationBundle]) -> StatSummary:
    if not bundles:
        raise EmptyDataset("no bundles to summarize")
    names: List[str] = []
    hist: Dict[int, int] = {}
    class_sum: Dict[str, float] = {}
    layer_wl: Dict[int, int] = {}
    usage: List[float] = []
    delays: List[float] = []
    stages: List[float] = []
    for b in bundles:
        if b.design is None:
            raise IncompleteBundle(f"bundle {b.name or '?'} has no design level")
        d = b.design
        names.append(d.name)
        for k, v in d.pin_histogram.items():
            hist[k] = hist.get(k, 0) + v
        for k, v in d.class_shares.items():
            class_sum[k] = class_sum.get(k, 0.0) + v
        for k, v in d.layer_wirelength.items():
            layer_wl[k] = layer_wl.get(k, 0) + v
        usage.append(d.core_usage)
        for p in b.paths or []:
            delays.append(p.delay)
            stages.append(p.stage_count)
    n_nets = sum(hist.values())
    total_wl = sum(layer_wl.values())
    return StatSummary(
        designs=names,
        net_count=n_nets,
        pin_histogram=dict(sorted(hist.items())),
        two_three_pin_share=(hist.get(2, 0) + hist.get(3, 0)) / n_nets if n_nets else 0.0,
        class_shares={k: v / len(bundles) for k, v in class_sum.items()},
        layer_shares={k: v / total_wl for k, v in sorted(layer_wl.items())} if total_wl else {},
        core_usage=float(np.mean(usage)),
        path_delay_quartiles=quartiles(delays),
        path_stage_quartiles=quartiles(stages),
    )


def feature_maps(bundle: FoundationBundle) -> Dict[str, np.ndarray]:
    """Patch records reassembled into (ny, nx) maps, row 0 at the grid origin."""
    if bundle.grid is None or bundle.patches is None:
        raise IncompleteBundle("bundle has no patch level")
    g = bundle.grid
    maps = {name: np.zeros((g.ny, g.nx), dtype=np.float64) for name in REPORT_MAPS + ("power", "via_count")}
    layers = sorted({l for p in bundle.patches for l in p.congestion})
    for l in layers:
        maps[f"congestion_m{l}"] = np.zeros((g.ny, g.nx), dtype=np.float64)
    for p in bundle.patches:
        maps["cell_density"][p.iy, p.ix] = p.cell_density
        maps["pin_density"][p.iy, p.ix] = p.pin_density
        maps["net_density"][p.iy, p.ix] = p.net_density
        maps["rudy"][p.iy, p.ix] = p.rudy
        maps["congestion"][p.iy, p.ix] = p.congestion_total
        maps["power"][p.iy, p.ix] = p.power
        maps["via_count"][p.iy, p.ix] = p.via_count
        for l, v in p.congestion.items():
            maps[f"congestion_m{l}"][p.iy, p.ix] = v
    return maps


def _levels(values: np.ndarray) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidMap(f"heatmap needs a non-empty 2-D map, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidMap("map contains NaN or infinite values")
    lo, hi = float(arr.min()), float(arr.max())
    if hi == lo:
        return np.full(arr.shape, 128, dtype=np.int64), True
    return np.rint((arr - lo) / (hi - lo) * 255.0).astype(np.int64), False


def _color(level: int, palette: Sequence[Tuple[int, int, int]]) -> Tuple[int, int, int]:
    if len(palette) == 1:
        return palette[0]
    pos = level / 255.0 * (len(palette) - 1)
    i = min(int(pos), len(palette) - 2)
    t = pos - i
    a, b = palette[i], palette[i + 1]
    return tuple(int(round(a[k] + (b[k] - a[k]) * t)) for k in range(3))


def render_heatmap(values, fmt: str = "pgm", palette: str = "heat", scale: int = 1) -> bytes:
    """
    Min-max mapped heatmap: min -> 0, max -> 255, constant maps mid-gray.

    Row 0 of the map (grid origin) is drawn at the bottom. Each grid cell is a
    scale x scale pixel block.
    """
    levels, constant = _levels(values)
    levels = levels[::-1]
    if scale < 1:
        raise InvalidMap(f"scale must be >= 1, got {scale}")
    h, w = levels.shape
    if fmt == "pgm":
        pixels = np.repeat(np.repeat(levels, scale, axis=0), scale, axis=1).astype(np.uint8)
        header = f"P5\n{w * scale} {h * scale}\n255\n".encode("ascii")
        return header + pixels.tobytes()
    if fmt == "svg":
        if palette not in PALETTES:
            raise InvalidMap(f"unknown palette {palette}")
        colors = PALETTES[palette]
        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * scale}" height="{h * scale}" '
            f'viewBox="0 0 {w * scale} {h * scale}" shape-rendering="crispEdges">'
        ]
        for r in range(h):
            for c in range(w):
                cr, cg, cb = (128, 128, 128) if constant else _color(int(levels[r, c]), colors)
                out.append(
                    f'<rect x="{c * scale}" y="{r * scale}" width="{scale}" height="{scale}" '
                    f'fill="#{cr:02x}{cg:02x}{cb:02x}"/>'
                )
        out.append("</svg>\n")
        return "\n".join(out).encode("utf-8")
    raise InvalidMap(f"unknown heatmap format {fmt}")


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return "n/a"
    return f"{value:.6g}"


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> List[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return lines


def _patch_columns(bundle: FoundationBundle) -> Dict[str, List[float]]:
    cols = {
        "cell_density": [p.cell_density for p in bundle.patches],
        "pin_density": [p.pin_density for p in bundle.patches],
        "net_density": [p.net_density for p in bundle.patches],
        "rudy": [p.rudy for p in bundle.patches],
        "congestion": [p.congestion_total for p in bundle.patches],
    }
    return {k: v for k, v in cols.items() if len(set(v)) > 1}


def build_report(
    bundle: FoundationBundle,
    fidelity: Optional[FidelityReport] = None,
    heatmaps: Optional[Dict[str, Tuple[str, float, float]]] = None,
) -> str:
    """Markdown report text; sections without data are left out."""
    if bundle.design is None:
        raise IncompleteBundle("report needs the design level")
    d = bundle.design
    s = summarize([bundle])
    lines = [f"# Design report: {d.name}", ""]

    lines += ["## Design statistics", ""]
    lines += _table(
        ["cells", "nets", "wires", "vias", "pins", "ports", "core usage"],
        [[str(d.counts.cells), str(d.counts.nets), str(d.counts.wires), str(d.counts.vias),
          str(d.counts.pins), str(d.counts.ports), _fmt(d.core_usage)]],
    )
    lines.append("")

    m = d.metrics
    lines += ["## Metrics", ""]
    lines += _table(
        ["design", "HPWL", "RWL", "max congestion", "WNS (s)", "TNS (s)", "violating paths", "power (W)"],
        [[d.name, str(m.total_hpwl), str(m.total_rwl), _fmt(m.max_congestion), _fmt(m.wns),
          _fmt(m.tns), str(m.violating_paths), _fmt(m.total_power)]],
    )
    lines += ["", "HPWL, RWL and congestion are intermediate metrics; WNS, TNS and power are PPA metrics.", ""]

    lines += ["## Instance classes", ""]
    lines += _table(["class", "share"], [[k, _fmt(v)] for k, v in d.class_shares.items()])
    lines.append("")

    lines += ["## Pin count distribution", ""]
    lines += _table(["pins", "nets"], [[str(k), str(v)] for k, v in s.pin_histogram.items()])
    lines += ["", f"2-3 pin nets: {_fmt(s.two_three_pin_share)} of {s.net_count}", ""]

    if s.layer_shares:
        lines += ["## Layer wirelength", ""]
        lines += _table(
            ["layer", "wirelength", "share"],
            [[f"M{k}", str(d.layer_wirelength.get(k, 0)), _fmt(v)] for k, v in s.layer_shares.items()],
        )
        lines.append("")

    if s.path_delay_quartiles is not None:
        lines += ["## Timing paths", ""]
        lines += _table(
            ["statistic", "min", "q1", "median", "q3", "max"],
            [["delay (s)"] + [_fmt(v) for v in s.path_delay_quartiles],
             ["stages"] + [_fmt(v) for v in s.path_stage_quartiles]],
        )
        lines += ["", "Quartiles use linear interpolation between closest ranks.", ""]

    if bundle.patches:
        cols = _patch_columns(bundle)
        if len(cols) >= 2:
            cm = correlate(cols)
            lines += ["## Patch feature correlation", ""]
            lines += _table([""] + cm.labels, [[cm.labels[i]] + [f"{v:.3f}" for v in row] for i, row in enumerate(cm.matrix)])
            lines.append("")

    if heatmaps:
        lines += ["## Heatmaps", ""]
        lines += _table(
            ["map", "file", "min (black)", "max (white)"],
            [[name, f"[{fname}]({fname})", _fmt(lo), _fmt(hi)] for name, (fname, lo, hi) in heatmaps.items()],
        )
        lines += ["", "Values are mapped linearly from the map minimum to its maximum; constant maps render mid-gray.", ""]

    if fidelity is not None:
        f = fidelity
        lines += ["## Fidelity", ""]
        lines += _table(
            ["metric", "original", "reconstructed", "ratio", "pass"],
            [
                ["wirelength", str(f.original.rwl), str(f.reconstructed.rwl), _fmt(f.wirelength_ratio), str(f.passed.get("wirelength"))],
                ["WNS", _fmt(f.original.wns), _fmt(f.reconstructed.wns), _fmt(f.wns_ratio), str(f.passed.get("wns"))],
                ["TNS", _fmt(f.original.tns), _fmt(f.reconstructed.tns), _fmt(f.tns_ratio), str(f.passed.get("tns"))],
                ["violating paths", str(f.violating_paths[0]), str(f.violating_paths[1]), "", str(f.passed.get("violating_paths"))],
                ["power", _fmt(f.original.power), _fmt(f.reconstructed.power), _fmt(f.power_ratio), str(f.passed.get("power"))],
            ],
        )
        lines += ["", f"Cell density correlation at {f.coarsen}x coarser grid: {_fmt(f.density_correlation)}", ""]
    return "\n".join(lines).rstrip("\n") + "\n"


class InsightService:
    def __init__(self, palette: str = "heat"):
        self.palette = palette

    def write_heatmaps(self, bundle: FoundationBundle, out_dir: Path) -> Dict[str, Tuple[str, float, float]]:
        maps = feature_maps(bundle)
        written: Dict[str, Tuple[str, float, float]] = {}
        for name in REPORT_MAPS:
            arr = maps[name]
            pgm = f"{name}.pgm"
            (out_dir / pgm).write_bytes(render_heatmap(arr, "pgm"))
            (out_dir / f"{name}.svg").write_bytes(render_heatmap(arr, "svg", self.palette))
            written[name] = (pgm, float(arr.min()), float(arr.max()))
        logger.info(f"📦 Wrote {len(written)} heatmaps to {out_dir}")
        return written

    def generate_report(self, ws) -> str:
        """Write report.md, stats.json and heatmaps into the workspace report directory."""
        bundle = load_bundle(ws)
        out = ws.report
        out.mkdir(exist_ok=True)
        heatmaps = self.write_heatmaps(bundle, out) if bundle.patches else None
        fidelity = None
        fid_path = out / "fidelity.json"
        if fid_path.is_file():
            fidelity = FidelityReport.model_validate(read_json(fid_path))
        text = build_report(bundle, fidelity, heatmaps)
        (out / "report.md").write_text(text, encoding="utf-8")
        if bundle.design is not None:
            write_json(out / "stats.json", summarize([bundle]))
        logger.info(f"✅ Report written to {out / 'report.md'}")
        return text


def generate_report(ws) -> str:
    return insight_service.generate_report(ws)


# Global service instance
insight_service = InsightService()
