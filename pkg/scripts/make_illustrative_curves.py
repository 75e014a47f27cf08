"""Generate data/illustrative_curves.csv.

These curves come from the model itself at the rating presets (500k runs,
seed 2024) and are rounded to four decimals. They are NOT historical default
data; they exist so the calibrate command has something realistic to fit.
"""
import argparse
from pathlib import Path

from jdfpt.calib import CalibrationSpec, HistoricalCurve, model_curve, write_curves
from jdfpt.config import RATING_PRESETS


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=500_000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "data" / "illustrative_curves.csv"))
    args = ap.parse_args()
    times = tuple(float(t) for t in range(1, 11))
    curves = []
    for label, p in RATING_PRESETS.items():
        params = dict(p, lam=0.1)
        spec = CalibrationSpec(labels=(label,), initial={label: params})
        rates = model_curve(spec.system_for(params), times, args.runs, args.seed)
        rounded, prev = [], 0.0
        for r in rates:
            prev = max(prev, round(float(r), 4))
            rounded.append(prev)
        curves.append(HistoricalCurve(label, times, tuple(rounded)))
        print(label, " ".join(f"{r:.4f}" for r in rounded))
    write_curves(args.out, curves)
    print("wrote", args.out)


if __name__ == "__main__":
    main()
