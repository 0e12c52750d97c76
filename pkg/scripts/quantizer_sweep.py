"""Distortion and BER of Lloyd and uniform quantisers over the number of levels."""
import argparse
from pathlib import Path

from tsmc.harness import emit_csv, load_config, run_quantizer

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=ROOT / "configs" / "quantizer.cfg")
    ap.add_argument("--out", default="results/quantizer.csv")
    args = ap.parse_args()
    rows = run_quantizer(load_config(args.config))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    emit_csv(rows, args.out)
    for r in rows:
        print(f"{r.rule:<8} M={r.M:<3} D={r.distortion:.3g}  ber={r.ber:.4g}")


if __name__ == "__main__":
    main()
