"""BER when type B diffuses at a different rate from the one the precoder assumes."""
import argparse
from pathlib import Path

from tsmc.harness import emit_csv, load_config, run_mismatch

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=ROOT / "configs" / "mismatch.cfg")
    ap.add_argument("--out", default="results/mismatch.csv")
    args = ap.parse_args()
    rows = run_mismatch(load_config(args.config))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    emit_csv(rows, args.out)
    for r in rows:
        print(f"D_B/D_A={r.ratio:<4}  beta={r.power:.3g}  ber={r.ber:.4g} +- {r.ci95:.2g}")


if __name__ == "__main__":
    main()
