"""TS-with-precoder BER over a power sweep, next to the analytic tail."""
import argparse
from pathlib import Path

from tsmc.harness import emit_csv, load_config, run_ber
from tsmc.receiver import ts_ber_analytic

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=ROOT / "configs" / "ber_ts.cfg")
    ap.add_argument("--out", default="results/ber_ts.csv")
    args = ap.parse_args()
    cfg = load_config(args.config)
    points = run_ber(cfg)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    emit_csv(points, args.out)
    for p in points:
        print(f"beta={p.power:.3g}  ber={p.ber:.4g} +- {p.ci95:.2g}  "
              f"analytic={ts_ber_analytic(p.power, cfg.V_R):.4g}")


if __name__ == "__main__":
    main()
