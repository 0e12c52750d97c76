"""BER of every scheme at equal mean release per slot."""
import argparse
from pathlib import Path

from tsmc.harness import emit_csv, load_config, run_ber
from tsmc.harness.config import SCHEMES

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=ROOT / "configs" / "ber_schemes.cfg")
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()
    Path(args.outdir).mkdir(parents=True, exist_ok=True)
    for scheme in SCHEMES:
        cfg = load_config(args.config, {"scheme": scheme})
        points = run_ber(cfg)
        emit_csv(points, Path(args.outdir) / f"ber_{scheme}.csv")
        print(scheme.ljust(12), " ".join(f"{p.ber:.3g}" for p in points))


if __name__ == "__main__":
    main()
