"""nonneg-sdde <check|kernel|simulate|region|mcheck> SPEC.json [flags]

Exit codes: 0 ran and the verdict is positive, 1 ran and the verdict is
negative (or the model is non-stationary), 2 invalid input.
"""

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

from logger import logger
from src.carma.carma import region_to_csv
from src.cli.model_spec import ModelSpec, parse_model_spec
from src.config.config import get_config
from src.errors import NonNegSDDEError, NonStationaryModelError, SpecError
from src.pipeline.main import NonNegPipeline

COMMANDS = ("check", "kernel", "simulate", "region", "mcheck")
EXIT_OK, EXIT_NEGATIVE, EXIT_INVALID = 0, 1, 2


@dataclass
class CommandFlags:
    out: Optional[str] = None
    seed: Optional[int] = None
    dt: Optional[float] = None
    horizon: Optional[float] = None
    nmax: Optional[int] = None
    grid_step: Optional[float] = None

    def overrides(self) -> Dict[str, Any]:
        return {"seed": self.seed, "dt": self.dt, "horizon": self.horizon,
                "n_max": self.nmax, "grid_step": self.grid_step}

    def out_dir(self) -> Path:
        return Path(self.out or get_config().output_dir)


def _write_bundle(bundle: Dict[str, Any], out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "verdict.json"
    path.write_text(json.dumps(bundle, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _print_report(bundle: Dict[str, Any]) -> None:
    verdict = bundle.get("verdict")
    mark = "✅" if verdict == "non-negative" else "❌"
    print(f"{mark} {bundle['command']} ({bundle['kind']}): {verdict}")
    for name, value in bundle.get("existence", {}).items():
        print(f"   existence.{name}: {value}")
    for name, value in bundle.get("arms", {}).items():
        print(f"   {name}: {value}")
    failure = bundle.get("arms", {}).get("complete_monotonicity", {}).get("failure")
    if failure:
        print(f"   complete monotonicity fails at n={failure['n']}, x={failure['x']:g}: value {failure['value']:.10g}")
    for note in bundle.get("notes", []):
        print(f"   note: {note}")


def run_command(cmd: str, spec: ModelSpec, flags: Optional[CommandFlags] = None) -> int:
    """Run one command; returns the exit code and writes its files under flags.out"""
    flags = flags or CommandFlags()
    if cmd not in COMMANDS:
        print(f"❌ Unknown command {cmd!r}; expected one of {', '.join(COMMANDS)}")
        return EXIT_INVALID
    out_dir = flags.out_dir()
    try:
        pipeline = NonNegPipeline(spec, **flags.overrides())
        if cmd in ("check", "mcheck"):
            bundle = pipeline.mcheck() if cmd == "mcheck" else pipeline.check()
            path = _write_bundle(bundle, out_dir)
            _print_report(bundle)
            print(f"📄 Verdict bundle: {path}")
            return EXIT_OK if bundle["verdict"] == "non-negative" else EXIT_NEGATIVE
        if cmd == "kernel":
            grid = pipeline.kernel()
            name = "matrix_kernel.csv" if spec.kind == "msdde" else "kernel.csv"
            path = grid.to_csv(out_dir / name)
        elif cmd == "simulate":
            path = pipeline.simulate().to_csv(out_dir / "path.csv")
        else:
            rows = pipeline.region()
            path = region_to_csv(rows, out_dir / "region.csv")
            gap = [r.beta for r in rows if r.cor34 and not r.ball_tsai]
            if gap:
                print(f"   cor34 holds where ball_tsai fails for beta in [{min(gap):g}, {max(gap):g}]")
        print(f"📄 Wrote {path}")
        return EXIT_OK
    except NonStationaryModelError as e:
        logger.error(f"{cmd} failed: {e}")
        print(f"❌ {e}")
        return EXIT_NEGATIVE
    except (NonNegSDDEError, ValueError) as e:
        logger.error(f"{cmd} rejected the model: {e}", exc_info=True)
        print(f"❌ Invalid input: {e}")
        return EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nonneg-sdde",
        description="Existence, non-negativity and simulation of subordinator-driven SDDEs and CARMA processes",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("spec", help="path to a JSON model spec")
    parser.add_argument("--out", help="output directory (default: NONNEG_OUTPUT_DIR or ./out)")
    parser.add_argument("--seed", type=int, help="random seed for simulations")
    parser.add_argument("--dt", type=float, help="time step for kernels and paths")
    parser.add_argument("--horizon", type=float, help="kernel horizon")
    parser.add_argument("--nmax", type=int, help="highest derivative order in the complete monotonicity check")
    parser.add_argument("--grid-step", type=float, dest="grid_step", help="region scan step")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.spec).read_text(encoding="utf-8")
        spec = parse_model_spec(text)
    except FileNotFoundError:
        print(f"❌ Spec file not found: {args.spec}")
        return EXIT_INVALID
    except (OSError, UnicodeDecodeError) as e:
        logger.error(f"Cannot read spec {args.spec}: {e}")
        print(f"❌ Cannot read spec {args.spec}: {e}")
        return EXIT_INVALID
    except SpecError as e:
        logger.error(f"Spec rejected: {e}")
        print(f"❌ {e}")
        return EXIT_INVALID
    flags = CommandFlags(args.out, args.seed, args.dt, args.horizon, args.nmax, args.grid_step)
    return run_command(args.command, spec, flags)


if __name__ == "__main__":
    sys.exit(main())
