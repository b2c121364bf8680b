"""Command-line interface for game-lab."""

import argparse
import io
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from loguru import logger

from . import aloha, powerctl, variations
from .__about__ import __version__
from .aloha import AlohaGame, CostBasis
from .config import config
from .dynamics import (
    aloha_field,
    basin_sample,
    classify,
    descent_report,
    evaluate_grid,
    integrate,
    sweep_alpha,
)
from .powerctl import PowerGame
from .scenario import Scenario, load_scenario, resolve_field, resolve_lyapunov
from .utils import ConfigurationError, GameLabException, format_json_response
from .variations import LinearGame

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

Result = Union[pd.DataFrame, Dict[str, Any]]


class GameLabCLI:
    """Scenario-driven front end for the solvers."""

    def __init__(self, log_level: Optional[str] = None):
        if log_level:
            config.app.log_level = log_level
        self.setup_logging()

    def setup_logging(self):
        """Setup logging configuration; stdout is reserved for results."""
        logger.remove()
        logger.add(
            sys.stderr,
            level=config.app.log_level,
            format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>",
        )
        if config.app.log_file:
            logger.add(
                config.app.log_file,
                level="DEBUG",
                format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}",
                rotation="10 MB",
                retention="7 days",
            )

    # nep

    def cmd_nep(self, scenario: Scenario) -> Dict[str, Any]:
        """Equilibrium report for the scenario's game."""
        game = scenario.game
        if isinstance(game, AlohaGame):
            return self._aloha_nep(game)
        if isinstance(game, PowerGame):
            return self._power_nep(game)
        return self._linear_nep(game)

    def _aloha_nep(self, game: AlohaGame) -> Dict[str, Any]:
        neps = aloha.interior_neps(game)
        report: Dict[str, Any] = {
            "kind": "aloha",
            "alpha": float(game.alpha),
            "discriminant": game.discriminant,
            "equilibria": [],
        }
        if not neps:
            report["note"] = f"no interior NEP: discriminant {game.discriminant:.6g} is negative"
        for index, nep in enumerate(neps):
            entry: Dict[str, Any] = {
                "index": index,
                "q": list(nep.q),
                "residual": aloha.nep_residual(game, nep.q),
                "outside_clip": nep.outside_clip,
            }
            entry.update(aloha.stability_criteria(game, nep.q).to_dict())
            if nep.outside_clip:
                logger.warning(f"NEP {nep.q} lies outside the clip box; dynamics not classified")
            else:
                for kind in ("selfish", "altruistic", "partial"):
                    entry[kind] = self._classify_or_error(lambda k=kind: classify(aloha_field(game, k), nep.q))
            report["equilibria"].append(entry)
        return report

    def _power_nep(self, game: PowerGame) -> Dict[str, Any]:
        nep = powerctl.power_nep(game)
        entry: Dict[str, Any] = {"index": 0, **nep.to_dict()}
        report: Dict[str, Any] = {"kind": "power", "alpha": float(game.alpha), "equilibria": [entry]}
        if game.n_flows == 2:
            report["stability"] = powerctl.stability_products(game).to_dict()
            report["hessians"] = {
                "power_selfish": np.linalg.eigvalsh(powerctl.lyapunov_power_selfish_hessian(game)).tolist(),
                "power_altruistic": np.linalg.eigvalsh(powerctl.lyapunov_power_altruistic_hessian(game)).tolist(),
            }
            if nep.feasible:
                cap = powerctl.power_cap(game)
                for kind in ("selfish", "altruistic"):
                    entry[kind] = self._classify_or_error(
                        lambda k=kind: classify(powerctl.power_field(game, k, cap), nep.q)
                    )
        return report

    def _linear_nep(self, game: LinearGame) -> Dict[str, Any]:
        saddle = variations.linear_saddle(game)
        equilibria: List[Dict[str, Any]] = [
            {"index": k, "q": list(point), "type": "endpoint"} for k, point in enumerate(variations.linear_endpoints())
        ]
        equilibria.append({"index": len(equilibria), "q": saddle.tolist(), "type": "saddle"})
        return {
            "kind": "linear",
            "alpha": float(game.alpha),
            "cost_basis": game.cost_basis.value,
            "equilibria": equilibria,
        }

    @staticmethod
    def _classify_or_error(run) -> Dict[str, Any]:
        try:
            return run().to_dict()
        except GameLabException as e:
            logger.warning(f"Classification failed: {e.message}")
            return {"error": e.message, "error_code": e.error_code}

    # simulate

    def cmd_simulate(self, scenario: Scenario) -> pd.DataFrame:
        """Trajectory table with columns t, q_k, lyapunov, descent_flag."""
        params = scenario.simulate
        vector_field = resolve_field(scenario.game, params.dynamics)
        if params.q0 is not None:
            q0 = np.asarray(params.q0, dtype=float)
        else:
            rng = np.random.default_rng(scenario.seed)
            q0 = rng.uniform(vector_field.lower, vector_field.upper)
            logger.info(f"Random start {q0.tolist()} from seed {scenario.seed}")
        lyapunov = resolve_lyapunov(scenario.game, params.lyapunov) if params.lyapunov else None
        traj = integrate(vector_field, q0, params.dt, params.t_end, lyapunov=lyapunov)
        if lyapunov is not None:
            summary = descent_report(traj)
            logger.info(f"Descent check: {summary.violations} violation(s), max increment {summary.max_increment:.3g}")
        return traj.to_frame()

    # sweep-alpha

    def cmd_sweep(self, scenario: Scenario) -> Dict[str, Any]:
        """Stability table over alpha plus located thresholds."""
        game = scenario.game
        params = scenario.sweep
        if isinstance(game, PowerGame):
            if game.cost_basis is not CostBasis.POWER:
                raise ConfigurationError(
                    'sweep-alpha on a power game needs cost_basis "power"', {"cost_basis": game.cost_basis.value}
                )
            frame = powerctl.power_cost_alpha_sweep(game, params.alphas)
            return {"table": frame, "thresholds": []}
        if not isinstance(game, AlohaGame):
            raise ConfigurationError("sweep-alpha needs an aloha or power game", {"kind": game.kind})

        neps = [n.q for n in aloha.interior_neps(game)]
        if params.nep_indices is not None:
            bad = [k for k in params.nep_indices if not 0 <= k < len(neps)]
            if bad:
                raise ConfigurationError(
                    f"NEP indices {bad} out of range; the game has {len(neps)} interior NEP(s)",
                    {"nep_indices": params.nep_indices},
                )
            neps = [neps[k] for k in params.nep_indices]
        sweep = sweep_alpha(game, neps=neps, alphas=params.alphas, width=params.width)
        for threshold in sweep.thresholds:
            logger.info(
                f"NEP {threshold.nep_index}: switch at alpha ~ {threshold.alpha:.4f}, "
                f"{'stable' if threshold.stable_above else 'unstable'} above"
            )
        return {"table": sweep.to_frame(), "thresholds": [t.to_dict() for t in sweep.thresholds]}

    # contour

    def cmd_contour(self, scenario: Scenario) -> pd.DataFrame:
        """Grid of (q1, q2, value) for a named Lyapunov function."""
        params = scenario.contour
        return evaluate_grid(resolve_lyapunov(scenario.game, params.function), params.grid)

    # basin

    def cmd_basin(self, scenario: Scenario) -> pd.DataFrame:
        """Grid of attractor labels."""
        params = scenario.basin
        game = scenario.game
        vector_field = resolve_field(game, params.dynamics)
        attractors = dict(params.attractors) if params.attractors else self._default_attractors(game)
        if not attractors:
            raise ConfigurationError("No attractors to label the basin grid with")
        grid = basin_sample(
            vector_field,
            params.grid,
            attractors,
            t_end=params.t_end,
            capture_radius=params.capture_radius,
            dt=params.dt,
            mode=params.mode,
        )
        return grid.to_frame()

    @staticmethod
    def _default_attractors(game) -> Dict[str, Sequence[float]]:
        if isinstance(game, LinearGame):
            return variations.linear_attractors(game)
        if isinstance(game, PowerGame):
            nep = powerctl.power_nep(game)
            return {"nep": nep.q.tolist()} if nep.feasible else {}
        return {f"nep_{k}": n.q for k, n in enumerate(aloha.interior_neps(game)) if not n.outside_clip}


THRESHOLD_COLUMNS = ["nep_index", "alpha", "bracket_lo", "bracket_hi", "stable_above"]


def _threshold_frame(thresholds: List[Dict[str, Any]]) -> pd.DataFrame:
    rows = [
        {
            "nep_index": t["nep_index"],
            "alpha": t["alpha"],
            "bracket_lo": t["bracket"][0],
            "bracket_hi": t["bracket"][1],
            "stable_above": t["stable_above"],
        }
        for t in thresholds
    ]
    return pd.DataFrame(rows, columns=THRESHOLD_COLUMNS)


def render(result: Result, fmt: str) -> str:
    """
    Serialize a command result; CSV floats keep 17 significant digits.

    A sweep with located thresholds renders in CSV as the table, a blank line
    and a second block with columns nep_index, alpha, bracket_lo, bracket_hi,
    stable_above.
    """
    if isinstance(result, dict) and "table" in result:
        if fmt == "csv":
            text = render(result["table"], fmt)
            if result["thresholds"]:
                text += "\n" + render(_threshold_frame(result["thresholds"]), fmt)
            return text
        return format_json_response(
            {"table": result["table"].to_dict(orient="records"), "thresholds": result["thresholds"]}
        )
    if isinstance(result, pd.DataFrame):
        if fmt == "json":
            return format_json_response(result.to_dict(orient="records"))
        buffer = io.StringIO()
        result.to_csv(buffer, index=False, float_format="%.17g", lineterminator="\n")
        return buffer.getvalue()
    if fmt == "csv":
        if not result["equilibria"]:
            logger.warning(result.get("note", "No equilibria to tabulate"))
            return ""
        return render(pd.json_normalize(result["equilibria"]), fmt)
    return format_json_response(result)


def write_output(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info(f"Wrote {path}")


COMMANDS = {
    "nep": ("cmd_nep", "json", "Report interior equilibria and their stability"),
    "simulate": ("cmd_simulate", "csv", "Integrate the Jacobi dynamics from one start"),
    "sweep-alpha": ("cmd_sweep", "csv", "Classify equilibria across alpha"),
    "contour": ("cmd_contour", "csv", "Tabulate a Lyapunov function on a grid"),
    "basin": ("cmd_basin", "csv", "Label grid starts by the attractor they reach"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="game-lab", description="Altruism games for slotted ALOHA and SINR power control")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, _, help_text) in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, help="Scenario JSON file")
        sub.add_argument("--out", help="Output file (default: standard output)")
        sub.add_argument("--format", choices=["csv", "json"], help="Output format")
        sub.add_argument(
            "--log-level",
            type=str,
            choices=["DEBUG", "INFO", "WARNING", "ERROR"],
            help="Set log level",
        )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    cli = GameLabCLI(args.log_level)
    method, default_format, _ = COMMANDS[args.command]

    try:
        scenario = load_scenario(args.config)
        result = getattr(cli, method)(scenario)
        write_output(render(result, args.format or default_format), args.out)
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e.message}")
        return EXIT_CONFIG
    except GameLabException as e:
        logger.error(f"{e.error_code}: {e.message}")
        return EXIT_NUMERIC
    return EXIT_OK


def cli_main():
    """Synchronous entry point for the CLI command."""
    sys.exit(main())


if __name__ == "__main__":
    cli_main()
