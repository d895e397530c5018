"""
chipvec command line
init -> generate / ingest -> vectorize -> report / fidelity / dataset / dse
"""
import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from exceptions import ChipVecError, ConfigError
from models.schemas import OperationResult, ParamSpace, SyntheticParams
from services.bundle_service import load_bundle, save_bundle
from services.dataset_service import TASKS, build_dataset
from services.dse_service import OBJECTIVES, DseService
from services.fidelity_service import FidelityService, reconstruct_design
from services.ingest_service import read_design, write_design
from services.insight_service import generate_report
from services.def_service import write_def
from services.synthetic_service import generate_synthetic
from services.vector_service import LEVELS, VectorService
from utils import canonical_json, error_field, error_message, read_json, write_json
from workspace import create_workspace, open_workspace

logger = logging.getLogger("chipvec")


def _threads(args) -> Optional[int]:
    if getattr(args, "threads", None):
        return args.threads
    env = os.getenv("CHIPVEC_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError("CHIPVEC_THREADS", f"not an integer: {env!r}")
        if value < 1:
            raise ConfigError("CHIPVEC_THREADS", "must be >= 1")
        return value
    return None


def _read_json_arg(path: str, field: str) -> Any:
    try:
        return read_json(Path(path))
    except (OSError, ValueError) as e:
        raise ConfigError(field, f"cannot read {path}: {e}")


def cmd_init(args) -> OperationResult:
    config: Optional[Dict[str, Any]] = None
    if args.config:
        config = _read_json_arg(args.config, "config")
    ws = create_workspace(args.workspace, config)
    return OperationResult(success=True, message=f"workspace ready at {ws.root}",
                           data={"directories": sorted(ws.dirs)})


def cmd_generate(args) -> OperationResult:
    ws = open_workspace(args.workspace)
    base = ws.config.synthetic or SyntheticParams()
    updates = {k: v for k, v in {
        "name": args.name,
        "seed": args.seed,
        "n_instances": args.instances,
        "n_nets": args.nets,
        "n_routing_layers": args.layers,
        "profile": args.profile,
    }.items() if v is not None}
    try:
        params = SyntheticParams.model_validate({**base.model_dump(), **updates})
    except ValidationError as e:
        raise ConfigError(f"synthetic.{error_field(e)}", error_message(e) or "")
    design = generate_synthetic(params)
    files = write_design(ws, design)
    ws.config = ws.config.model_copy(update={
        "synthetic": params,
        "def_file": files["def"],
        "lef_file": files["lef"],
        "tech_sidecar": files["sidecar"],
    })
    ws.save_config()
    return OperationResult(success=True, message=f"generated {design.name}", data={
        "design": design.name,
        "instances": len(design.instances),
        "nets": len(design.nets),
        "files": files,
    })


def cmd_ingest(args) -> OperationResult:
    ws = open_workspace(args.workspace)
    updates = {k: v for k, v in {"def_file": args.def_file, "lef_file": args.lef, "tech_sidecar": args.sidecar}.items() if v}
    if updates:
        ws.config = ws.config.model_copy(update=updates)
    design = read_design(ws)
    if updates:
        ws.save_config()
    return OperationResult(success=True, message=f"ingested {design.name}", data={
        "design": design.name,
        "instances": len(design.instances),
        "ports": len(design.ports),
        "nets": len(design.nets),
        "routed_nets": sum(1 for n in design.nets if n.is_routed),
    }, errors=design.diagnostics or None)


def cmd_vectorize(args) -> OperationResult:
    ws = open_workspace(args.workspace, _threads(args))
    levels = list(LEVELS) if not args.level or "all" in args.level else list(dict.fromkeys(args.level))
    design = read_design(ws)
    diagnostics: List[str] = list(design.diagnostics)
    bundle = VectorService(ws.config).vectorize(design, levels, diagnostics)
    manifest = save_bundle(ws, bundle, design.name)
    return OperationResult(success=True, message=f"vectorized {design.name}", data={
        "levels": levels,
        "counts": {k: v.count for k, v in manifest.levels.items()},
    }, errors=diagnostics or None)


def cmd_fidelity(args) -> OperationResult:
    ws = open_workspace(args.workspace, _threads(args))
    original = read_design(ws)
    reconstructed = reconstruct_design(load_bundle(ws), original.tech)
    ws.path("result/reconstructed.def").write_text(write_def(reconstructed), encoding="utf-8")
    report = FidelityService(ws.config).compare(original, reconstructed, args.coarsen)
    write_json(ws.path("report/fidelity.json"), report)
    return OperationResult(success=True, message=f"fidelity of {report.design}", data={
        "wirelength_ratio": report.wirelength_ratio,
        "wns_ratio": report.wns_ratio,
        "tns_ratio": report.tns_ratio,
        "power_ratio": report.power_ratio,
        "density_correlation": report.density_correlation,
        "passed": report.passed,
    }, errors=report.diagnostics or None)


def cmd_report(args) -> OperationResult:
    ws = open_workspace(args.workspace)
    generate_report(ws)
    return OperationResult(success=True, message="report written", data={"report": "report/report.md"})


def cmd_dataset(args) -> OperationResult:
    ws = open_workspace(args.workspace, _threads(args))
    tasks = list(TASKS) if not args.task or "all" in args.task else list(dict.fromkeys(args.task))
    manifest = build_dataset(ws, tasks, args.with_ or [])
    return OperationResult(success=True, message=f"dataset for {len(manifest.designs)} designs", data={
        "tasks": manifest.task.split(",") if manifest.task else [],
        "counts": manifest.counts,
        "split": manifest.split,
    }, errors=manifest.diagnostics or None)


def cmd_dse(args) -> OperationResult:
    ws = open_workspace(args.workspace)
    space = None
    if args.space:
        try:
            space = ParamSpace.model_validate(_read_json_arg(args.space, "space"))
        except ValidationError as e:
            raise ConfigError(f"space.{error_field(e)}", error_message(e) or "")
    budget = args.budget if args.budget is not None else ws.config.dse.budget
    summary = DseService(ws.config.dse).explore(args.objective, budget, args.seed, ws.report, space, args.random)
    return OperationResult(success=True, message=f"explored {args.objective}", data=summary)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chipvec", description="Design-to-vector toolkit for chip layouts")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("init", help="create a workspace")
    p.add_argument("workspace")
    p.add_argument("--config", help="JSON file with workspace settings")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("generate", help="generate a synthetic placed and routed design")
    p.add_argument("workspace")
    p.add_argument("--name")
    p.add_argument("--seed", type=int)
    p.add_argument("--instances", type=int)
    p.add_argument("--nets", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--profile", choices=["uniform", "hotspots"])
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("ingest", help="parse and validate the workspace inputs")
    p.add_argument("workspace")
    p.add_argument("--def", dest="def_file")
    p.add_argument("--lef")
    p.add_argument("--sidecar")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("vectorize", help="extract Foundation Data")
    p.add_argument("workspace")
    p.add_argument("--level", action="append", choices=list(LEVELS) + ["all"])
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_vectorize)

    p = sub.add_parser("fidelity", help="rebuild the design from its vectors and compare")
    p.add_argument("workspace")
    p.add_argument("--coarsen", type=int, default=1)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("report", help="write statistics, heatmaps and report.md")
    p.add_argument("workspace")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("dataset", help="assemble AI-ready datasets")
    p.add_argument("workspace")
    p.add_argument("--with", dest="with_", action="append", metavar="WORKSPACE")
    p.add_argument("--task", action="append", choices=list(TASKS) + ["all"])
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("dse", help="multi-objective parameter search on a built-in objective")
    p.add_argument("workspace")
    p.add_argument("--objective", choices=sorted(OBJECTIVES), default="placement")
    p.add_argument("--budget", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--space", help="JSON parameter space")
    p.add_argument("--random", action="store_true", help="random search baseline")
    p.set_defaults(func=cmd_dse)
    return parser


def configure_logging() -> None:
    level = os.getenv("CHIPVEC_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
        force=True,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    try:
        result = args.func(args)
    except ChipVecError as e:
        logger.error(f"❌ {args.verb} failed: {e}")
        return 1
    sys.stdout.write(canonical_json(result))
    logger.info(f"✅ {args.verb}: {result.message}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
