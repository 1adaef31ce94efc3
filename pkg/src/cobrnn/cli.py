"""Command-line interface: ``cobrnn {generate,pca,optimize,train,evaluate}``.

Exit codes: 0 success, 1 usage error, 2 I/O or format error, 3 numeric failure.
"""

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import dataset as ds_mod
from ._rng import derive_seed
from .benchmarks import BENCHMARKS
from .config import RunConfig, parse_config
from .cuttlefish import CuttlefishConfig, cf_optimize
from .exceptions import FormatError, NumericError, UsageError
from .pca import fit_rows
from .pipeline import (InnerConfig, SearchConfig, TrainedModel, config_digest, evaluate_model,
                       train_co_brnn)
from .preprocess import PreprocessConfig, preprocess_images

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(doc):
    return json.dumps(doc, indent=1) + "\n"


def _load_config(args, subcommand):
    if args.config:
        cfg = parse_config(Path(args.config).read_text())
    else:
        cfg = RunConfig()
    for key, attr in FLAG_KEYS.get(subcommand, {}).items():
        value = getattr(args, attr, None)
        if value is not None:
            cfg.set(key, value)
    cfg.require(subcommand)
    return cfg


def _preprocess_config(cfg):
    return PreprocessConfig(cfg["preprocess.mode"], cfg["preprocess.denoise_window"])


def cmd_generate(args, cfg):
    keys = cfg.prefixed("generate")
    data = ds_mod.generate_synthetic(cfg["generate.classes"], cfg["generate.per_class"],
                                     cfg["generate.height"], cfg["generate.width"],
                                     cfg["generate.noise"], cfg["seed"])
    manifest = ["manifest: " + line for line in cfg.manifest(keys).splitlines()]
    atomic_write(args.out, ds_mod.format_scenes(data, manifest))
    return f"wrote {len(data)} samples ({data.n_classes} classes, {data.height}x{data.width}) to {args.out}"


def cmd_pca(args, cfg):
    keys = cfg.prefixed("preprocess", "pca")
    data = ds_mod.load_scenes(args.data)
    model = fit_rows(preprocess_images(data.images, _preprocess_config(cfg)), cfg["pca.k"])
    doc = {"format": "pca v1", "manifest": cfg.manifest(keys).splitlines(), **model.to_dict()}
    atomic_write(args.out, _dump(doc))
    return f"wrote {model.n_components} components (explained {model.explained_ratio.sum():.4f}) to {args.out}"


def cmd_optimize(args, cfg):
    keys = [k for k in cfg.prefixed("optimize", "co")
            if not k.startswith("co.") or k in ("co.group_fractions", "co.q1", "co.q2", "co.u1", "co.u2")]
    fn, bound, _ = BENCHMARKS[cfg["optimize.function"]]
    co = CuttlefishConfig(dim=cfg["optimize.dim"], lower=-bound, upper=bound,
                          pop_size=cfg["optimize.pop_size"],
                          group_fractions=cfg["co.group_fractions"], q1=cfg["co.q1"],
                          q2=cfg["co.q2"], u1=cfg["co.u1"], u2=cfg["co.u2"],
                          budget=cfg["optimize.budget"], seed=cfg["seed"])
    result = cf_optimize(co, fn)
    manifest = cfg.manifest(keys)
    lines = [f"# {line}" for line in manifest.splitlines()] + ["iter,best_fitness"]
    lines += [f"{i},{v!r}" for i, v in enumerate(result.curve)]
    atomic_write(args.curve, "\n".join(lines) + "\n")
    atomic_write(args.best, _dump({"function": cfg["optimize.function"],
                                   "point": result.best_point.tolist(),
                                   "fitness": result.best_fitness,
                                   "evals": result.evals_used,
                                   "manifest": manifest.splitlines()}))
    return f"{cfg['optimize.function']} d={co.dim}: best fitness {result.best_fitness:.6g} after {result.evals_used} evaluations"


def _train_keys(cfg):
    return cfg.prefixed("preprocess", "co", "brnn", "train")


def cmd_train(args, cfg):
    keys = _train_keys(cfg)
    manifest = cfg.manifest(keys)
    data = ds_mod.load_scenes(cfg["paths.train"])
    seed = cfg["seed"]
    train, val = ds_mod.split(data, ds_mod.SplitSpec(1.0 - cfg["train.val_ratio"], True,
                                                     derive_seed(seed, "val-split")))
    search = SearchConfig(pop_size=cfg["co.pop_size"], budget=cfg["co.budget"],
                          group_fractions=cfg["co.group_fractions"], q1=cfg["co.q1"],
                          q2=cfg["co.q2"], u1=cfg["co.u1"], u2=cfg["co.u2"])
    inner = InnerConfig(search_epochs=cfg["brnn.search_epochs"], epochs=cfg["brnn.epochs"],
                        batch=cfg["brnn.batch"], grad_clip=cfg["brnn.grad_clip"],
                        init_scale=cfg["brnn.init_scale"], preprocess=_preprocess_config(cfg))
    model, log = train_co_brnn(train, val, search, inner, seed, config_digest(manifest))
    model.provenance["search_curve"] = log.curve
    doc = model.to_dict()
    doc["manifest"] = manifest.splitlines()
    atomic_write(cfg["paths.model"], _dump(doc))
    summary = f"trained {log.best_hyper} (search fitness {log.best_fitness:.4g}, {log.evals_used} evals)"
    if cfg["paths.test"]:
        report = evaluate_model(model, ds_mod.load_scenes(cfg["paths.test"]))
        if cfg["paths.report"]:
            atomic_write(cfg["paths.report"], _dump({**report.to_dict(),
                                                     "manifest": manifest.splitlines()}))
        summary += f"; test accuracy {report.accuracy:.4f}"
    return summary


def cmd_evaluate(args, cfg):
    doc = json.loads(Path(cfg["paths.model"]).read_text())
    model = TrainedModel.from_dict(doc)
    report = evaluate_model(model, ds_mod.load_scenes(cfg["paths.test"]))
    atomic_write(cfg["paths.report"], _dump({**report.to_dict(),
                                             "manifest": doc.get("manifest", [])}))
    return f"accuracy {report.accuracy:.4f}, macro F-score {report.f_score:.4f}"


# config key -> argparse dest, per subcommand
FLAG_KEYS = {
    "generate": {"seed": "seed", "generate.classes": "classes", "generate.per_class": "per_class",
                 "generate.height": "height", "generate.width": "width",
                 "generate.noise": "noise"},
    "pca": {"seed": "seed", "pca.k": "k"},
    "optimize": {"seed": "seed", "optimize.function": "function", "optimize.dim": "dim",
                 "optimize.budget": "budget", "optimize.pop_size": "pop_size"},
    "train": {"seed": "seed", "paths.train": "train", "paths.test": "test",
              "paths.model": "out", "paths.report": "report"},
    "evaluate": {"paths.model": "model", "paths.test": "data", "paths.report": "out"},
}

COMMANDS = {"generate": cmd_generate, "pca": cmd_pca, "optimize": cmd_optimize,
            "train": cmd_train, "evaluate": cmd_evaluate}


def build_parser():
    parser = _Parser(prog="cobrnn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key = value configuration file")
        return p

    p = add("generate", "write a synthetic scenes v1 dataset")
    p.add_argument("--classes", type=int)
    p.add_argument("--per-class", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    p = add("pca", "fit row-wise PCA on a scenes file")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    p = add("optimize", "run the cuttlefish optimiser on a benchmark function")
    p.add_argument("--function", choices=sorted(BENCHMARKS))
    p.add_argument("--dim", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--pop-size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--curve", default="curve.csv", help="convergence CSV (iter,best_fitness)")
    p.add_argument("--best", default="best.json", help="final point JSON")

    p = add("train", "search hyperparameters and train a CO-BRNN model")
    p.add_argument("--train")
    p.add_argument("--test")
    p.add_argument("--out", help="model JSON path")
    p.add_argument("--report", help="report JSON path (needs --test)")
    p.add_argument("--seed", type=int)

    p = add("evaluate", "score a trained model on a scenes file")
    p.add_argument("--model")
    p.add_argument("--data")
    p.add_argument("--out", help="report JSON path")
    return parser


def run_subcommand(argv):
    try:
        args = build_parser().parse_args(argv)
        cfg = _load_config(args, args.command)
        summary = COMMANDS[args.command](args, cfg)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_IO
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(summary)
    return EXIT_OK


def main(argv=None):
    sys.exit(run_subcommand(sys.argv[1:] if argv is None else argv))
