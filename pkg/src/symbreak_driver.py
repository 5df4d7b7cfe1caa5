#!/usr/bin/env python
"""driver for symbreak commands"""

import logging
import sys

import numpy as np

from . import graphdemo, ising, toynet
from .report_file import ReportFile, write_csv, write_json, write_phase_diagram_nc
from .share import (
    commands,
    common_args,
    get_thread_cnt,
    logging_config,
    read_cfg_file,
    repro_fname,
)
from .utils import make_rng, mkdir_exist_okay, spawn_rngs
from .verify_suite import RECORD_KEYS, VerifySuite, load_fixtures

# exit statuses
EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

PHASE_DIAGRAM_HEADER = ["jy", "h", "phase", "o_fm", "o_afm", "o_sx", "energy_per_site"]

GRAPH_RECORD_KEYS = ("graph", "n", "edges", "aut_order", "err_equivariant", "err_sympe")


def parse_args(args_list_in=None):
    """parse command line arguments, the first of which names the command"""

    args_list = [] if args_list_in is None else args_list_in
    command = args_list[0] if args_list and args_list[0] in commands else None
    parser, args_remaining = common_args(
        "probabilistic symmetry breaking experiments", command, args_list
    )
    return parser.parse_args(args_remaining)


def _int_list(val, cnt):
    """cnt ints from a comma separated cfg value, a single value is repeated"""
    vals = [int(item) for item in val.split(",")]
    if len(vals) == 1:
        vals = vals * cnt
    if len(vals) != cnt:
        msg = "expected %d comma separated values, got %s" % (cnt, val)
        raise ValueError(msg)
    return vals


def cmd_verify(args, config):  # pylint: disable=unused-argument
    """run the invariant battery, one report record per check"""
    logger = logging.getLogger(__name__)

    section = config["verify"]
    seed = section.getint("seed")
    suite = VerifySuite(
        load_fixtures(section["fixtures_fname"]),
        seed,
        section.getint("samples"),
        section.getfloat("alpha"),
        break_kernel=section.getboolean("break_kernel"),
        thread_cnt=get_thread_cnt(),
    )
    report = ReportFile(section["report_fname"], RECORD_KEYS)
    failed = []
    for record in suite.run(make_rng(seed)):
        report.write(record)
        if not record["passed"]:
            failed.append(record["name"])
    logger.info(
        "%d checks written to %s, %d failed",
        report.record_cnt,
        repro_fname(section, report.fname),
        len(failed),
    )
    for name in failed:
        logger.warning("check %s failed", name)
    return EXIT_FAIL if failed else EXIT_PASS


def cmd_phase_diagram(args, config):  # pylint: disable=unused-argument
    """analytic phase diagram on a jy × h slice, as CSV and netCDF"""
    logger = logging.getLogger(__name__)

    section = config["phase_diagram"]
    jy_vals, h_vals, records = ising.phase_diagram(
        jx=section.getfloat("jx"),
        jy_range=(section.getfloat("jy_min"), section.getfloat("jy_max")),
        h_range=(section.getfloat("h_min"), section.getfloat("h_max")),
        resolution=tuple(_int_list(section["resolution"], 2)),
        side=section.getint("l"),
        thread_cnt=get_thread_cnt(),
    )

    rows = [[record[key] for key in PHASE_DIAGRAM_HEADER] for record in records]
    write_csv(section["csv_fname"], PHASE_DIAGRAM_HEADER, rows)
    logger.info(
        "%d rows written to %s", len(rows), repro_fname(section, section["csv_fname"])
    )

    grid_shape = (len(jy_vals), len(h_vals))
    fields = {
        "phase": np.array(
            [ising.PHASE_CODES[ising.PhaseLabel(rec["phase"])] for rec in records]
        ).reshape(grid_shape)
    }
    for varname in ["o_fm", "o_afm", "o_sx", "o_sy", "energy_per_site"]:
        fields[varname] = np.array([rec[varname] for rec in records]).reshape(
            grid_shape
        )
    phase_names = [label.value for label in ising.PhaseLabel]
    write_phase_diagram_nc(section["nc_fname"], jy_vals, h_vals, fields, phase_names)
    return EXIT_PASS


def cmd_ising_train(args, config):  # pylint: disable=unused-argument
    """train a toy network variant, then evaluate in and out of distribution"""
    logger = logging.getLogger(__name__)

    section = config["ising_train"]
    seed = section.getint("seed")
    side = section.getint("l")
    corpus_rng, test_rng, train_rng, id_rng, ood_rng = spawn_rngs(make_rng(seed), 5)
    corpus = ising.random_corpus(corpus_rng, section.getint("train_size"), side)
    test_corpus = ising.random_corpus(test_rng, section.getint("test_size"), side)

    try:
        state = toynet.train(
            section["variant"],
            corpus,
            section.getint("epochs"),
            section.getfloat("step"),
            train_rng,
            channels=tuple(_int_list(section["channels"], 2)),
            energy_seed=section.getint("energy_seed"),
            seed=seed,
        )
    except RuntimeError as err:
        logger.error("training diverged: %s", err)
        return EXIT_FAIL

    write_csv(
        section["curve_fname"],
        ["epoch", "loss"],
        [
            {"epoch": epoch, "loss": loss}
            for epoch, loss in enumerate(state.loss_history)
        ],
    )
    state.dump(section["state_fname"])

    thread_cnt = get_thread_cnt()
    id_result = toynet.evaluate(state, test_corpus, False, id_rng, thread_cnt)
    ood_result = toynet.evaluate(state, test_corpus, True, ood_rng, thread_cnt)
    results = {
        "variant": state.variant,
        "l": side,
        "epochs": len(state.loss_history),
        "seed": seed,
        "final_loss": state.final_loss,
        "id_energy": id_result.mean,
        "id_stderr": id_result.stderr,
        "ood_energy": ood_result.mean,
        "ood_stderr": ood_result.stderr,
    }
    write_json(section["results_fname"], results)
    logger.info(
        "%s: ID energy %.6f +- %.6f, OOD energy %.6f +- %.6f",
        state.variant,
        id_result.mean,
        id_result.stderr,
        ood_result.mean,
        ood_result.stderr,
    )
    return EXIT_PASS


def cmd_graph_demo(args, config):  # pylint: disable=unused-argument
    """equivariant vs SymPE node embeddings on sampled graphs"""
    logger = logging.getLogger(__name__)

    section = config["graph_demo"]
    n = section.getint("n")
    p = section.getfloat("p")
    count = section.getint("count")
    if count < 0:
        msg = "graph count=%d must be >= 0" % count
        raise ValueError(msg)
    # validate n and p before any output is written
    graphdemo.erdos_renyi(n, p, make_rng(0))

    named_rng, sample_rng = spawn_rngs(make_rng(section.getint("seed")), 2)
    named_records = []
    for name in section["named_graphs"].split(","):
        graph = graphdemo.named_graph(name)
        v = graphdemo.node_breaking_vector(graph.n, named_rng)
        named_records.append(graphdemo.graph_record(graph, v, named_rng, name))

    report = ReportFile(section["report_fname"], GRAPH_RECORD_KEYS)
    records = graphdemo.graph_demo(n, p, count, sample_rng)
    for record in records:
        report.write(record)

    summary = graphdemo.summarize(records)
    summary["named_graphs"] = named_records
    write_json(section["summary_fname"], summary)
    logger.info("summary: %s", {key: summary[key] for key in sorted(summary)})
    return EXIT_PASS


_COMMAND_FCNS = {
    "verify": cmd_verify,
    "phase_diagram": cmd_phase_diagram,
    "ising_train": cmd_ising_train,
    "graph_demo": cmd_graph_demo,
}


def main(args):
    """run the command named in args, returning the exit status"""
    logger = logging.getLogger(__name__)

    try:
        config = read_cfg_file(args)
    except ValueError as err:
        logger.error("configuration error: %s", err)
        return EXIT_USAGE

    section = config[args.command]
    mkdir_exist_okay(section["workdir"])
    logging_config(args, section, filemode="w")

    try:
        return _COMMAND_FCNS[args.command](args, config)
    except ValueError as err:
        logger.error("configuration error: %s", err)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main(parse_args(sys.argv[1:])))
