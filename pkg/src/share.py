"""functions shared across multiple modules"""

import argparse
import configparser
import logging
import os
import sys
from os import environ, path
from os.path import dirname, realpath

import git

from .utils import mkdir_exist_okay

# commands supported by symbreak_driver, in the order they are listed in usage text
commands = ["verify", "phase_diagram", "ising_train", "graph_demo"]

cfg_override_args = {
    "out": {"section": "DEFAULT", "override_var": "workdir"},
    "seed": {"section": "DEFAULT"},
    "logging_reproducible": {
        "section": "DEFAULT",
        "action": "store_true",
        "override_val": "True",
    },
    "logging_level": {"section": "DEFAULT"},
    "alpha": {"command": "verify", "section": "verify"},
    "samples": {"command": "verify", "section": "verify"},
    "break_kernel": {
        "command": "verify",
        "flag": "break-kernel",
        "section": "verify",
        "action": "store_true",
        "override_val": "True",
    },
    "resolution": {"command": "phase_diagram", "section": "phase_diagram"},
    "l": {"command": "ising_train", "section": "ising_train"},
    "epochs": {"command": "ising_train", "section": "ising_train"},
    "variant": {"command": "ising_train", "section": "ising_train"},
    "n": {"command": "graph_demo", "section": "graph_demo"},
    "p": {"command": "graph_demo", "section": "graph_demo"},
    "count": {"command": "graph_demo", "section": "graph_demo"},
}


def get_repo_root():
    """return top level directory of the repo, with or without a git work tree"""
    src_dir = dirname(realpath(__file__))
    try:
        return git.Repo(src_dir, search_parent_directories=True).working_dir
    except (git.InvalidGitRepositoryError, git.NoSuchPathError):
        return dirname(src_dir)


def common_args(description, command, args_list):
    """instantiate and return a parser, using common options"""

    parser = argparse.ArgumentParser(
        description=description,
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument(
        "command", help="command to be run", choices=commands, default=command
    )
    parser.add_argument(
        "--cfg_fname",
        help="name of configuration file",
        default=path.join(get_repo_root(), "input", "symbreak", "symbreak.cfg"),
    )

    # add arguments that override cfg file
    for argname, metadata in cfg_override_args.items():
        # skip arguments that are specific to a different command
        if "command" in metadata and command != metadata["command"]:
            continue
        override_var = metadata.get("override_var", argname)
        flag = "--%s" % metadata.get("flag", argname)
        if "action" not in metadata:
            parser.add_argument(
                flag,
                dest=argname,
                help="override %s from cfg file" % override_var,
                default=None,
            )
        elif metadata["action"] in ["store_true"]:
            parser.add_argument(
                flag,
                dest=argname,
                help="override %s from cfg file" % override_var,
                action=metadata["action"],
            )
        else:
            msg = "action = %s not implemented" % metadata["action"]
            raise NotImplementedError(msg)

    return parser, args_list


def read_cfg_file(args):
    """
    read cfg file
    set defaults common to all occurrances
    """
    cfg_fname = args.cfg_fname

    defaults = {key: environ.get(key, "") for key in ["HOME", "USER"]}
    defaults["repo_root"] = get_repo_root()
    config = configparser.ConfigParser(defaults, allow_no_value=True)
    with open(cfg_fname) as fptr:
        config.read_file(fptr)

    _check_config_no_values(cfg_fname, config)

    _apply_cfg_override_args(args, config)

    # write cfg contents to a file, if requested
    cfg_out_fname = config[args.command]["cfg_out_fname"]
    if cfg_out_fname is not None:
        mkdir_exist_okay(dirname(cfg_out_fname))
        with open(cfg_out_fname, "w") as fptr:
            config.write(fptr)

    return config


def _check_config_no_values(cfg_fname, config):
    """verify that only names in no_value_allowed have no value"""
    # no_value_allowed is allowed to have no value or not be present
    if "no_value_allowed" in config["DEFAULT"]:
        no_value_allowed = config["DEFAULT"]["no_value_allowed"]
    else:
        no_value_allowed = None
    nva_list = [] if no_value_allowed is None else no_value_allowed.split(",")
    nva_list.append("no_value_allowed")
    for section in config.sections():
        for name in config[section]:
            if config[section][name] is None and name not in nva_list:
                msg = "%s not allowed to be empty in cfg file %s" % (name, cfg_fname)
                raise ValueError(msg)


def _apply_cfg_override_args(args, config):
    """apply cfg_override_args to config"""
    for argname, metadata in cfg_override_args.items():
        # skip conditional overrides that were not added
        if argname not in args:
            continue
        override_var = metadata.get("override_var", argname)
        if override_var not in config[metadata["section"]]:
            msg = "%s not in cfg section %s" % (override_var, metadata["section"])
            raise ValueError(msg)
        if "action" not in metadata:
            if getattr(args, argname) is not None:
                config[metadata["section"]][override_var] = getattr(args, argname)
        elif metadata["action"] == "store_true":
            if getattr(args, argname):
                config[metadata["section"]][override_var] = metadata["override_val"]


def get_thread_cnt():
    """return the number of worker threads, capped by SYMBREAK_THREADS"""
    thread_cnt = os.cpu_count() or 1
    env_val = environ.get("SYMBREAK_THREADS")
    if env_val is not None:
        try:
            cap = int(env_val)
        except ValueError:
            msg = "SYMBREAK_THREADS=%s is not an integer" % env_val
            raise ValueError(msg)
        if cap < 1:
            msg = "SYMBREAK_THREADS=%d must be positive" % cap
            raise ValueError(msg)
        thread_cnt = min(thread_cnt, cap)
    return thread_cnt


def logging_config(args, cfg_section, filemode):
    """configure logging"""
    logging_format_list = []
    if not cfg_section.getboolean("logging_reproducible"):
        logging_format_list.extend(["%(asctime)s", "%(process)s"])
    logging_format_list.extend(["%(filename)s", "%(funcName)s", "%(message)s"])
    logging_format = ":".join(logging_format_list)
    mkdir_exist_okay(dirname(cfg_section["logging_fname"]))
    logging.basicConfig(
        format=logging_format,
        level=cfg_section["logging_level"],
        handlers=[
            logging.StreamHandler(stream=sys.stdout),
            logging.FileHandler(filename=cfg_section["logging_fname"], mode=filemode),
        ],
        force=True,
    )
    logger = logging.getLogger(__name__)
    logger.info("command = %s", args.command)


def repro_fname(cfg_section, fname):
    """return version of fname appropriate for reproducible logging, if specified"""
    ret = fname
    if cfg_section.getboolean("logging_reproducible"):
        ret = ret.replace(cfg_section["workdir"], "$workdir")
        ret = ret.replace(cfg_section["repo_root"], "$repo_root")
    return ret
