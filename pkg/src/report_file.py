"""writers for the JSON Lines, CSV, JSON, and netCDF outputs of symbreak commands"""

import json
import logging
import os

import numpy as np
from netCDF4 import Dataset

from .utils import class_name, create_dimensions_verify, create_vars, mkdir_exist_okay


class NumpyEncoder(json.JSONEncoder):
    """
    extend JSONEncoder to handle numpy ndarray's and scalars
    https://stackoverflow.com/questions/26646362/nump-array-is-not-json-serializable
    """

    def default(self, o):
        """method called by json.dump, when cls=NumpyEncoder"""
        if isinstance(o, np.ndarray):
            return {"__ndarray__": o.tolist(), "dtype": o.dtype.str}
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        return json.JSONEncoder.default(self, o)


def json_ndarray_decode(dct):
    """decode __ndarray__ tagged entries"""
    if "__ndarray__" in dct:
        return np.asarray(dct["__ndarray__"], dtype=dct.get("dtype"))
    return dct


def _dumps(obj, indent=None):
    """deterministic serialization of obj"""
    return json.dumps(obj, cls=NumpyEncoder, sort_keys=True, indent=indent)


class ReportFile:
    """append-only JSON Lines report, one validated record per line"""

    def __init__(self, fname, keys, extra_keys_ok=False):
        logger = logging.getLogger(__name__)
        logger.debug('ReportFile, fname="%s"', fname)

        fname_dir = os.path.dirname(fname)
        if fname_dir != "":
            mkdir_exist_okay(fname_dir)
        self._fname = fname
        self._keys = frozenset(keys)
        self._extra_keys_ok = extra_keys_ok
        self._record_cnt = 0
        # truncate any previous report
        with open(self._fname, mode="w", newline="\n"):
            pass

    @property
    def fname(self):
        """name of file being written"""
        return self._fname

    @property
    def record_cnt(self):
        """number of records written so far"""
        return self._record_cnt

    def write(self, record):
        """validate record against the declared keys, then append it"""
        missing = self._keys.difference(record)
        extra = set(record).difference(self._keys)
        if missing or (extra and not self._extra_keys_ok):
            msg = "%s record schema violation, missing=%s, extra=%s" % (
                class_name(self),
                sorted(missing),
                sorted(extra),
            )
            raise RuntimeError(msg)
        with open(self._fname, mode="a", newline="\n") as fptr:
            fptr.write(_dumps(record) + "\n")
        self._record_cnt += 1


def read_report(fname):
    """return list of records in a JSON Lines report"""
    with open(fname, mode="r") as fptr:
        return [
            json.loads(line, object_hook=json_ndarray_decode)
            for line in fptr
            if line.strip()
        ]


def write_csv(fname, header, rows, fmt="%.9g"):
    """
    write rows to a CSV file with LF line endings, reals formatted with fmt

    rows are sequences in header order, or dicts whose keys are exactly the header
    names
    """
    _check_csv_header(fname, header)
    lines = [",".join(header)]
    for row in rows:
        if isinstance(row, dict):
            if set(row) != set(header):
                msg = "row keys %s do not match header %s in %s" % (
                    sorted(row),
                    list(header),
                    fname,
                )
                raise RuntimeError(msg)
            row = [row[name] for name in header]
        if len(row) != len(header):
            msg = "row width %d does not match header width %d in %s" % (
                len(row),
                len(header),
                fname,
            )
            raise RuntimeError(msg)
        lines.append(",".join(_fmt_csv_val(val, fmt) for val in row))
    with open(fname, mode="w", newline="\n") as fptr:
        fptr.write("\n".join(lines) + "\n")


def _check_csv_header(fname, header):
    """header names must be distinct, non-empty, and free of separators"""
    for name in header:
        if not isinstance(name, str) or name == "" or set(name) & set(",\r\n"):
            msg = "invalid CSV column name %r in %s" % (name, fname)
            raise RuntimeError(msg)
    if len(set(header)) != len(header):
        msg = "duplicate CSV column names in %s: %s" % (fname, list(header))
        raise RuntimeError(msg)


def _fmt_csv_val(val, fmt):
    """format one CSV value"""
    if isinstance(val, (bool, np.bool_)):
        return str(bool(val))
    if isinstance(val, (int, np.integer)):
        return "%d" % val
    if isinstance(val, (float, np.floating)):
        # avoid -0 in files that are compared byte for byte
        return fmt % (val + 0.0)
    return str(val)


def read_csv(fname):
    """return header and rows of a CSV file written by write_csv, values as strings"""
    with open(fname, mode="r") as fptr:
        lines = fptr.read().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def write_json(fname, obj):
    """write obj to a JSON file, then confirm that it can be read back in exactly"""
    with open(fname, mode="w", newline="\n") as fptr:
        fptr.write(_dumps(obj, indent=2) + "\n")
    if _dumps(read_json(fname)) != _dumps(obj):
        msg = "%s contents not recovered on reread" % fname
        raise RuntimeError(msg)


def read_json(fname):
    """read a JSON file written by write_json"""
    with open(fname, mode="r") as fptr:
        return json.load(fptr, object_hook=json_ndarray_decode)


def write_phase_diagram_nc(fname, jy_vals, h_vals, fields, phase_names):
    """
    write the gridded phase diagram to a netCDF file

    fields maps varname to a (len(jy_vals), len(h_vals)) array, the phase variable
    holding indices into phase_names
    """
    with Dataset(fname, mode="w", format="NETCDF3_64BIT_OFFSET") as fptr:
        fptr.history = "created by %s" % (__name__ + ".write_phase_diagram_nc")
        fptr.phase_names = ",".join(phase_names)

        create_dimensions_verify(fptr, {"jy": len(jy_vals), "h": len(h_vals)})

        vars_metadata = {
            "jy": {"dimensions": ("jy",), "attrs": {"long_name": "vertical coupling"}},
            "h": {"dimensions": ("h",), "attrs": {"long_name": "external field"}},
        }
        for varname, vals in fields.items():
            datatype = "i4" if varname == "phase" else "f8"
            vars_metadata[varname] = {
                "datatype": datatype,
                "dimensions": ("jy", "h"),
                "attrs": {"long_name": varname},
            }
        create_vars(fptr, vars_metadata)

        fptr.variables["jy"][:] = jy_vals
        fptr.variables["h"][:] = h_vals
        for varname, vals in fields.items():
            fptr.variables[varname][:] = vals
