"""
writes experiment results: CSV tables and the run manifest
"""

import csv
import json
import logging
import math
import os

import numpy as np

logger = logging.getLogger(__name__)


def format_value(value):
    """
    Render one CSV cell. Floats use 17 significant digits so identical results give identical bytes.
    Bools are written as 0/1.
    """
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    return str(value)


def write_csv(path, columns, rows):
    """
    write a table

    path - output .csv file
    columns - header names
    rows - iterable of sequences, one value per column
    """
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            row = list(row)
            if len(row) != len(columns):
                raise ValueError(f"row of length {len(row)} does not match columns {columns}")
            writer.writerow([format_value(value) for value in row])
            count += 1
    logger.info("wrote %d rows to %s", count, os.path.abspath(path))
    return path


def write_manifest(path, manifest):
    """
    write manifest.json (sorted keys, indent 2)

    manifest - mapping of JSON-serialisable values
    """
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, sort_keys=True, indent=2)
        f.write("\n")
    return path
