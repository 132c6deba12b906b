"""CSV schemas for time series, features, priors, and result files.

All files are UTF-8 with a header row, '.' decimal separator, and floats at
17 significant digits so values round-trip exactly. Writers emit '\n' line
endings regardless of platform.
"""

import csv
import datetime
from typing import Optional, Sequence

import numpy as np

from cropshift.dataset import ClassPriors, Dataset
from cropshift.errors import ParseError
from cropshift.features import FeatureVector, Observation, PixelTimeSeries, year_fraction

TIMESERIES_FIELDS = ("pixel_id", "region_id", "label", "band", "value", "clear")
PRIORS_SUM_TOL = 1e-6


def fmt(x) -> str:
    """Float at 17 significant digits (exact round trip)."""
    return format(float(x), ".17g")


def _open_reader(path):
    fh = open(path, "r", encoding="utf-8", newline="")
    return fh, csv.reader(fh)


def _parse_float(text, line, what):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"invalid {what} {text!r}", line=line) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite {what} {text!r}", line=line)
    return value


def read_timeseries_csv(path, anchor_date: Optional[datetime.date] = None):
    """Parse the long-format time series CSV into per-pixel series.

    The time column is either `time_years` (used as is) or `date` (ISO
    dates, converted relative to `anchor_date`). `clear` must be 0 or 1;
    `label` may be empty. Returns series in first-appearance pixel order.
    """
    fh, reader = _open_reader(path)
    with fh:
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file: missing header", line=1) from None
        cols = {name: i for i, name in enumerate(header)}
        missing = [c for c in TIMESERIES_FIELDS if c not in cols]
        if missing:
            raise ParseError(f"missing columns {missing}", line=1)
        if "time_years" in cols:
            time_col, time_is_date = cols["time_years"], False
        elif "date" in cols:
            if anchor_date is None:
                raise ParseError(
                    "CSV has a 'date' column; an anchor date is required", line=1
                )
            time_col, time_is_date = cols["date"], True
        else:
            raise ParseError("need a 'time_years' or 'date' column", line=1)

        # pixel -> {"region": ..., "label": ..., "obs": {time: {band: value}},
        #           "clear": {time: bool}}
        pixels: dict = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, found {len(row)}", line=line_no
                )
            pixel_id = row[cols["pixel_id"]]
            region_id = row[cols["region_id"]]
            label = row[cols["label"]] or None
            band = row[cols["band"]]
            if time_is_date:
                try:
                    day = datetime.date.fromisoformat(row[time_col])
                except ValueError:
                    raise ParseError(
                        f"invalid date {row[time_col]!r}", line=line_no
                    ) from None
                t = year_fraction(day, anchor_date)
            else:
                t = _parse_float(row[time_col], line_no, "time_years")
            value = _parse_float(row[cols["value"]], line_no, "value")
            clear_text = row[cols["clear"]]
            if clear_text not in ("0", "1"):
                raise ParseError(
                    f"clear flag must be 0 or 1, found {clear_text!r}", line=line_no
                )
            clear = clear_text == "1"

            entry = pixels.setdefault(
                pixel_id,
                {"region": region_id, "label": label, "obs": {}, "clear": {}},
            )
            if entry["region"] != region_id:
                raise ParseError(
                    f"pixel {pixel_id!r} appears in regions "
                    f"{entry['region']!r} and {region_id!r}",
                    line=line_no,
                )
            if entry["label"] != label:
                raise ParseError(
                    f"pixel {pixel_id!r} has conflicting labels", line=line_no
                )
            bands_at_t = entry["obs"].setdefault(t, {})
            if band in bands_at_t:
                raise ParseError(
                    f"duplicate (pixel, band, time) record for {pixel_id!r}",
                    line=line_no,
                )
            bands_at_t[band] = value
            if entry["clear"].setdefault(t, clear) != clear:
                raise ParseError(
                    f"pixel {pixel_id!r} has conflicting clear flags at t={t}",
                    line=line_no,
                )

    series = []
    for pixel_id, entry in pixels.items():
        observations = []
        for t in sorted(entry["obs"]):
            observations.append(
                Observation(t, entry["obs"][t], entry["clear"][t])
            )
        try:
            series.append(
                PixelTimeSeries(pixel_id, entry["region"], entry["label"], observations)
            )
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
    return series


def write_features_csv(path, vectors: Sequence[FeatureVector], n_features: int):
    """Wide feature CSV: pixel_id,region_id,label,f0..f{n-1}."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["pixel_id", "region_id", "label"] + [f"f{i}" for i in range(n_features)]
        )
        for fv in vectors:
            writer.writerow(
                [fv.pixel_id, fv.region_id, fv.label or ""]
                + [fmt(v) for v in fv.values]
            )


def write_band_manifest(path, bands: Sequence[str]):
    with open(path, "w", encoding="utf-8") as fh:
        for band in bands:
            fh.write(band + "\n")


def write_drop_report(path, drops: Sequence[tuple]):
    """Rows of (pixel_id, reason) for pixels excluded from the output."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["pixel_id", "reason"])
        for pixel_id, reason in drops:
            writer.writerow([pixel_id, reason])


def read_features_csv(paths) -> list:
    """Read one or more wide feature CSVs into FeatureVector records."""
    if isinstance(paths, (str, bytes)) or hasattr(paths, "__fspath__"):
        paths = [paths]
    vectors = []
    for path in paths:
        fh, reader = _open_reader(path)
        with fh:
            try:
                header = next(reader)
            except StopIteration:
                raise ParseError(f"{path}: empty file", line=1) from None
            if header[:3] != ["pixel_id", "region_id", "label"]:
                raise ParseError(
                    f"{path}: header must start with pixel_id,region_id,label", line=1
                )
            feat_cols = header[3:]
            expected = [f"f{i}" for i in range(len(feat_cols))]
            if feat_cols != expected:
                raise ParseError(
                    f"{path}: feature columns must be f0..f{len(feat_cols) - 1}", line=1
                )
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise ParseError(
                        f"{path}: expected {len(header)} fields, found {len(row)}",
                        line=line_no,
                    )
                values = np.array(
                    [_parse_float(v, line_no, "feature") for v in row[3:]]
                )
                vectors.append(
                    FeatureVector(row[0], row[1], row[2] or None, values)
                )
    return vectors


def datasets_by_region(vectors: Sequence[FeatureVector], require_labels=True) -> dict:
    """Group feature vectors into per-region Datasets over a shared class list."""
    if not vectors:
        return {}
    labels = {fv.label for fv in vectors if fv.label is not None}
    if require_labels:
        unlabeled = [fv.pixel_id for fv in vectors if fv.label is None]
        if unlabeled:
            raise ParseError(
                f"unlabeled pixels cannot enter a labeled dataset: "
                f"{unlabeled[:5]}{'...' if len(unlabeled) > 5 else ''}"
            )
    class_list = tuple(sorted(labels))
    out = {}
    regions = dict.fromkeys(fv.region_id for fv in vectors)
    for rid in regions:
        rows = [fv for fv in vectors if fv.region_id == rid]
        out[rid] = Dataset(
            np.vstack([fv.values for fv in rows]),
            [fv.label for fv in rows],
            [rid] * len(rows),
            class_list,
        )
    return out


def read_priors_csv(path) -> dict:
    """Per-region priors, from proportions or (area, mean_field_area) rows.

    Proportion rows must sum to 1 within 1e-6 per region and are renormalized
    exactly. Area rows are converted by dividing each class's area by its
    mean field area, then normalizing.
    """
    fh, reader = _open_reader(path)
    with fh:
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty priors file", line=1) from None
        if header[:2] != ["region_id", "class"]:
            raise ParseError("priors header must start with region_id,class", line=1)
        if header[2:] == ["proportion"]:
            mode = "proportion"
        elif header[2:] == ["area", "mean_field_area"]:
            mode = "area"
        else:
            raise ParseError(
                "priors columns must be 'proportion' or 'area,mean_field_area'", line=1
            )
        per_region: dict = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, found {len(row)}", line=line_no
                )
            rid, cls = row[0], row[1]
            entry = per_region.setdefault(rid, {})
            if cls in entry:
                raise ParseError(
                    f"duplicate class {cls!r} for region {rid!r}", line=line_no
                )
            if mode == "proportion":
                entry[cls] = _parse_float(row[2], line_no, "proportion")
            else:
                entry[cls] = (
                    _parse_float(row[2], line_no, "area"),
                    _parse_float(row[3], line_no, "mean_field_area"),
                )
    out = {}
    for rid, entry in per_region.items():
        classes = tuple(entry)
        if mode == "proportion":
            values = np.array([entry[c] for c in classes])
            if np.any(values < 0):
                raise ParseError(f"negative proportion for region {rid!r}")
            total = values.sum()
            if abs(total - 1.0) > PRIORS_SUM_TOL:
                raise ParseError(
                    f"proportions for region {rid!r} sum to {total!r}, not 1"
                )
            out[rid] = ClassPriors(rid, classes, values / total)
        else:
            from cropshift.shift import aggregate_to_priors

            areas = {c: entry[c][0] for c in classes}
            mfa = {c: entry[c][1] for c in classes}
            out[rid] = aggregate_to_priors(areas, mfa, region_id=rid)
    return out


def write_priors_csv(path, priors: dict):
    """Proportion-format priors CSV, sorted by (region_id, class order)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["region_id", "class", "proportion"])
        for rid in sorted(priors):
            cp = priors[rid]
            for cls, value in zip(cp.classes, cp.values):
                writer.writerow([rid, cls, fmt(value)])


def write_confusion_csv(path, cm):
    """Counts with a true_class row label column and predicted-class headers."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["true_class"] + list(cm.class_list))
        for cls, row in zip(cm.class_list, cm.counts):
            writer.writerow([cls] + [int(v) for v in row])


def write_shifts_csv(path, shifts: dict):
    """Estimated per-region offsets: region_id,f0..f{d-1}."""
    d = len(next(iter(shifts.values())))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["region_id"] + [f"f{i}" for i in range(d)])
        for rid in sorted(shifts):
            writer.writerow([rid] + [fmt(v) for v in shifts[rid]])
