"""Data model for labelled probabilistic predictions, plus file I/O.

Three prediction variants are supported and every array carries a leading
example axis when it lives inside a :class:`Dataset`:

* :class:`CategoricalDistribution` -- point class probabilities, ``(..., K)``
* :class:`McClassificationSet` -- T sampled class distributions, ``(..., T, K)``
* :class:`McRegressionSet` -- T Gaussian components, means/variances ``(..., T)``
"""

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyInput,
    InvalidDistribution,
    MalformedFile,
    RenormalizedWarning,
)

SUM_TOL = 1e-9
RENORMALIZE_TOL = 1e-6

CLASSIFICATION = "classification"
REGRESSION = "regression"
TASKS = (CLASSIFICATION, REGRESSION)


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CategoricalDistribution:
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen(self.probs))

    @property
    def n_classes(self):
        return self.probs.shape[-1]


@dataclass(frozen=True, eq=False)
class McClassificationSet:
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen(self.samples))

    @property
    def n_samples(self):
        return self.samples.shape[-2]

    @property
    def n_classes(self):
        return self.samples.shape[-1]


@dataclass(frozen=True)
class GaussianComponent:
    mean: float
    variance: float


@dataclass(frozen=True, eq=False)
class McRegressionSet:
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        means, variances = _frozen(self.means), _frozen(self.variances)
        if means.shape != variances.shape:
            raise ValueError(f"means {means.shape} and variances {variances.shape} differ in shape")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)

    @classmethod
    def from_components(cls, components):
        components = list(components)
        return cls([c.mean for c in components], [c.variance for c in components])

    @property
    def n_samples(self):
        return self.means.shape[-1]

    def components(self):
        return [GaussianComponent(float(m), float(v)) for m, v in zip(self.means, self.variances)]


Prediction = CategoricalDistribution | McClassificationSet | McRegressionSet


@dataclass(frozen=True)
class LabeledExample:
    id: str
    label: object
    prediction: Prediction
    group: int | None = None


@dataclass(frozen=True)
class Violation:
    example_id: str | None
    rule: str
    detail: str = ""

    def __str__(self):
        where = f"example {self.example_id!r}" if self.example_id is not None else "dataset"
        return f"{where}: {self.rule}" + (f" ({self.detail})" if self.detail else "")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable batch of labelled predictions sharing one variant.

    ``groups`` holds the binary sensitive attribute with ``-1`` for missing.
    """

    task: str
    ids: tuple
    labels: np.ndarray
    prediction: Prediction
    groups: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))
        n = len(self.ids)
        dtype = np.int64 if self.task == CLASSIFICATION else np.float64
        object.__setattr__(self, "labels", _frozen(self.labels, dtype))
        groups = np.full(n, -1) if self.groups is None else self.groups
        object.__setattr__(self, "groups", _frozen(groups, np.int64))
        if self.labels.shape != (n,) or self.groups.shape != (n,):
            raise ValueError("ids, labels and groups must have equal length")

    def __len__(self):
        return len(self.ids)

    @property
    def kind(self):
        return "point" if isinstance(self.prediction, CategoricalDistribution) else "mc"

    @property
    def n_classes(self):
        if self.task != CLASSIFICATION:
            return None
        return self.prediction.n_classes

    @property
    def has_groups(self):
        return bool(np.all(self.groups >= 0))

    def point_probs(self):
        """``(N, K)`` predictive distribution; MC samples are averaged over T."""
        if isinstance(self.prediction, CategoricalDistribution):
            return self.prediction.probs
        if isinstance(self.prediction, McClassificationSet):
            return self.prediction.samples.mean(axis=-2)
        raise TypeError("point_probs needs a classification dataset")

    def example(self, i):
        p = self.prediction
        if isinstance(p, CategoricalDistribution):
            pred = CategoricalDistribution(p.probs[i])
        elif isinstance(p, McClassificationSet):
            pred = McClassificationSet(p.samples[i])
        else:
            pred = McRegressionSet(p.means[i], p.variances[i])
        label = int(self.labels[i]) if self.task == CLASSIFICATION else float(self.labels[i])
        group = int(self.groups[i]) if self.groups[i] >= 0 else None
        return LabeledExample(self.ids[i], label, pred, group)

    def __iter__(self):
        return (self.example(i) for i in range(len(self)))

    def subset(self, index):
        index = np.asarray(index)
        p = self.prediction
        if isinstance(p, CategoricalDistribution):
            pred = CategoricalDistribution(p.probs[index])
        elif isinstance(p, McClassificationSet):
            pred = McClassificationSet(p.samples[index])
        else:
            pred = McRegressionSet(p.means[index], p.variances[index])
        return Dataset(self.task, [self.ids[i] for i in index], self.labels[index], pred,
                       self.groups[index])

    def with_groups(self, groups):
        return Dataset(self.task, self.ids, self.labels, self.prediction, groups)

    @classmethod
    def from_examples(cls, examples, task):
        """Pack examples into a dataset; raises if :func:`validate` reports anything."""
        examples = list(examples)
        problems = validate(examples, task=task)
        if problems:
            raise InvalidDistribution(str(problems[0]), problems[0].example_id)
        first = examples[0].prediction
        if isinstance(first, CategoricalDistribution):
            pred = CategoricalDistribution([e.prediction.probs for e in examples])
        elif isinstance(first, McClassificationSet):
            pred = McClassificationSet([e.prediction.samples for e in examples])
        else:
            pred = McRegressionSet([e.prediction.means for e in examples],
                                   [e.prediction.variances for e in examples])
        groups = [-1 if e.group is None else e.group for e in examples]
        return cls(task, [e.id for e in examples], [e.label for e in examples], pred, groups)


# ----------------------------------------------------------------- validation


def _distribution_problems(probs):
    """Rule names violated by one probability vector (or a (T, K) stack)."""
    probs = np.asarray(probs, dtype=np.float64)
    out = []
    if probs.shape[-1] < 2:
        out.append(("K >= 2", f"K={probs.shape[-1]}"))
    if not np.all(np.isfinite(probs)) or np.any(probs < 0) or np.any(probs > 1):
        out.append(("probabilities in [0, 1]", ""))
    dev = np.max(np.abs(probs.sum(axis=-1) - 1.0)) if probs.size else 0.0
    if not dev <= SUM_TOL:
        out.append(("probabilities sum to 1", f"max deviation {dev:.3g}"))
    return out


def _example_problems(ex, task):
    p = ex.prediction
    out = []
    if task == CLASSIFICATION:
        if isinstance(p, McRegressionSet):
            return [("prediction variant matches task", "regression components in classification data")]
        if isinstance(p, McClassificationSet):
            if p.samples.ndim != 2 or p.samples.shape[0] < 1:
                out.append(("T >= 1", ""))
            out += _distribution_problems(p.samples)
        else:
            out += _distribution_problems(p.probs)
        k = p.n_classes
        if not isinstance(ex.label, (int, np.integer)) or not 0 <= ex.label < k:
            out.append(("label index < K", f"label={ex.label!r}, K={k}"))
    else:
        if not isinstance(p, McRegressionSet):
            return [("prediction variant matches task", "class probabilities in regression data")]
        if p.means.ndim != 1 or p.means.shape[0] < 1:
            out.append(("T >= 1", ""))
        if not np.all(np.isfinite(p.means)):
            out.append(("finite component means", ""))
        if not np.all(np.isfinite(p.variances)) or np.any(p.variances < 0):
            out.append(("variance >= 0", f"min variance {np.min(p.variances):.6g}"))
        if not math.isfinite(float(ex.label)):
            out.append(("finite regression target", ""))
    if ex.group is not None and ex.group not in (0, 1):
        out.append(("group in {0, 1}", f"group={ex.group!r}"))
    return out


def validate(data, task=None):
    """Report every broken invariant in a :class:`Dataset` or a list of examples.

    Returns an empty list when everything holds. Violations never raise.
    """
    if isinstance(data, Dataset):
        task = data.task
        examples = list(data)
    else:
        examples = list(data)
    if not examples:
        return [Violation(None, "non-empty dataset")]
    if task is None:
        task = REGRESSION if isinstance(examples[0].prediction, McRegressionSet) else CLASSIFICATION
    report = []
    ref = examples[0].prediction
    for ex in examples:
        for rule, detail in _example_problems(ex, task):
            report.append(Violation(ex.id, rule, detail))
        p = ex.prediction
        if type(p) is not type(ref):
            report.append(Violation(ex.id, "same prediction variant across examples",
                                    f"{type(p).__name__} vs {type(ref).__name__}"))
        elif task == CLASSIFICATION and p is not ref and p.n_classes != ref.n_classes:
            report.append(Violation(ex.id, "same K across examples",
                                    f"K={p.n_classes}, expected {ref.n_classes}"))
    return report


# ------------------------------------------------------------------- parsing


def _check_row(probs, row_id):
    """Validate one probability row, renormalizing float round-off."""
    if len(probs) < 2:
        raise InvalidDistribution(f"row {row_id}: need at least 2 classes", row_id)
    if not all(math.isfinite(p) and 0.0 <= p <= 1.0 for p in probs):
        raise InvalidDistribution(f"row {row_id}: probabilities must lie in [0, 1]", row_id)
    total = math.fsum(probs)
    dev = abs(total - 1.0)
    if dev <= SUM_TOL:
        return probs
    if dev <= RENORMALIZE_TOL:
        warnings.warn(f"row {row_id}: probabilities sum to {total!r}; renormalized",
                      RenormalizedWarning, stacklevel=3)
        return [p / total for p in probs]
    raise InvalidDistribution(f"row {row_id}: probabilities sum to {total!r}, not 1", row_id)


def _parse_float(text, where):
    try:
        return float(text)
    except ValueError:
        raise MalformedFile(f"{where}: {text!r} is not a number") from None


def _parse_group(text, where):
    text = text.strip() if isinstance(text, str) else text
    if text in ("", None):
        return -1
    if text in ("0", "1", 0, 1):
        return int(text)
    raise MalformedFile(f"{where}: group must be blank, 0 or 1, got {text!r}")


def _parse_label(text, task, where):
    if task == REGRESSION:
        return _parse_float(text, where)
    try:
        label = int(text)
    except (TypeError, ValueError):
        raise MalformedFile(f"{where}: class label {text!r} is not an integer") from None
    return label


def _prob_columns(cols):
    k = len(cols)
    if k < 2 or cols != [f"p_{i}" for i in range(k)]:
        return None
    return k


def _read_csv(path, task):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyInput(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if header[:3] != ["id", "group", "label"]:
        raise MalformedFile(f"{path}: header must start with id,group,label")
    mc = len(header) > 3 and header[3] == "t"
    rest = header[4:] if mc else header[3:]
    if mc and rest == ["mu", "var"]:
        file_task, k = REGRESSION, None
    else:
        k = _prob_columns(rest)
        if k is None:
            raise MalformedFile(f"{path}: unrecognised prediction columns {rest}")
        file_task = CLASSIFICATION
    if task is not None and task != file_task:
        raise MalformedFile(f"{path}: columns describe a {file_task} file, expected {task}")
    if not body:
        raise EmptyInput(f"{path}: no data rows")

    width = len(header)
    parsed = []
    for lineno, row in enumerate(body, start=2):
        if len(row) != width:
            raise MalformedFile(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
        where = f"{path}:{lineno}"
        rid = row[0]
        group = _parse_group(row[1], where)
        label = _parse_label(row[2], file_task, where)
        values = [_parse_float(v, where) for v in (row[4:] if mc else row[3:])]
        t = None
        if mc:
            try:
                t = int(row[3])
            except ValueError:
                raise MalformedFile(f"{where}: sample index {row[3]!r} is not an integer") from None
        parsed.append((rid, group, label, t, values, where))

    if not mc:
        ids, groups, labels, probs = [], [], [], []
        seen = set()
        for rid, group, label, _, values, where in parsed:
            if rid in seen:
                raise MalformedFile(f"{where}: duplicate id {rid!r}")
            seen.add(rid)
            probs.append(_check_row(values, rid))
            ids.append(rid)
            groups.append(group)
            labels.append(label)
        pred = CategoricalDistribution(probs)
        return _finish(file_task, ids, labels, groups, pred, k)

    order, by_id = [], {}
    for rid, group, label, t, values, where in parsed:
        if rid not in by_id:
            by_id[rid] = {"group": group, "label": label, "samples": {}}
            order.append(rid)
        entry = by_id[rid]
        if entry["group"] != group or entry["label"] != label:
            raise MalformedFile(f"{where}: id {rid!r} has inconsistent label or group")
        if t in entry["samples"]:
            raise MalformedFile(f"{where}: id {rid!r} repeats sample index {t}")
        entry["samples"][t] = values
    n_samples = {len(e["samples"]) for e in by_id.values()}
    if len(n_samples) != 1:
        raise MalformedFile(f"{path}: every id must have the same number of samples, got {sorted(n_samples)}")
    (T,) = n_samples
    ids, groups, labels, stacks = [], [], [], []
    for rid in order:
        entry = by_id[rid]
        if sorted(entry["samples"]) != list(range(T)):
            raise MalformedFile(f"{path}: id {rid!r} sample indices must be 0..{T - 1}")
        ids.append(rid)
        groups.append(entry["group"])
        labels.append(entry["label"])
        stacks.append([entry["samples"][t] for t in range(T)])
    if file_task == REGRESSION:
        arr = np.array(stacks, dtype=np.float64)
        means, variances = arr[..., 0], arr[..., 1]
        bad = np.flatnonzero(~np.all(np.isfinite(variances) & (variances >= 0), axis=1))
        if bad.size:
            rid = ids[bad[0]]
            raise InvalidDistribution(f"id {rid}: component variances must be >= 0", rid)
        pred = McRegressionSet(means, variances)
    else:
        samples = [[_check_row(s, f"{rid} t={t}") for t, s in enumerate(stack)]
                   for rid, stack in zip(ids, stacks)]
        pred = McClassificationSet(samples)
    return _finish(file_task, ids, labels, groups, pred, k)


def _finish(task, ids, labels, groups, pred, k):
    if task == CLASSIFICATION:
        for rid, label in zip(ids, labels):
            if not 0 <= label < k:
                raise MalformedFile(f"id {rid}: label {label} outside 0..{k - 1}")
    return Dataset(task, ids, labels, pred, groups)


def _json_prediction(obj, where):
    if not isinstance(obj, dict) or len(obj) != 1:
        raise MalformedFile(f"{where}: prediction must hold exactly one of probs, samples, components")
    (kind, value), = obj.items()
    if kind == "probs":
        return "point", value
    if kind == "samples":
        return "mc", value
    if kind == "components":
        try:
            return "regression", [(float(c["mean"]), float(c["variance"])) for c in value]
        except (KeyError, TypeError, ValueError):
            raise MalformedFile(f"{where}: components need numeric mean and variance") from None
    raise MalformedFile(f"{where}: unknown prediction kind {kind!r}")


def _read_json(path, task):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedFile(f"{path}: {exc}") from None
    if not isinstance(doc, dict) or "task" not in doc or "examples" not in doc:
        raise MalformedFile(f"{path}: expected an object with 'task' and 'examples'")
    file_task = doc["task"]
    if file_task not in TASKS:
        raise MalformedFile(f"{path}: unknown task {file_task!r}")
    if task is not None and task != file_task:
        raise MalformedFile(f"{path}: file task {file_task} does not match {task}")
    items = doc["examples"]
    if not isinstance(items, list):
        raise MalformedFile(f"{path}: 'examples' must be an array")
    if not items:
        raise EmptyInput(f"{path}: no examples")

    kinds, ids, labels, groups, payloads = set(), [], [], [], []
    for i, item in enumerate(items):
        where = f"{path}: examples[{i}]"
        try:
            rid, label, pred = str(item["id"]), item["label"], item["prediction"]
        except (KeyError, TypeError):
            raise MalformedFile(f"{where}: needs id, label and prediction") from None
        kind, value = _json_prediction(pred, where)
        kinds.add(kind)
        ids.append(rid)
        labels.append(_parse_label(label, file_task, where))
        groups.append(_parse_group(item.get("group"), where))
        payloads.append(value)
    if len(kinds) != 1:
        raise MalformedFile(f"{path}: mixed prediction variants {sorted(kinds)}")
    (kind,) = kinds
    if (kind == "regression") != (file_task == REGRESSION):
        raise MalformedFile(f"{path}: prediction variant {kind} does not fit task {file_task}")
    try:
        if kind == "point":
            rows = [_check_row([float(p) for p in v], rid) for rid, v in zip(ids, payloads)]
            k = {len(r) for r in rows}
            if len(k) != 1:
                raise MalformedFile(f"{path}: examples disagree on the number of classes")
            return _finish(file_task, ids, labels, groups, CategoricalDistribution(rows), k.pop())
        if kind == "mc":
            stacks = [[_check_row([float(p) for p in s], f"{rid} t={t}") for t, s in enumerate(v)]
                      for rid, v in zip(ids, payloads)]
            shapes = {np.shape(s) for s in stacks}
            if len(shapes) != 1 or len(next(iter(shapes))) != 2:
                raise MalformedFile(f"{path}: every example needs the same T and K")
            k = next(iter(shapes))[1]
            return _finish(file_task, ids, labels, groups, McClassificationSet(stacks), k)
    except TypeError:
        raise MalformedFile(f"{path}: probabilities must be arrays of numbers") from None
    if len({len(v) for v in payloads}) != 1 or not payloads[0]:
        raise MalformedFile(f"{path}: every example needs the same non-zero number of components")
    arr = np.array(payloads, dtype=np.float64)
    bad = np.flatnonzero(~np.all(np.isfinite(arr[..., 1]) & (arr[..., 1] >= 0), axis=1))
    if bad.size:
        rid = ids[bad[0]]
        raise InvalidDistribution(f"id {rid}: component variances must be >= 0", rid)
    return _finish(file_task, ids, labels, groups, McRegressionSet(arr[..., 0], arr[..., 1]), None)


def infer_format(path):
    return "json" if Path(path).suffix.lower() == ".json" else "csv"


def parse_predictions(path, format=None, task=None):
    """Read a predictions file into a validated :class:`Dataset`.

    Parameters
    ----------
    path : str or Path
    format : {"csv", "json"}, optional
        Inferred from the file extension when omitted.
    task : {"classification", "regression"}, optional
        When given, the file must describe this task.

    Raises
    ------
    MalformedFile, InvalidDistribution, EmptyInput
    """
    path = Path(path)
    if not path.exists():
        raise MalformedFile(f"{path}: no such file")
    format = format or infer_format(path)
    if format == "csv":
        return _read_csv(path, task)
    if format == "json":
        return _read_json(path, task)
    raise ValueError(f"unknown format {format!r}")


# ------------------------------------------------------------- serialization


def _num(x):
    return repr(float(x))


def write_predictions(dataset, path, format=None):
    """Write ``dataset`` in the same schema :func:`parse_predictions` reads."""
    path = Path(path)
    format = format or infer_format(path)
    groups = ["" if g < 0 else str(int(g)) for g in dataset.groups]
    labels = ([str(int(v)) for v in dataset.labels] if dataset.task == CLASSIFICATION
              else [_num(v) for v in dataset.labels])
    pred = dataset.prediction
    if format == "json":
        examples = []
        for i, rid in enumerate(dataset.ids):
            if isinstance(pred, CategoricalDistribution):
                p = {"probs": pred.probs[i].tolist()}
            elif isinstance(pred, McClassificationSet):
                p = {"samples": pred.samples[i].tolist()}
            else:
                p = {"components": [{"mean": float(m), "variance": float(v)}
                                    for m, v in zip(pred.means[i], pred.variances[i])]}
            label = int(dataset.labels[i]) if dataset.task == CLASSIFICATION else float(dataset.labels[i])
            examples.append({"id": rid, "group": None if dataset.groups[i] < 0 else int(dataset.groups[i]),
                             "label": label, "prediction": p})
        path.write_text(json.dumps({"task": dataset.task, "examples": examples}, indent=1) + "\n",
                        encoding="utf-8")
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if isinstance(pred, CategoricalDistribution):
            w.writerow(["id", "group", "label"] + [f"p_{k}" for k in range(pred.n_classes)])
            for i, rid in enumerate(dataset.ids):
                w.writerow([rid, groups[i], labels[i]] + [_num(p) for p in pred.probs[i]])
        elif isinstance(pred, McClassificationSet):
            w.writerow(["id", "group", "label", "t"] + [f"p_{k}" for k in range(pred.n_classes)])
            for i, rid in enumerate(dataset.ids):
                for t, row in enumerate(pred.samples[i]):
                    w.writerow([rid, groups[i], labels[i], t] + [_num(p) for p in row])
        else:
            w.writerow(["id", "group", "label", "t", "mu", "var"])
            for i, rid in enumerate(dataset.ids):
                for t, (m, v) in enumerate(zip(pred.means[i], pred.variances[i])):
                    w.writerow([rid, groups[i], labels[i], t, _num(m), _num(v)])
