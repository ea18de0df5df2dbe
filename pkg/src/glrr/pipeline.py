"""Orchestration: data in, cluster labels and report out.

The full path is: grouped samples (loaded or synthesized) -> dominant
subspace per group -> Gram tensor -> self-expression solve -> affinity
-> spectral clustering -> Hungarian accuracy. Each run writes its
artifacts (coefficients, labels, solver history, figures, report.json)
into a fresh timestamped directory under the configured output root.
"""

from __future__ import annotations

import datetime
import json
import logging
import shutil
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import matio
from .clustering import ClusterAssignment, accuracy, affinity_from_w, spectral_cluster
from .errors import (
    DataIOError,
    FormatError,
    MissingLabels,
    ShapeError,
    StageFailure,
    ValidationError,
)
from .gram import build_gram
from .manifold import GrassmannPoint, from_samples, qr_orthonormalize
from .report import render_figures
from .solver import SolverConfig, solve, write_history_csv

log = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1

DATASET_FORMATS = ("gmat-dir", "idx-grouped", "csv-dir")


@dataclass(frozen=True)
class ImageSetGroup:
    """One group of vectorized observations sharing a label.

    ``samples`` is d x M with one column per image/frame; ``source`` is
    the originating path or the literal string "synthetic".
    """

    id: str
    label: int
    samples: np.ndarray
    source: str = "synthetic"

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.samples, dtype=float))
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise ShapeError(
                f"group {self.id!r}: samples must be d x M with M >= 1, "
                f"got shape {arr.shape}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)


@dataclass(frozen=True)
class SyntheticSpec:
    """Desk-scale surrogate dataset: k noisy bundles of subspaces."""

    k: int
    per_cluster: int
    d: int
    p: int
    noise: float
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.per_cluster < 1:
            raise ValidationError("cluster and member counts must be positive")
        if self.p < 1 or self.p > self.d:
            raise ValidationError(f"need 1 <= p <= d, got p={self.p}, d={self.d}")
        if self.noise < 0:
            raise ValidationError(f"noise must be >= 0, got {self.noise}")


def synth_grassmann(
    spec: SyntheticSpec,
) -> tuple[list[GrassmannPoint], ClusterAssignment]:
    """Sample clustered subspaces: one random orthonormal center per
    cluster, members re-orthonormalized from center + noise * Gaussian.
    Deterministic for a fixed seed."""
    rng = np.random.default_rng(spec.seed)
    points: list[GrassmannPoint] = []
    labels: list[int] = []
    for c in range(spec.k):
        center = qr_orthonormalize(rng.standard_normal((spec.d, spec.p)))
        for _ in range(spec.per_cluster):
            perturbed = center + spec.noise * rng.standard_normal((spec.d, spec.p))
            points.append(GrassmannPoint(qr_orthonormalize(perturbed)))
            labels.append(c)
    return points, ClusterAssignment(np.array(labels), spec.k)


def synth_groups(
    spec: SyntheticSpec, samples_per_group: int | None = None
) -> list[ImageSetGroup]:
    """Synthetic raw groups: each group's columns are random full-rank
    combinations of its subspace basis, so the dominant-p recovery is
    exact. Used by the ``synth`` CLI to exercise the dataset path."""
    m = 2 * spec.p if samples_per_group is None else samples_per_group
    if m < spec.p:
        raise ValidationError(
            f"samples per group must be >= p ({spec.p}), got {m}"
        )
    points, assignment = synth_grassmann(spec)
    rng = np.random.default_rng(spec.seed + 1)
    groups = []
    for i, pt in enumerate(points):
        coeffs = rng.standard_normal((spec.p, m))
        while np.linalg.svd(coeffs, compute_uv=False)[-1] < 1e-6:
            coeffs = rng.standard_normal((spec.p, m))
        groups.append(
            ImageSetGroup(
                id=f"group_{i:04d}",
                label=int(assignment.labels[i]),
                samples=pt.basis @ coeffs,
            )
        )
    return groups


def write_groups(directory, groups: list[ImageSetGroup]) -> None:
    """Write one GMAT file per group plus the labels.csv sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    labels = {}
    for group in groups:
        matio.save_gmat(directory / f"{group.id}.gmat", group.samples)
        labels[group.id] = group.label
    matio.save_group_labels(directory / "labels.csv", labels)


def load_dataset(path, format: str) -> list[ImageSetGroup]:
    """Read grouped samples from disk.

    Formats: ``gmat-dir`` (one GMAT matrix per group), ``csv-dir`` (one
    headerless CSV matrix per group), ``idx-grouped`` (an images.idx
    stack plus a groups.csv manifest of image_index,group_id rows).
    Every format requires a labels.csv sidecar (group_id,label).
    """
    root = Path(path)
    if not root.exists():
        raise DataIOError(f"dataset path not found: {root}")
    if format not in DATASET_FORMATS:
        raise ValidationError(
            f"unknown dataset format {format!r}; expected one of {DATASET_FORMATS}"
        )
    if format == "idx-grouped":
        groups = _load_idx_grouped(root)
    else:
        suffix = ".gmat" if format == "gmat-dir" else ".csv"
        files = sorted(
            f
            for f in root.glob(f"*{suffix}")
            if f.name not in ("labels.csv", "groups.csv")
        )
        if not files:
            raise FormatError(f"{root}: no {suffix} group files")
        labels = matio.load_group_labels(root / "labels.csv")
        groups = []
        for f in files:
            gid = f.stem
            if gid not in labels:
                raise MissingLabels(f"{root}/labels.csv: no label for group {gid!r}")
            samples = (
                matio.load_gmat(f) if format == "gmat-dir" else matio.load_matrix_csv(f)
            )
            groups.append(
                ImageSetGroup(id=gid, label=labels[gid], samples=samples, source=str(f))
            )
    dims = {g.samples.shape[0] for g in groups}
    if len(dims) != 1:
        raise FormatError(
            f"{root}: groups disagree on ambient dimension: {sorted(dims)}"
        )
    return groups


def _load_idx_grouped(root: Path) -> list[ImageSetGroup]:
    images_path = root / "images.idx"
    if not images_path.exists():
        raise FormatError(f"{root}: idx-grouped format requires images.idx")
    manifest_path = root / "groups.csv"
    if not manifest_path.exists():
        raise FormatError(f"{root}: idx-grouped format requires groups.csv")
    images = matio.load_idx_images(images_path)
    members: dict[str, list[int]] = {}
    with open(manifest_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or (lineno == 1 and line.lower() == "image_index,group_id"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise FormatError(
                    f"{manifest_path}:{lineno}: expected 'image_index,group_id'"
                )
            try:
                idx = int(parts[0])
            except ValueError as err:
                raise FormatError(f"{manifest_path}:{lineno}: {err}") from err
            if idx < 0 or idx >= images.shape[0]:
                raise FormatError(
                    f"{manifest_path}:{lineno}: image index {idx} out of range "
                    f"(0..{images.shape[0] - 1})"
                )
            members.setdefault(parts[1], []).append(idx)
    if not members:
        raise FormatError(f"{manifest_path}: no group rows")
    labels = matio.load_group_labels(root / "labels.csv")
    groups = []
    for gid in sorted(members):
        if gid not in labels:
            raise MissingLabels(f"{root}/labels.csv: no label for group {gid!r}")
        idx = sorted(members[gid])
        groups.append(
            ImageSetGroup(
                id=gid,
                label=labels[gid],
                samples=matio.vectorize_images(images[idx]),
                source=str(images_path),
            )
        )
    return groups


def points_from_groups(
    groups: list[ImageSetGroup], p: int
) -> tuple[list[GrassmannPoint], ClusterAssignment]:
    """Dominant-p subspace of each group plus canonical truth labels."""
    points = [from_samples(g.samples, p) for g in groups]
    truth = ClusterAssignment.from_labels([g.label for g in groups])
    return points, truth


def mnist_subgroups(
    images_path,
    labels_path,
    per_group: int = 20,
    groups_per_class: int = 40,
    seed: int = 0,
) -> list[ImageSetGroup]:
    """Randomly partition a labeled IDX image stack into fixed-size
    subgroups per class (the handwritten-digit clustering protocol:
    40 subgroups of 20 images for each of the 10 digits)."""
    images = matio.load_idx_images(images_path)
    labels = matio.load_idx_labels(labels_path)
    if labels.shape[0] != images.shape[0]:
        raise FormatError(
            f"image/label count mismatch: {images.shape[0]} vs {labels.shape[0]}"
        )
    rng = np.random.default_rng(seed)
    groups = []
    for cls in sorted(np.unique(labels)):
        idx = np.flatnonzero(labels == cls)
        need = per_group * groups_per_class
        if idx.size < need:
            raise ValidationError(
                f"class {cls}: need {need} images, have {idx.size}"
            )
        perm = rng.permutation(idx)
        for g in range(groups_per_class):
            sel = np.sort(perm[g * per_group : (g + 1) * per_group])
            groups.append(
                ImageSetGroup(
                    id=f"class{cls}_{g:03d}",
                    label=int(cls),
                    samples=matio.vectorize_images(images[sel]),
                    source=str(images_path),
                )
            )
    return groups


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a full run needs; built from a TOML file or a dict."""

    k: int
    p: int
    solver: SolverConfig
    mode: str = "synthetic"
    synthetic: SyntheticSpec | None = None
    data_path: Path | None = None
    data_format: str = "gmat-dir"
    spectral_variant: str = "njw"
    spectral_seed: int = 0
    seed: int = 0
    out_dir: Path = Path("runs")
    figures: bool = True
    config_path: Path | None = None

    def __post_init__(self):
        if self.k < 2:
            raise ValidationError(f"cluster count must be >= 2, got {self.k}")
        if self.p < 1:
            raise ValidationError(f"subspace dimension must be >= 1, got {self.p}")
        if self.mode == "synthetic":
            if self.synthetic is None:
                raise ValidationError("synthetic mode requires a [synthetic] section")
        elif self.mode == "dataset":
            if self.data_path is None:
                raise ValidationError("dataset mode requires data.path")
            if self.data_format not in DATASET_FORMATS:
                raise ValidationError(
                    f"unknown dataset format {self.data_format!r}"
                )
        else:
            raise ValidationError(
                f"mode must be 'synthetic' or 'dataset', got {self.mode!r}"
            )
        if self.spectral_variant not in ("njw", "shi-malik"):
            raise ValidationError(
                f"spectral variant must be 'njw' or 'shi-malik', "
                f"got {self.spectral_variant!r}"
            )

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise DataIOError(f"config file not found: {path}")
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as err:
            raise ValidationError(f"{path}: invalid TOML: {err}") from err
        return cls.from_dict(raw, base_dir=path.parent, config_path=path)

    @classmethod
    def from_dict(
        cls, raw: dict, base_dir=None, config_path=None
    ) -> "PipelineConfig":
        base = Path(base_dir) if base_dir is not None else Path(".")
        data = dict(raw)

        def take(section: str) -> dict:
            sub = data.pop(section, {})
            if not isinstance(sub, dict):
                raise ValidationError(f"[{section}] must be a table")
            return dict(sub)

        mode = data.pop("mode", "synthetic")
        seed = int(data.pop("seed", 0))
        model = take("model")
        synth = take("synthetic")
        dataset = take("data")
        solver_extra = take("solver")
        spectral = take("spectral")
        io_section = take("io")
        if data:
            raise ValidationError(f"unknown config keys: {sorted(data)}")

        def pull(section: dict, name: str, key: str, default=None, required=False):
            if key in section:
                return section.pop(key)
            if required:
                raise ValidationError(f"missing required config key {name}.{key}")
            return default

        k = int(pull(model, "model", "k", required=True))
        p = int(pull(model, "model", "p", 10))
        lam = float(pull(model, "model", "lambda", required=True))
        if model:
            raise ValidationError(f"unknown [model] keys: {sorted(model)}")

        solver_kwargs = {"lam": lam}
        for key in ("rho0", "beta0", "beta_max", "eps1", "eps2"):
            if key in solver_extra:
                solver_kwargs[key] = float(solver_extra.pop(key))
        if "max_iters" in solver_extra:
            solver_kwargs["max_iters"] = int(solver_extra.pop("max_iters"))
        if solver_extra:
            raise ValidationError(f"unknown [solver] keys: {sorted(solver_extra)}")
        solver = SolverConfig(**solver_kwargs)

        synthetic_spec = None
        data_path = None
        data_format = "gmat-dir"
        if mode == "synthetic":
            synthetic_spec = SyntheticSpec(
                k=k,
                per_cluster=int(pull(synth, "synthetic", "per_cluster", required=True)),
                d=int(pull(synth, "synthetic", "d", required=True)),
                p=p,
                noise=float(pull(synth, "synthetic", "noise", 0.0)),
                seed=seed,
            )
            if synth:
                raise ValidationError(f"unknown [synthetic] keys: {sorted(synth)}")
        else:
            path_value = pull(dataset, "data", "path", required=True)
            data_path = (base / str(path_value)).resolve()
            data_format = str(pull(dataset, "data", "format", "gmat-dir"))
            if dataset:
                raise ValidationError(f"unknown [data] keys: {sorted(dataset)}")

        variant = str(pull(spectral, "spectral", "variant", "njw"))
        spectral_seed = int(pull(spectral, "spectral", "seed", seed))
        if spectral:
            raise ValidationError(f"unknown [spectral] keys: {sorted(spectral)}")

        out_dir = (base / str(pull(io_section, "io", "out", "runs"))).resolve()
        figures = bool(pull(io_section, "io", "figures", True))
        if io_section:
            raise ValidationError(f"unknown [io] keys: {sorted(io_section)}")

        return cls(
            k=k,
            p=p,
            solver=solver,
            mode=mode,
            synthetic=synthetic_spec,
            data_path=data_path,
            data_format=data_format,
            spectral_variant=variant,
            spectral_seed=spectral_seed,
            seed=seed,
            out_dir=out_dir,
            figures=figures,
            config_path=Path(config_path) if config_path else None,
        )

    def summary(self) -> dict:
        """JSON-serializable echo for the run report."""
        return {
            "mode": self.mode,
            "k": self.k,
            "p": self.p,
            "seed": self.seed,
            "lambda": self.solver.lam,
            "solver": {
                "rho0": self.solver.rho0,
                "beta0": self.solver.beta0,
                "beta_max": self.solver.beta_max,
                "eps1": self.solver.eps1,
                "eps2": self.solver.eps2,
                "max_iters": self.solver.max_iters,
            },
            "spectral": {
                "variant": self.spectral_variant,
                "seed": self.spectral_seed,
            },
            "synthetic": (
                None
                if self.synthetic is None
                else {
                    "per_cluster": self.synthetic.per_cluster,
                    "d": self.synthetic.d,
                    "noise": self.synthetic.noise,
                }
            ),
            "data": (
                None
                if self.data_path is None
                else {"path": str(self.data_path), "format": self.data_format}
            ),
        }


@contextmanager
def _stage(name: str, timings: dict):
    start = time.perf_counter()
    try:
        yield
    except Exception as err:
        raise StageFailure(name, err) from err
    finally:
        timings[name] = time.perf_counter() - start
        log.info("stage %-8s %.3fs", name, timings[name])


def _make_run_dir(out_dir: Path) -> Path:
    out_dir = Path(out_dir)
    stamp = datetime.datetime.now().strftime("%Y%m%d-%H%M%S-%f")
    run_dir = out_dir / f"run-{stamp}"
    suffix = 0
    while run_dir.exists():
        suffix += 1
        run_dir = out_dir / f"run-{stamp}-{suffix}"
    run_dir.mkdir(parents=True)
    return run_dir


def write_artifacts(
    out_dir,
    coefficients,
    state,
    affinity,
    predicted: ClusterAssignment,
    truth: ClusterAssignment | None = None,
    figures: bool = True,
) -> dict:
    """Write the standard artifact set (W as CSV and GMAT, labels,
    solver history, figures) into ``out_dir``; returns the artifact
    name map for the report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    matio.save_matrix_csv(out_dir / "W.csv", coefficients.matrix)
    matio.save_gmat(out_dir / "W.gmat", coefficients.matrix)
    matio.save_labels_csv(out_dir / "labels.csv", predicted.labels)
    write_history_csv(state.history, out_dir / "history.csv")
    artifacts = {
        "coefficients_csv": "W.csv",
        "coefficients_gmat": "W.gmat",
        "labels": "labels.csv",
        "history": "history.csv",
    }
    if truth is not None:
        matio.save_labels_csv(out_dir / "truth.csv", truth.labels)
        artifacts["truth"] = "truth.csv"
    if figures:
        rendered = render_figures(
            out_dir, state.history, affinity.matrix, coefficients.matrix
        )
        artifacts["figures"] = [f.name for f in rendered]
    return artifacts


def run_pipeline(config: PipelineConfig) -> dict:
    """Execute the full pipeline and write all artifacts.

    Returns the report dict (also stored as report.json in the run
    directory). Any stage error is re-raised as StageFailure carrying
    the stage name and the root cause.
    """
    timings: dict[str, float] = {}
    run_dir = _make_run_dir(config.out_dir)

    with _stage("data", timings):
        if config.mode == "synthetic":
            points, truth = synth_grassmann(config.synthetic)
        else:
            groups = load_dataset(config.data_path, config.data_format)
            points, truth = points_from_groups(groups, config.p)

    with _stage("gram", timings):
        tensor = build_gram(points)

    with _stage("solve", timings):
        coefficients, state = solve(tensor, config.solver)

    with _stage("affinity", timings):
        affinity = affinity_from_w(coefficients)

    with _stage("spectral", timings):
        predicted = spectral_cluster(
            affinity,
            config.k,
            seed=config.spectral_seed,
            variant=config.spectral_variant,
        )

    with _stage("score", timings):
        score = accuracy(predicted, truth)

    artifacts: dict = {}
    with _stage("write", timings):
        artifacts = write_artifacts(
            run_dir,
            coefficients,
            state,
            affinity,
            predicted,
            truth=truth,
            figures=config.figures,
        )
        if config.config_path is not None:
            shutil.copy(config.config_path, run_dir / "config.toml")
            artifacts["config"] = "config.toml"
        else:
            with open(run_dir / "config.json", "w", encoding="utf-8") as fh:
                json.dump(config.summary(), fh, indent=2)
            artifacts["config"] = "config.json"

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "run_dir": str(run_dir),
        "n_points": len(points),
        "accuracy": score,
        "stage_seconds": timings,
        "solver": {
            "iterations": state.iteration,
            "converged": state.converged,
            "warning": state.warning,
            "final_beta": state.beta,
            "final_constraint_residual": (
                state.history[-1].constraint_residual if state.history else None
            ),
        },
        "config": config.summary(),
        "artifacts": artifacts,
    }
    with open(run_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    return report
