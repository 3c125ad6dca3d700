"""Quasi-random parameter sampling, physical screening of simulations,
noise augmentation, and dataset assembly/persistence."""

from __future__ import annotations

import hashlib
import json
import math
import multiprocessing
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .core import (
    N_SAMPLES,
    OdeParams,
    PdeParams,
    PhysicalConstants,
    UM_PER_MIN,
    nondim_ode,
    nondim_pde,
)
from .ode_model import IntegrationError, simulate_ode
from .pde_model import simulate_pde
from .seeding import substream

HALTON_BASES = (2, 3, 5, 7, 11, 13)

# Screening thresholds for simulated trajectories.
H_MAX = 1.1          # reject films that thicken beyond this
H_MIN = 0.2          # reject films thinner than the glycocalyx scale
REGROWTH_FACTOR = 1.5  # reject h(1) > factor * min h
I_TOL = 1e-9         # absolute slack when testing for increasing intensity

NOISE_SIGMA = 9.0     # Gaussian smoothing width of the noise, in samples
NOISE_SCALE = 0.25    # noise std relative to |I_1 - I_N|
NOISE_COPIES = 2      # perturbed copies appended per accepted sample

TRAIN_FRACTION = 0.75

DATASET_FORMAT = "tearfilm-dataset-v1"

ODE_PARAM_NAMES = ["h0_m", "f0_pct", "ts_s", "je_m_per_s", "b1_per_s", "b2_per_s"]
PDE_PARAM_NAMES = ["h0_m", "f0_pct", "ts_s", "v_m_per_s", "ri_m", "dsigma0_n_per_m"]

# Sampling ranges, in the units of the stored parameter columns above.
ODE_RANGES = [
    (2e-6, 8e-6),
    (0.08, 0.2),
    (10.0, 60.0),
    (0.0, 40.0 * UM_PER_MIN),
    (-0.2, 2.0),
    (0.0, 2.0),
]
PDE_RANGES = [
    (2e-6, 8e-6),
    (0.08, 0.2),
    (10.0, 60.0),
    (0.0, 40.0 * UM_PER_MIN),
    (0.02e-3, 0.2e-3),
    (2e-6, 60e-6),
]


def radical_inverse(index: int, base: int) -> float:
    """Reflect the base-b digits of index about the radix point."""
    inv = 0.0
    scale = 1.0 / base
    while index > 0:
        index, digit = divmod(index, base)
        inv += digit * scale
        scale /= base
    return inv


def halton_point(index: int) -> np.ndarray:
    """Point number `index` (1-based) of the 6-d Halton sequence in (0,1)^6."""
    if index < 1:
        raise ValueError("Halton index must be >= 1")
    return np.array([radical_inverse(index, b) for b in HALTON_BASES])


def scale_params(u, model: str):
    """Map a unit-cube point onto the dimensional sampling ranges.

    Thinning rates are quoted in um/min but stored in m/s; all other columns
    are already SI (or % for the fluorescein concentration).
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (6,):
        raise ValueError("u must be a 6-vector")
    if model == "ode":
        vals = [lo + (hi - lo) * ui for (lo, hi), ui in zip(ODE_RANGES, u)]
        return OdeParams(*vals)
    if model == "pde":
        vals = [lo + (hi - lo) * ui for (lo, hi), ui in zip(PDE_RANGES, u)]
        return PdeParams(*vals)
    raise ValueError(f"unknown model {model!r}")


def accept(h: np.ndarray, intens: np.ndarray):
    """Screen a simulated trajectory; returns (accepted, first failed rule).

    Rules, in order: thickness above H_MAX anywhere; below H_MIN anywhere;
    final thickness regrown beyond REGROWTH_FACTOR times the minimum;
    intensity increasing anywhere beyond I_TOL.
    """
    h = np.asarray(h, dtype=float)
    intens = np.asarray(intens, dtype=float)
    if h.max() > H_MAX:
        return False, "upper bound"
    hmin = h.min()
    if hmin < H_MIN:
        return False, "lower bound"
    if h[-1] > REGROWTH_FACTOR * hmin:
        return False, "nonphysical growth"
    if np.any(np.diff(intens) > I_TOL):
        return False, "increasing intensity"
    return True, None


def perturb(intens: np.ndarray, rng, mode: str = "additive") -> np.ndarray:
    """Perturb an intensity series with smoothed noise of prescribed size.

    The noise is white Gaussian noise smoothed with a Gaussian kernel of
    NOISE_SIGMA samples (reflective boundary, truncated at 4 sigma) and then
    rescaled so its standard deviation is NOISE_SCALE * |I_1 - I_N|. In
    "additive" mode the noise is added directly; "multiplicative" applies
    I * (1 + eta) with the same eta.
    """
    if mode not in ("additive", "multiplicative"):
        raise ValueError(f"unknown noise mode {mode!r}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    intens = np.asarray(intens, dtype=float)
    target = NOISE_SCALE * abs(intens[0] - intens[-1])
    white = rng.standard_normal(intens.size)
    eta = gaussian_filter1d(white, sigma=NOISE_SIGMA, mode="reflect", truncate=4.0)
    sd = eta.std()
    if target == 0.0 or sd == 0.0:
        return intens.copy()
    eta *= target / sd
    if mode == "additive":
        return intens + eta
    return intens * (1.0 + eta)


@dataclass
class Dataset:
    """Aligned intensity inputs, thickness/osmolarity outputs, and provenance.

    Noisy rows carry the clean outputs and parameters of their source sample;
    flags record per-row provenance. train_idx/test_idx partition the rows.
    """

    model: str
    n: int
    nr: int | None
    seed: int
    inputs: np.ndarray
    outputs_h: np.ndarray
    outputs_c: np.ndarray
    params: np.ndarray
    flags: list
    train_idx: np.ndarray
    test_idx: np.ndarray
    param_names: list
    meta: dict = field(default_factory=dict)

    @property
    def rows(self) -> int:
        return self.inputs.shape[0]

    def split(self, which: str):
        """Index array for 'train' or 'test'."""
        if which == "train":
            return self.train_idx
        if which == "test":
            return self.test_idx
        raise ValueError(f"unknown split {which!r}")

    def save(self, outdir) -> str:
        """Write the dataset directory; returns the manifest path."""
        import os

        os.makedirs(outdir, exist_ok=True)
        arrays = {
            "inputs.f64": self.inputs,
            "outputs_h.f64": self.outputs_h,
            "outputs_c.f64": self.outputs_c,
            "params.f64": self.params,
        }
        files = {}
        for name, arr in arrays.items():
            blob = np.ascontiguousarray(arr, dtype="<f8").tobytes()
            with open(os.path.join(outdir, name), "wb") as fh:
                fh.write(blob)
            files[name] = {
                "shape": list(arr.shape),
                "sha256": hashlib.sha256(blob).hexdigest(),
            }
        flags_blob = json.dumps(self.flags, sort_keys=True).encode()
        with open(os.path.join(outdir, "flags.json"), "wb") as fh:
            fh.write(flags_blob)
        files["flags.json"] = {"sha256": hashlib.sha256(flags_blob).hexdigest()}
        manifest = {
            "format": DATASET_FORMAT,
            "model": self.model,
            "n": self.n,
            "nr": self.nr,
            "seed": self.seed,
            "rows": self.rows,
            "param_names": self.param_names,
            "train_indices": self.train_idx.tolist(),
            "test_indices": self.test_idx.tolist(),
            "files": files,
            "meta": self.meta,
        }
        path = os.path.join(outdir, "manifest.json")
        with open(path, "w") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=1)
        return path

    @classmethod
    def load(cls, indir) -> "Dataset":
        import os

        with open(os.path.join(indir, "manifest.json")) as fh:
            manifest = json.load(fh)
        if manifest.get("format") != DATASET_FORMAT:
            raise ValueError(f"not a {DATASET_FORMAT} directory: {indir}")
        arrays = {}
        for name in ("inputs.f64", "outputs_h.f64", "outputs_c.f64", "params.f64"):
            info = manifest["files"][name]
            with open(os.path.join(indir, name), "rb") as fh:
                blob = fh.read()
            arrays[name] = np.frombuffer(blob, dtype="<f8").reshape(info["shape"]).copy()
        with open(os.path.join(indir, "flags.json")) as fh:
            flags = json.load(fh)
        return cls(
            model=manifest["model"],
            n=manifest["n"],
            nr=manifest["nr"],
            seed=manifest["seed"],
            inputs=arrays["inputs.f64"],
            outputs_h=arrays["outputs_h.f64"],
            outputs_c=arrays["outputs_c.f64"],
            params=arrays["params.f64"],
            flags=flags,
            train_idx=np.array(manifest["train_indices"], dtype=int),
            test_idx=np.array(manifest["test_indices"], dtype=int),
            param_names=manifest["param_names"],
            meta=manifest["meta"],
        )


def manifest_hash(dataset_dir) -> str:
    """sha256 of the manifest file, which itself pins every data file."""
    import os

    with open(os.path.join(dataset_dir, "manifest.json"), "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def export_csv(ds: Dataset, outdir) -> None:
    """CSV interchange copies: per-row metadata plus the three matrices."""
    import os

    os.makedirs(outdir, exist_ok=True)
    split = np.empty(ds.rows, dtype=object)
    split[ds.train_idx] = "train"
    split[ds.test_idx] = "test"
    with open(os.path.join(outdir, "rows.csv"), "w") as fh:
        fh.write("row,split,kind,source,copy," + ",".join(ds.param_names) + "\n")
        for i, fl in enumerate(ds.flags):
            pvals = ",".join(repr(v) for v in ds.params[i])
            fh.write(f"{i},{split[i]},{fl['kind']},{fl['source']},{fl['copy']},{pvals}\n")
    for name, arr in (
        ("inputs.csv", ds.inputs),
        ("outputs_h.csv", ds.outputs_h),
        ("outputs_c.csv", ds.outputs_c),
    ):
        np.savetxt(os.path.join(outdir, name), arr, delimiter=",")


def _simulate_candidate(args):
    """Simulate one Halton index; returns (index, payload-or-rejection)."""
    index, model, nr, constants = args
    params = scale_params(halton_point(index), model)
    try:
        if model == "ode":
            sol = simulate_ode(nondim_ode(params, constants))
        else:
            sol = simulate_pde(nondim_pde(params, constants), nr)
    except IntegrationError:
        return index, None, "integration failure", params
    if not sol.ok:
        return index, None, f"flagged: {sol.flag}", params
    ok, reason = accept(sol.h, sol.intensity)
    if not ok:
        return index, None, reason, params
    return index, (sol.h, sol.c, sol.intensity), None, params


def _param_values(params) -> list:
    if isinstance(params, OdeParams):
        return [params.h0p, params.f0p, params.tsp, params.jep, params.b1p, params.b2p]
    return [params.h0p, params.f0p, params.tsp, params.vp, params.rip, params.dsig0]


def build_dataset(
    model: str,
    count: int,
    seed: int,
    nr: int = 128,
    jobs: int = 1,
    noise_mode: str = "additive",
    grouped_split: bool = False,
    constants: PhysicalConstants = PhysicalConstants(),
    progress=None,
) -> Dataset:
    """Generate `count` accepted simulations plus noisy copies and split them.

    Halton indices are consumed from 1 upward; each accepted sample
    contributes one clean row and NOISE_COPIES perturbed rows (with clean
    outputs). Rows are then shuffled into 75/25 train/test splits. The result
    is bit-deterministic in (model, count, seed, nr) regardless of `jobs`.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if model not in ("ode", "pde"):
        raise ValueError(f"unknown model {model!r}")

    names = ODE_PARAM_NAMES if model == "ode" else PDE_PARAM_NAMES
    ranges = ODE_RANGES if model == "ode" else PDE_RANGES
    inputs, outs_h, outs_c, prows, flags = [], [], [], [], []
    rejections = []
    accepted = 0
    trials = 0
    next_index = 1
    pool = multiprocessing.Pool(jobs) if jobs > 1 else None
    try:
        while accepted < count:
            chunk = max(4 * jobs, 8) if jobs > 1 else 1
            idxs = range(next_index, next_index + chunk)
            next_index += chunk
            work = [(i, model, nr, constants) for i in idxs]
            results = pool.map(_simulate_candidate, work) if pool else list(
                map(_simulate_candidate, work)
            )
            for index, payload, reason, params in results:
                if accepted >= count:
                    break
                trials += 1
                if payload is None:
                    rejections.append([index, reason])
                else:
                    h, c, intens = payload
                    pv = _param_values(params)
                    inputs.append(intens)
                    outs_h.append(h)
                    outs_c.append(c)
                    prows.append(pv)
                    flags.append({"source": index, "kind": "clean", "copy": 0})
                    for copy in range(1, NOISE_COPIES + 1):
                        rng = substream(seed, "noise", index, copy)
                        inputs.append(perturb(intens, rng, noise_mode))
                        outs_h.append(h)
                        outs_c.append(c)
                        prows.append(pv)
                        flags.append({"source": index, "kind": "noisy", "copy": copy})
                    accepted += 1
                    if progress and accepted % progress == 0:
                        print(f"accepted {accepted}/{count} ({trials} trials)")
                if trials >= 10_000 and accepted < 0.001 * trials:
                    raise RuntimeError(
                        f"acceptance rate {accepted}/{trials} below 0.1%; "
                        "check parameter ranges or simulator settings"
                    )
    finally:
        if pool:
            pool.close()
            pool.join()

    rows = len(inputs)
    n_train = math.ceil(TRAIN_FRACTION * rows)
    rng = substream(seed, "shuffle")
    if grouped_split:
        groups = rng.permutation(accepted)
        order = np.concatenate([np.arange(3 * g, 3 * g + 3) for g in groups])
    else:
        order = rng.permutation(rows)
    train_idx = np.sort(order[:n_train])
    test_idx = np.sort(order[n_train:])

    return Dataset(
        model=model,
        n=N_SAMPLES,
        nr=nr if model == "pde" else None,
        seed=seed,
        inputs=np.array(inputs),
        outputs_h=np.array(outs_h),
        outputs_c=np.array(outs_c),
        params=np.array(prows),
        flags=flags,
        train_idx=train_idx,
        test_idx=test_idx,
        param_names=list(names),
        meta={
            "sources": accepted,
            "trials": trials,
            "halton_range": [1, trials],
            "noise_mode": noise_mode,
            "grouped_split": grouped_split,
            "ranges": {nm: list(rg) for nm, rg in zip(names, ranges)},
            "constants": asdict(constants),
            "rejections": rejections,
        },
    )
