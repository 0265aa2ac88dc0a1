"""Datasets of pose observations and a synthetic generator.

One record pairs a ground-truth rotation with a base estimator's output
(point estimate, optional weighted candidates) and an abstract feature
vector standing in for a learned featurization of the observation.

The synthetic feature model makes object symmetry genuinely ambiguous:
features depend on the pose only through its orbit under the object's
symmetry group, so symmetric poses are indistinguishable, plus Gaussian
noise.  Files are JSON-lines: a header object followed by one record per
line.
"""
import json
from dataclasses import dataclass, field

import numpy as np

from . import quaternion as quat

SCHEMA_VERSION = 1

UNIT_TOL = 1e-6


class SymmetrySpec:
    """Rotational symmetry of an object: none, a discrete group, or a
    continuous axis of revolution."""

    def __init__(self, kind="none", rotations=None, axis=None):
        self.kind = kind
        if kind == "none":
            self.rotations = None
            self.axis = None
        elif kind == "discrete":
            self.rotations = np.atleast_2d(np.asarray(rotations, dtype=float))
            self.axis = None
            self._check_group()
        elif kind == "continuous":
            a = np.asarray(axis, dtype=float)
            self.axis = a / np.linalg.norm(a)
            self.rotations = None
        else:
            raise ValueError(f"unknown symmetry kind {kind!r}")

    def _check_group(self):
        rots = self.rotations
        if not any(quat.rotation_angle(r, quat.IDENTITY) < 1e-6 for r in rots):
            raise ValueError("discrete symmetry set must include the identity")
        for a in rots:
            for b in rots:
                prod = quat.multiply(a, b)
                if min(quat.rotation_angle(prod, r) for r in rots) > 1e-6:
                    raise ValueError("discrete symmetry set not closed")

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def cyclic(cls, n, axis=(0.0, 0.0, 1.0)):
        """C_n: rotations by multiples of 2 pi / n about ``axis``."""
        rots = [quat.from_axis_angle(axis, 2.0 * np.pi * i / n) for i in range(n)]
        return cls("discrete", rotations=np.array(rots))

    @classmethod
    def revolution(cls, axis=(0.0, 0.0, 1.0)):
        return cls("continuous", axis=axis)

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "discrete":
            d["rotations"] = self.rotations.tolist()
        elif self.kind == "continuous":
            d["axis"] = self.axis.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], rotations=d.get("rotations"), axis=d.get("axis"))


@dataclass
class ObjectSpec:
    object_id: str
    symmetry: SymmetrySpec = field(default_factory=SymmetrySpec.none)
    model_points: np.ndarray | None = None


@dataclass
class EvalRecord:
    object_id: str
    q_true: np.ndarray
    q_est: np.ndarray
    feature: np.ndarray
    candidates: list | None = None   # [(quaternion, confidence), ...]
    t_true: np.ndarray | None = None
    t_est: np.ndarray | None = None


class Dataset:
    def __init__(self, objects, records, feature_dim):
        self.objects = {o.object_id: o for o in objects}
        self.records = list(records)
        self.feature_dim = int(feature_dim)

    def __len__(self):
        return len(self.records)

    def records_for(self, object_id):
        return [r for r in self.records if r.object_id == object_id]

    def save(self, path):
        with open(path, "w") as f:
            header = {
                "schema": SCHEMA_VERSION,
                "feature_dim": self.feature_dim,
                "objects": [
                    {"id": o.object_id,
                     "symmetry": o.symmetry.to_dict(),
                     "model_points": None if o.model_points is None
                     else o.model_points.tolist()}
                    for o in self.objects.values()
                ],
            }
            f.write(json.dumps(header) + "\n")
            for r in self.records:
                row = {
                    "object": r.object_id,
                    "q_true": r.q_true.tolist(),
                    "q_est": r.q_est.tolist(),
                    "feature": r.feature.tolist(),
                }
                if r.candidates is not None:
                    row["candidates"] = [
                        {"q": np.asarray(q).tolist(), "confidence": float(c)}
                        for q, c in r.candidates]
                if r.t_true is not None:
                    row["t_true"] = r.t_true.tolist()
                if r.t_est is not None:
                    row["t_est"] = r.t_est.tolist()
                f.write(json.dumps(row) + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as f:
            header = json.loads(f.readline())
            if header.get("schema") != SCHEMA_VERSION:
                raise ValueError(f"unsupported dataset schema in {path}")
            objects = []
            for o in header["objects"]:
                pts = o.get("model_points")
                objects.append(ObjectSpec(
                    o["id"], SymmetrySpec.from_dict(o["symmetry"]),
                    None if pts is None else np.asarray(pts, dtype=float)))
            feature_dim = header["feature_dim"]
            known = {o.object_id for o in objects}
            records = []
            for i, line in enumerate(f):
                if not line.strip():
                    continue
                row = json.loads(line)
                records.append(_parse_record(row, i, known, feature_dim))
        return cls(objects, records, feature_dim)


def _parse_record(row, index, known_objects, feature_dim):
    if row.get("object") not in known_objects:
        raise ValueError(f"record {index}: unknown object {row.get('object')!r}")

    def unit(fieldname):
        v = np.asarray(row[fieldname], dtype=float)
        if v.shape != (4,) or abs(np.sum(v * v) - 1.0) > UNIT_TOL:
            raise ValueError(f"record {index}: field {fieldname!r} is not a "
                             "unit quaternion")
        return v

    feature = np.asarray(row["feature"], dtype=float)
    if feature.shape != (feature_dim,):
        raise ValueError(f"record {index}: field 'feature' has dimension "
                         f"{feature.shape}, expected ({feature_dim},)")
    candidates = None
    if row.get("candidates") is not None:
        candidates = []
        for c in row["candidates"]:
            q = np.asarray(c["q"], dtype=float)
            if abs(np.sum(q * q) - 1.0) > UNIT_TOL:
                raise ValueError(f"record {index}: field 'candidates' holds a "
                                 "non-unit quaternion")
            if c["confidence"] < 0:
                raise ValueError(f"record {index}: negative candidate confidence")
            candidates.append((q, float(c["confidence"])))
    vec = lambda name: (None if row.get(name) is None
                        else np.asarray(row[name], dtype=float))
    return EvalRecord(row["object"], unit("q_true"), unit("q_est"), feature,
                      candidates, vec("t_true"), vec("t_est"))


# ---------------------------------------------------------------------------
# synthetic feature model


def symmetry_orbit_representative(q, symmetry):
    """Canonical element of the orbit of ``q`` under the symmetry group.

    Poses that differ only by a symmetry rotation map to the same output,
    making them indistinguishable downstream.
    """
    if symmetry.kind != "discrete":
        return quat.canonical(q)
    orbit = [tuple(quat.canonical(quat.multiply(q, p)))
             for p in symmetry.rotations]
    return np.array(max(orbit))


def appearance_vector(q, symmetry):
    """9-dim pose appearance, constant across symmetric poses."""
    if symmetry.kind == "continuous":
        seen_axis = quat.rotate_vector(q, symmetry.axis)
        return np.tile(seen_axis, 3)
    rep = symmetry_orbit_representative(q, symmetry)
    return quat.to_rotation_matrix(rep).ravel()


FEATURE_DIM = 10  # 9 appearance + 1 noise-scale channel


def feature_vector(q, symmetry, noise_scale, rng, feature_noise=0.02):
    """Noisy feature of an observation at pose ``q``.

    The last channel carries the (normalized) noise scale of the base
    estimate, the aleatoric cue a learned head can exploit.
    """
    clean = np.concatenate([appearance_vector(q, symmetry), [noise_scale]])
    return clean + rng.normal(0.0, feature_noise, size=clean.shape)


def reference_features(grid, symmetry):
    """Noise-free features of the grid vertices (clean render stand-ins)."""
    out = np.empty((len(grid), FEATURE_DIM))
    for i, v in enumerate(grid.vertices):
        out[i, :9] = appearance_vector(v, symmetry)
        out[i, 9] = 0.0
    return out


def perturb(q, sigma_rad, rng):
    """Compose ``q`` with a random rotation; rotation vector ~ N(0, sigma^2 I)."""
    vec = rng.normal(0.0, sigma_rad, size=3)
    angle = np.linalg.norm(vec)
    if angle < 1e-12:
        return q
    step = quat.from_axis_angle(vec / angle, angle)
    return quat.multiply(q, step)


def synth_dataset(objects, n_records, rng, noise_deg=(5.0, 25.0),
                  feature_noise=0.02, n_candidates=0, translation_noise=0.0):
    """Generate a synthetic dataset.

    Ground-truth poses are uniform over rotations.  The base estimate is
    the truth composed with a uniformly chosen symmetry element (symmetric
    objects are ambiguous to the estimator) and a random perturbation
    whose scale is drawn per record from ``noise_deg``; that scale is
    exposed in the feature's last channel.
    """
    lo, hi = (noise_deg, noise_deg) if np.isscalar(noise_deg) else noise_deg
    records = []
    for i in range(n_records):
        obj = objects[i % len(objects)]
        sym = obj.symmetry
        q_true = quat.random_uniform(rng)
        sigma_deg = rng.uniform(lo, hi)
        sigma = np.radians(sigma_deg)

        def estimate():
            q = q_true
            if sym.kind == "discrete":
                q = quat.multiply(q, sym.rotations[rng.integers(len(sym.rotations))])
            elif sym.kind == "continuous":
                q = quat.multiply(q, quat.from_axis_angle(
                    sym.axis, rng.uniform(0.0, 2.0 * np.pi)))
            return perturb(q, sigma, rng)

        q_est = estimate()
        feature = feature_vector(q_true, sym, sigma_deg / 180.0, rng,
                                 feature_noise)
        candidates = None
        if n_candidates > 0:
            candidates = [(estimate(), float(rng.uniform(0.1, 1.0)))
                          for _ in range(n_candidates)]
        t_true = t_est = None
        if obj.model_points is not None:
            t_true = rng.uniform(-0.5, 0.5, size=3)
            t_est = t_true + rng.normal(0.0, translation_noise, size=3)
        records.append(EvalRecord(obj.object_id, q_true, q_est, feature,
                                  candidates, t_true, t_est))
    return Dataset(objects, records, FEATURE_DIM)


def standard_objects(names):
    """Objects by preset name: 'plain', 'c4box', 'c2bar', 'bowl'."""
    presets = {
        "plain": SymmetrySpec.none(),
        "c4box": SymmetrySpec.cyclic(4),
        "c2bar": SymmetrySpec.cyclic(2),
        "bowl": SymmetrySpec.revolution(),
    }
    out = []
    for name in names:
        if name not in presets:
            raise ValueError(f"unknown object preset {name!r}; "
                             f"choose from {sorted(presets)}")
        cube = np.array([[x, y, z] for x in (-.05, .05)
                         for y in (-.05, .05) for z in (-.05, .05)])
        out.append(ObjectSpec(name, presets[name], cube))
    return out
