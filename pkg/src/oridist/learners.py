"""Learned orientation-distribution estimators and baselines.

Two learned methods produce image-dependent uncertainty: a concentration
head regressing an isotropic Bingham spread from the feature vector, and
a comparison scorer that rates the query feature against cached reference
features at every grid vertex to form a histogram.  Alongside them live
the statistically driven baselines: fixed tuned concentration, candidate
mixtures, dropout ensembles fit by a Bingham, confusion matrices, direct
histogram regression, and raw cosine similarity.

Every estimator is exposed through a uniform evaluator interface:
``evaluator(record, index) -> density function over rotations``.
"""
import numpy as np

from . import bingham, dataset as ds, histogram, metrics
from .nets import Adam, Mlp

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0

MIN_CONCENTRATION = 1e-4
SIGMA_SEARCH_RANGE = (1e-2, bingham.CONCENTRATION_CAP)


def _batches(order, size):
    for lo in range(0, len(order), size):
        yield order[lo:lo + size]


def _features(records):
    return np.stack([r.feature for r in records])


def _gaps(records):
    """Per record: cos^2 of the half angle between estimate and truth, minus 1."""
    d = np.array([np.dot(r.q_est, r.q_true) for r in records])
    return d * d - 1.0


# ---------------------------------------------------------------------------
# fixed-concentration tuning (sub-random search)


def tune_fixed_sigma(records, trials=64, rng=None):
    """Concentration maximizing mean clipped truth log-likelihood.

    Candidates follow a golden-ratio additive sequence over the log of the
    search range, which fills the interval more evenly than i.i.d. draws.

    Returns ``(concentration, objective)``.
    """
    if not records:
        raise ValueError("empty validation set")
    gaps = _gaps(records)
    lo, hi = np.log(SIGMA_SEARCH_RANGE[0]), np.log(SIGMA_SEARCH_RANGE[1])
    u0 = rng.uniform() if rng is not None else 0.5
    u = (u0 + np.arange(trials) / GOLDEN) % 1.0
    lams = np.exp(lo + u * (hi - lo))
    best = (-np.inf, lams[0])
    for lam in lams:
        ll = np.log(2.0) + lam * gaps - bingham.iso_log_norm_const(lam)
        score = np.maximum(ll, np.log(metrics.LIKELIHOOD_CLIP)).mean()
        if score > best[0]:
            best = (score, lam)
    return best[1], best[0]


# ---------------------------------------------------------------------------
# isotropic concentration head


def make_bingham_head(feature_dim, hidden=(256, 256), rng=None):
    """Feature -> concentration network; softplus keeps the output positive."""
    return Mlp([feature_dim, *hidden, 1], output_activation="softplus", rng=rng)


def head_concentration(head, features):
    out = head.forward(np.atleast_2d(features))
    return out[:, 0] + MIN_CONCENTRATION


def train_bingham_head(head, records, epochs=60, lr=1e-2, rng=None,
                       batch_size=32):
    """Maximize truth log-likelihood of isotropic Binghams centered on the
    base estimates, learning only the per-record concentration.

    Returns the per-epoch mean negative log-likelihood.
    """
    if not records:
        raise ValueError("empty training set")
    rng = rng or np.random.default_rng(0)
    feats = _features(records)
    gaps = _gaps(records)
    opt = Adam(head.parameters(), lr=lr)
    history = []
    for _ in range(epochs):
        order = rng.permutation(len(records))
        total = 0.0
        for batch in _batches(order, batch_size):
            out, cache = head.forward_cached(feats[batch])
            lam = out[:, 0] + MIN_CONCENTRATION
            g = gaps[batch]
            log_f = bingham.iso_log_norm_const(lam)
            total += float(np.sum(-(np.log(2.0) + lam * g - log_f)))
            dloss_dlam = -(g - bingham.iso_log_norm_const_dlam(lam))
            grads_w, grads_b = head.backward(
                cache, (dloss_dlam / len(batch))[:, None])
            opt.step(grads_w + grads_b)
        history.append(total / len(records))
    return history


# ---------------------------------------------------------------------------
# histogram methods: comparison scorer and direct regression


class ComparisonScorer:
    """Scores a query feature against cached per-vertex reference features.

    The network sees ``concat(reference_j, query)`` and outputs one score
    in (0, 1) per vertex; normalized, the scores approximate the posterior
    over the gridded rotations.
    """

    def __init__(self, mlp, ref_features):
        self.mlp = mlp
        self.ref_features = np.asarray(ref_features, dtype=float)

    @classmethod
    def build(cls, ref_features, hidden=(256, 256), dropout_rate=0.2, rng=None):
        f = ref_features.shape[1]
        dropout = [dropout_rate, dropout_rate] + [0.0] * (len(hidden) - 1)
        mlp = Mlp([2 * f, *hidden, 1], output_activation="sigmoid",
                  dropout=dropout, rng=rng)
        return cls(mlp, ref_features)

    def _inputs(self, features):
        features = np.atleast_2d(features)
        n = len(self.ref_features)
        refs = np.tile(self.ref_features, (len(features), 1))
        queries = np.repeat(features, n, axis=0)
        return np.hstack([refs, queries])

    def score_all(self, feature):
        """Scores at every grid vertex for one query feature."""
        return self.mlp.forward(self._inputs(feature))[:, 0]


def train_comparison(scorer, records, grid, epochs=20, lr=1e-3, rng=None,
                     batch_size=8, k=histogram.DEFAULT_K):
    """Train the comparison scorer with the interpolated histogram loss.

    Returns the per-epoch mean loss.
    """
    return _train_histogram_scores(
        lambda feats, rng_: _comparison_forward(scorer, feats, rng_),
        scorer.mlp, len(scorer.ref_features),
        records, grid, epochs, lr, rng, batch_size, k)


def _comparison_forward(scorer, feats, rng):
    x = scorer._inputs(feats)
    masks = scorer.mlp.make_dropout_masks(len(x), rng)
    out, cache = scorer.mlp.forward_cached(x, masks)

    def backprop(grad):
        return scorer.mlp.backward(cache, grad.reshape(-1, 1))

    return out.reshape(len(feats), -1), backprop


def make_direct_regressor(feature_dim, n_vertices, hidden=(256, 256),
                          dropout_rate=0.2, rng=None):
    """Feature -> all vertex scores in one shot (no reference features)."""
    dropout = [dropout_rate, dropout_rate] + [0.0] * (len(hidden) - 1)
    return Mlp([feature_dim, *hidden, n_vertices], output_activation="sigmoid",
               dropout=dropout, rng=rng)


def train_direct_histogram(regressor, records, grid, epochs=20, lr=1e-3,
                           rng=None, batch_size=32, k=histogram.DEFAULT_K):
    """Train direct histogram regression with the same interpolated loss."""
    def forward(feats, rng_):
        masks = regressor.make_dropout_masks(len(feats), rng_)
        out, cache = regressor.forward_cached(feats, masks)
        return out, lambda grad: regressor.backward(cache, grad)

    return _train_histogram_scores(forward, regressor, regressor.widths[-1],
                                   records, grid, epochs, lr, rng, batch_size, k)


def _train_histogram_scores(forward, mlp, n_vertices, records, grid, epochs,
                            lr, rng, batch_size, k):
    if not records:
        raise ValueError("empty training set")
    if n_vertices != len(grid):
        raise ValueError("score width does not match grid size")
    rng = rng or np.random.default_rng(0)
    feats = _features(records)
    targets = [histogram.interp_weights(grid, r.q_true, k) for r in records]
    opt = Adam(mlp.parameters(), lr=lr)
    history = []
    for _ in range(epochs):
        order = rng.permutation(len(records))
        total = 0.0
        for batch in _batches(order, batch_size):
            scores, backprop = forward(feats[batch], rng)
            grad = np.empty_like(scores)
            for row, rec_idx in enumerate(batch):
                idx, w = targets[rec_idx]
                s = scores[row]
                near = float(s[idx] @ w)
                tot = float(s.sum())
                total += -np.log(near) + np.log(tot)
                grad[row] = 1.0 / tot
                grad[row, idx] -= w / near
            grads_w, grads_b = backprop(grad / len(batch))
            opt.step(grads_w + grads_b)
        history.append(total / len(records))
    return history


def cosine_score(ref, phi):
    """Cosine similarity clamped to be usable as a histogram value."""
    ref = np.asarray(ref, dtype=float)
    phi = np.asarray(phi, dtype=float)
    nr = np.linalg.norm(ref, axis=-1)
    nq = np.linalg.norm(phi)
    if nq < 1e-12 or np.any(nr < 1e-12):
        raise ValueError("cosine score of a zero vector")
    return np.maximum(np.sum(ref * phi, axis=-1) / (nr * nq), 0.0)


# ---------------------------------------------------------------------------
# dropout ensemble (epistemic baseline)


def make_pose_regressor(feature_dim, hidden=(256, 256), dropout_rate=0.2,
                        rng=None):
    dropout = [dropout_rate, dropout_rate] + [0.0] * (len(hidden) - 1)
    return Mlp([feature_dim, *hidden, 4], output_activation="linear",
               dropout=dropout, rng=rng)


def train_pose_regressor(net, records, epochs=40, lr=1e-3, rng=None,
                         batch_size=32):
    """Quaternion regression stand-in trained with dropout active.

    Loss is ``1 - (q . q*)^2`` of the normalized output, invariant to the
    antipodal sign.
    """
    if not records:
        raise ValueError("empty training set")
    rng = rng or np.random.default_rng(0)
    feats = _features(records)
    q_true = np.stack([r.q_true for r in records])
    opt = Adam(net.parameters(), lr=lr)
    history = []
    for _ in range(epochs):
        order = rng.permutation(len(records))
        total = 0.0
        for batch in _batches(order, batch_size):
            masks = net.make_dropout_masks(len(batch), rng)
            v, cache = net.forward_cached(feats[batch], masks)
            r = np.linalg.norm(v, axis=1, keepdims=True)
            u = v / r
            t = q_true[batch]
            cos = np.sum(u * t, axis=1, keepdims=True)
            total += float(np.sum(1.0 - cos**2))
            dv = -2.0 * cos * (t - u * cos) / r
            grads_w, grads_b = net.backward(cache, dv / len(batch))
            opt.step(grads_w + grads_b)
        history.append(total / len(records))
    return history


def dropout_pose_samples(net, feature, n, rng):
    """``n`` stochastic forward passes (fresh dropout masks) as quaternions."""
    x = np.tile(np.asarray(feature, dtype=float), (n, 1))
    masks = net.make_dropout_masks(n, rng)
    v = net.forward(x, masks)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def dropout_distribution(net, feature, n, rng):
    """Bingham fit to the spread of the dropout ensemble."""
    return bingham.fit_to_samples(dropout_pose_samples(net, feature, n, rng))


# ---------------------------------------------------------------------------
# evaluators: record -> density function over rotations


def uniform_evaluator():
    def evaluate(record, index):
        return lambda q: metrics.CHANCE_DENSITY
    return evaluate


def fixed_bingham_evaluator(concentration_by_object):
    def evaluate(record, index):
        lam = concentration_by_object[record.object_id]
        return bingham.BinghamDist.isotropic(record.q_est, lam).pdf
    return evaluate


def bingham_mixture_evaluator(concentration_by_object):
    """Candidate estimates as confidence-weighted isotropic components."""
    def evaluate(record, index):
        lam = concentration_by_object[record.object_id]
        cands = record.candidates
        if not cands:
            return bingham.BinghamDist.isotropic(record.q_est, lam).pdf
        comps = [bingham.BinghamDist.isotropic(q, lam) for q, _ in cands]
        weights = np.array([c for _, c in cands])
        if weights.sum() <= 0:
            weights = np.ones(len(cands))
        return bingham.BinghamMixture(comps, weights).pdf
    return evaluate


def bingham_head_evaluator(head_by_object):
    def evaluate(record, index):
        head = head_by_object[record.object_id]
        lam = float(head_concentration(head, record.feature)[0])
        return bingham.BinghamDist.isotropic(record.q_est, lam).pdf
    return evaluate


def dropout_evaluator(net_by_object, n_passes=50, seed=0):
    """Fresh dropout ensemble per record, deterministic given the seed."""
    def evaluate(record, index):
        net = net_by_object[record.object_id]
        rng = np.random.default_rng([seed, index])
        return dropout_distribution(net, record.feature, n_passes, rng).pdf
    return evaluate


def confusion_evaluator(matrix_by_object):
    def evaluate(record, index):
        cm = matrix_by_object[record.object_id]
        return cm.row_histogram(record.q_est).pdf_at
    return evaluate


def comparison_evaluator(scorer_by_object, grid, k=histogram.DEFAULT_K):
    def evaluate(record, index):
        scorer = scorer_by_object[record.object_id]
        values = scorer.score_all(record.feature)
        return histogram.GriddedHistogram(grid, values, k=k).pdf_at
    return evaluate


def direct_histogram_evaluator(net_by_object, grid, k=histogram.DEFAULT_K):
    def evaluate(record, index):
        net = net_by_object[record.object_id]
        values = net.forward(record.feature[None, :])[0]
        return histogram.GriddedHistogram(grid, values, k=k).pdf_at
    return evaluate


def cosine_evaluator(refs_by_object, grid, k=histogram.DEFAULT_K):
    def evaluate(record, index):
        refs = refs_by_object[record.object_id]
        values = cosine_score(refs, record.feature)
        if not np.any(values > 0):
            return lambda q: metrics.CHANCE_DENSITY
        return histogram.GriddedHistogram(grid, values, k=k).pdf_at
    return evaluate


def build_confusion_matrices(train_dataset, grid, epsilon=1e-3,
                             k=histogram.DEFAULT_K):
    out = {}
    for object_id in train_dataset.objects:
        recs = train_dataset.records_for(object_id)
        pairs = np.array([[r.q_est, r.q_true] for r in recs]) if recs else []
        out[object_id] = histogram.build_confusion_matrix(
            pairs, grid, epsilon=epsilon, k=k)
    return out


def build_reference_features(dataset_obj, grid):
    return {oid: ds.reference_features(grid, obj.symmetry)
            for oid, obj in dataset_obj.objects.items()}
