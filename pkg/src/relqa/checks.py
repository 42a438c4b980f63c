"""Random tiny networks for finite-difference verification of the model."""
import numpy as np

from relqa import model
from relqa.numeric import gradient_check, softmax_nll
from relqa.text import AnnotatedSentence, N_FEATURES


def random_tiny_case(mode="emb", seed=0, d_w=6, d_o=2, n=4, m=3, conv="wide",
                     vocab_size=12, min_len=4, max_len=9):
    """Random params (W unfrozen), an overlapping (q, a) pair, features and a label."""
    rng = np.random.default_rng(seed)
    hp = model.Hyperparams(vocab_size=vocab_size, d_w=d_w, d_o=d_o, n=n, m=m, conv=conv, mode=mode)
    params = model.init_params(hp, seed=seed, freeze_W=False)
    # zero biases leave many units exactly at kinks; move them off
    for name in ("bq", "ba", "bh", "bs"):
        getattr(params, name)[:] = rng.uniform(-0.1, 0.1, size=getattr(params, name).shape)

    def sentence():
        L = int(rng.integers(min_len, max_len + 1))
        idx = rng.integers(1, vocab_size, size=L)
        return idx

    qi, ai = sentence(), sentence()
    shared = set(qi) & set(ai)
    q = AnnotatedSentence([str(i) for i in qi], [int(i in shared) for i in qi], qi)
    a = AnnotatedSentence([str(i) for i in ai], [int(i in shared) for i in ai], ai)
    x_feat = rng.uniform(0.0, 3.0, size=N_FEATURES) if hp.uses_features else None
    label = int(rng.integers(0, 2))
    return params, q, a, x_feat, label


def activation_signature(cache):
    """Discrete state fixing the smooth piece the network is evaluated on."""
    parts = []
    for enc in (cache.enc_q, cache.enc_a):
        rows = np.arange(enc.C.shape[0])
        parts.append(tuple(enc.argmax))
        parts.append(tuple(enc.C[rows, enc.argmax] > 0))
    parts.append(tuple(cache.h_pre > 0))
    return tuple(parts)


def check_model_gradients(params, q, a, x_feat, label, epsilon=3e-5, tolerance=1e-4, corrupt=None):
    """Finite-difference check of :func:`relqa.model.backward` on one pair.

    Every trainable block is perturbed; in feature modes the ``x_feat`` input
    is checked as well.  ``corrupt`` maps block names to a factor applied to
    the analytic gradient, for mutation testing.
    """
    cache = model.forward(q, a, params, x_feat)
    _, grads = model.backward(cache, label, params, input_grads=params.hp.uses_features)
    for name, factor in (corrupt or {}).items():
        grads[name] = grads[name] * factor

    blocks = {name: getattr(params, name) for name in params.trainable_names()}
    if params.hp.uses_features:
        x_feat = np.array(x_feat, dtype=np.float64)
        blocks["x_feat"] = x_feat

    def loss():
        c = model.forward(q, a, params, x_feat)
        return softmax_nll(c.logits, label)[1], activation_signature(c)

    return gradient_check(loss, blocks, grads, epsilon=epsilon, tolerance=tolerance)
