"""Mini-batch Adadelta training with dev-MAP model selection and early stopping."""
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from relqa import model
from relqa.errors import NonFiniteError
from relqa.metrics import DEFAULT_POLICY, POLICIES, RankedRun, evaluate, filter_questions


@dataclass
class TrainConfig:
    batch_size: int = 50
    max_epochs: int = 25
    patience: int = 5
    eval_interval: int = 10
    seed: int = 0
    rho: float = 0.95
    eps: float = 1e-6
    dev_policy: str = DEFAULT_POLICY

    def __post_init__(self):
        for name in ("batch_size", "max_epochs", "patience", "eval_interval"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 < self.rho < 1.0 or self.eps <= 0.0:
            raise ValueError("Adadelta needs 0 < rho < 1 and eps > 0")
        if self.dev_policy not in POLICIES:
            raise ValueError(f"dev_policy must be one of {POLICIES}")


def adadelta_update(block, grad, eg2, edx2, rho=0.95, eps=1e-6):
    """One Adadelta step, applied in place to ``block``, ``eg2`` and ``edx2``.

    Returns the applied update.
    """
    if not np.all(np.isfinite(grad)):
        raise NonFiniteError("non-finite gradient")
    eg2 *= rho
    eg2 += (1.0 - rho) * grad * grad
    delta = -np.sqrt(edx2 + eps) / np.sqrt(eg2 + eps) * grad
    edx2 *= rho
    edx2 += (1.0 - rho) * delta * delta
    block += delta
    return delta


class AdadeltaState:
    """Running averages of squared gradients and squared updates per block."""

    def __init__(self, shapes, rho=0.95, eps=1e-6):
        self.rho, self.eps = rho, eps
        self.eg2 = {name: np.zeros(shape) for name, shape in shapes.items()}
        self.edx2 = {name: np.zeros(shape) for name, shape in shapes.items()}

    @classmethod
    def for_params(cls, params, rho=0.95, eps=1e-6):
        return cls({n: getattr(params, n).shape for n in params.trainable_names()}, rho, eps)

    def step(self, params, grads):
        for name in self.eg2:
            try:
                adadelta_update(getattr(params, name), grads[name], self.eg2[name], self.edx2[name],
                                self.rho, self.eps)
            except NonFiniteError:
                bad = int(np.sum(~np.isfinite(grads[name])))
                raise NonFiniteError(f"{bad} non-finite gradient entries in block {name}") from None
        params.bump()

    def copy(self):
        out = AdadeltaState({}, self.rho, self.eps)
        out.eg2 = {k: v.copy() for k, v in self.eg2.items()}
        out.edx2 = {k: v.copy() for k, v in self.edx2.items()}
        return out


@dataclass
class TrainHistory:
    losses: list = field(default_factory=list)   # (step, epoch, loss)
    evals: list = field(default_factory=list)    # (step, epoch, dev_map, is_best)
    best_map: float = None
    best_step: int = None
    best_epoch: int = None
    epochs_run: int = 0
    stop_reason: str = None
    log: list = field(default_factory=list, repr=False)

    def record_loss(self, step, epoch, loss):
        self.losses.append((step, epoch, loss))
        self.log.append(f"{step}\t{epoch}\t{loss!r}")

    def record_eval(self, step, epoch, dev_map, is_best):
        self.evals.append((step, epoch, dev_map, is_best))
        self.log.append(f"{step}\t{dev_map!r}\t{int(is_best)}")
        if is_best:
            self.best_map, self.best_step, self.best_epoch = dev_map, step, epoch

    def log_text(self):
        return "".join(line + "\n" for line in self.log)

    def to_dict(self):
        d = asdict(self)
        d["losses"] = [list(x) for x in self.losses]
        d["evals"] = [list(x) for x in self.evals]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["losses"] = [tuple(x) for x in d["losses"]]
        d["evals"] = [tuple(x) for x in d["evals"]]
        return cls(**d)


def _x_feat(pair, params):
    return pair.x_feat if params.hp.uses_features else None


def nll_loss(batch, params):
    """Mean negative log-likelihood over ``batch`` and its mean gradient."""
    if not batch:
        raise ValueError("empty batch")
    grads = {name: np.zeros_like(getattr(params, name)) for name in params.trainable_names()}
    scale = 1.0 / len(batch)
    losses = []
    for pair in batch:
        cache = model.forward(pair.question, pair.answer, params, _x_feat(pair, params))
        loss, _ = model.backward(cache, pair.label, params, into=grads, scale=scale)
        losses.append(loss)
    return math.fsum(losses) / len(batch), grads


def score_dataset(params, ds, name="relqa", key=model.score):
    run = RankedRun(name=name)
    for qid, pairs in ds.questions.items():
        run.add(qid, [(p.cid, key(p.question, p.answer, params, _x_feat(p, params))) for p in pairs])
    return run


def evaluate_dataset(params, ds, policy=DEFAULT_POLICY):
    return evaluate(score_dataset(params, ds), ds.qrels(), policy)


def train(train_set, dev_set, params, config=None, state=None, on_log=None):
    """Train ``params`` in place; return ``(best_params, history, best_state)``.

    Dev MAP is computed every ``eval_interval`` updates and at the end of each
    epoch; the parameters with the highest dev MAP are snapshotted and
    returned.  Training stops after ``max_epochs`` or once ``patience``
    consecutive epochs bring no new best.  ``on_log`` receives each log line.
    """
    config = config or TrainConfig()
    pairs = list(train_set.pairs())
    if not pairs:
        raise ValueError("training set is empty")
    dev_kept, _ = filter_questions(dev_set, config.dev_policy)
    if len(dev_kept) == 0:
        raise ValueError("dev set has no usable question after filtering")

    rng = np.random.default_rng(config.seed)
    state = state or AdadeltaState.for_params(params, config.rho, config.eps)
    history = TrainHistory()
    best = (params.copy(), state.copy())
    best_map = -math.inf
    step, since_best = 0, 0

    def emit():
        if on_log is not None:
            on_log(history.log[-1])

    def dev_eval(epoch):
        nonlocal best, best_map
        dev_map = evaluate_dataset(params, dev_kept, "none").map
        is_best = dev_map > best_map
        if is_best:
            best_map = dev_map
            best = (params.copy(), state.copy())
        history.record_eval(step, epoch, dev_map, is_best)
        emit()
        return is_best

    history.stop_reason = "max-epochs"
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(pairs))
        improved = False
        for start in range(0, len(pairs), config.batch_size):
            batch = [pairs[i] for i in order[start:start + config.batch_size]]
            loss, grads = nll_loss(batch, params)
            state.step(params, grads)
            step += 1
            history.record_loss(step, epoch, loss)
            emit()
            if step % config.eval_interval == 0:
                improved |= dev_eval(epoch)
        if not history.evals or history.evals[-1][0] != step:
            improved |= dev_eval(epoch)
        history.epochs_run = epoch
        since_best = 0 if improved else since_best + 1
        if since_best >= config.patience:
            history.stop_reason = "early-stop"
            break
    return best[0], history, best[1]
