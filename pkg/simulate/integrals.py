import numpy as np
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _


def check_grid(strategy, ensemble):
    knots = strategy.spec.time_knots
    if ensemble.time_knots.shape != knots.shape or not np.allclose(ensemble.time_knots, knots, rtol=0, atol=1e-9):
        raise ValidationError(
            _("The ensemble is not sampled on the knots of the strategy."), code='shape')


def holdings(strategy, ensemble):
    """Holdings h(t_i, B_{t_i}, aux_{t_i}) per path and step, shape (paths, steps)."""
    check_grid(strategy, ensemble)
    states = strategy.aux.path_states(ensemble.B)
    return np.column_stack([
        strategy.at(i, ensemble.B[:, i], states[:, i]) for i in range(ensemble.n_steps)
    ]) if ensemble.n_steps else np.zeros((ensemble.n_paths, 0))


def path_integrals(strategy, ensemble):
    """Running discrete integrals I_{t_k}(h) = Σ_{i<k} h_i (B_{i+1} − B_i) for all paths, starting at 0."""
    gains = holdings(strategy, ensemble) * ensemble.increments
    return np.concatenate([np.zeros((ensemble.n_paths, 1)), np.cumsum(gains, axis=1)], axis=1)


def stochastic_integral(strategy, ensemble, path_index):
    """I_T(h) on one path, holdings taken at the left end of every step."""
    check_grid(strategy, ensemble)
    path = ensemble.B[path_index:path_index + 1]
    states = strategy.aux.path_states(path)
    total = 0.0
    for i in range(ensemble.n_steps):
        total += float(strategy.at(i, path[:, i], states[:, i])[0]) * float(path[0, i + 1] - path[0, i])
    return total
