import csv

import numpy as np

SURFACE_COLUMNS = ('time_index', 'time', 'x', 'aux', 'value', 'policy', 'delta')


def export_surface_csv(surface, policy, strategy, stream):
    """
    Writes the reachable nodes of the surface as CSV rows, with the variance
    choice and the holdings of the step starting at the node. Slices after
    settlement are skipped.
    """
    spec, aux = surface.spec, surface.aux
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(SURFACE_COLUMNS)
    rows = 0
    for i in range(aux.settlement + 1):
        terminal = i >= aux.settlement
        levels = aux.levels(i)
        nodes, states = np.nonzero(aux.valid_mask(i))
        held = None if terminal else strategy.at(i, spec.x_levels[nodes], levels[states])
        for n, (j, k) in enumerate(zip(nodes, states)):
            writer.writerow((
                i,
                repr(float(spec.time_knots[i])),
                repr(float(spec.x_levels[j])),
                repr(float(levels[k])),
                repr(float(surface.values[i][j, k])),
                '' if terminal else ('High' if policy.choice[i][j, k] else 'Low'),
                '' if terminal else repr(float(held[n])),
            ))
            rows += 1
    return rows
