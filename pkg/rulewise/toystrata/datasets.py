from toystrata.models import StratifiedTable

# (died, alive) for furosemide then torsemide
_TABLE1 = {
    (1,): ((7000, 2000), (100, 1000)),
    (0,): ((2000, 6000), (1500, 250)),
}

# Identical blocks for both T2DM values; keys are (reduced_ef, t2dm, ckd)
_TABLE3_BLOCK = {
    (1, 1): ((3350, 200), (15, 400)),
    (1, 0): ((150, 800), (35, 100)),
    (0, 1): ((500, 1500), (375, 63)),
    (0, 0): ((500, 1500), (375, 62)),
}


def table1():
    """One modifier: reduced vs preserved ejection fraction."""
    strata = tuple(_TABLE1)
    return StratifiedTable(
        modifiers=('reduced_ef',),
        strata=strata,
        counts=[_TABLE1[s] for s in strata],
        name='table1',
    )


def table3():
    """Three modifiers: ejection fraction, type 2 diabetes, chronic kidney disease."""
    cells = {}
    for t2dm in (1, 0):
        for (reduced_ef, ckd), counts in _TABLE3_BLOCK.items():
            cells[(reduced_ef, t2dm, ckd)] = counts
    strata = tuple(cells)
    return StratifiedTable(
        modifiers=('reduced_ef', 't2dm', 'ckd'),
        strata=strata,
        counts=[cells[s] for s in strata],
        name='table3',
    )


BUILTIN_TABLES = {
    'table1': table1,
    'table3': table3,
}
