from pathlib import Path

import numpy as np
import pandas as pd

REPORT_COLUMNS = (
    'rule', 'reward_type', 'horizon_days', 'value', 'ci_low', 'ci_high', 'diff', 'diff_ci_low', 'diff_ci_high',
)
RULE_LABELS = {
    'zero': 'Zero-order',
    'rf': 'RF',
    'rwl': 'RWL',
    'earl': 'EARL',
    'universal:+1': 'Everyone received +1',
    'universal:-1': 'Everyone received -1',
}


def rule_label(learner):
    return RULE_LABELS.get(learner, learner)


def report_rows(compared, reward_type):
    rows = []
    for estimate in compared:
        diff = estimate.comparator_difference or (np.nan, np.nan, np.nan)
        rows.append({
            'rule': estimate.learner,
            'reward_type': reward_type,
            'horizon_days': estimate.horizon,
            'value': estimate.point,
            'ci_low': estimate.ci_low,
            'ci_high': estimate.ci_high,
            'diff': diff[0],
            'diff_ci_low': diff[1],
            'diff_ci_high': diff[2],
        })
    return rows


def report_frame(blocks):
    """Long report from ``(reward_type, compared estimates)`` blocks."""
    rows = [row for reward_type, compared in blocks for row in report_rows(compared, reward_type)]
    return pd.DataFrame(rows, columns=list(REPORT_COLUMNS))


def _interval(point, low, high):
    if np.isnan(point):
        return '-'
    return f'{point:.1f} ({low:.1f}, {high:.1f})'


def format_table(frame):
    """Aligned text: one block per horizon, a value and a difference column per reward type."""
    blocks = []
    for horizon, block in frame.groupby('horizon_days', sort=True):
        rules = list(dict.fromkeys(block['rule']))
        table = pd.DataFrame(index=[rule_label(rule) for rule in rules])
        for reward_type, rows in block.groupby('reward_type', sort=False):
            rows = rows.set_index('rule').reindex(rules)
            table[f'{reward_type} days (95% CI)'] = [
                _interval(r.value, r.ci_low, r.ci_high) for r in rows.itertuples()
            ]
            table[f'{reward_type} difference (95% CI)'] = [
                _interval(r.diff, r.diff_ci_low, r.diff_ci_high) for r in rows.itertuples()
            ]
        blocks.append(f'Expected days under each treatment rule, horizon {horizon:g} days\n{table.to_string()}')
    return '\n\n'.join(blocks) + '\n'


def write_report(frame, directory, stem='report'):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / f'{stem}.csv'
    txt_path = directory / f'{stem}.txt'
    frame.to_csv(csv_path, index=False, float_format='%.6f')
    txt_path.write_text(format_table(frame))
    return csv_path, txt_path
