from pathlib import Path

from cohort.models import ARMS
from learners.rules import StratumLookupRule
from learners.serialization import save_rule
from pipeline.base import RulewiseCommand
from pipeline.runner import write_manifest
from toystrata.datasets import BUILTIN_TABLES
from toystrata.models import StratumRule
from toystrata.standardize import (
    enumerate_rules, pooled_risks, standardized_risk, stratified_optimal_rule, stratum_risks,
)
from toystrata.tableio import load_table


class Command(RulewiseCommand):
    help = 'Stratum risks, standardized risks and the optimal stratum rule of a toy table'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('table', help=f'One of {", ".join(BUILTIN_TABLES)} or a table CSV path')
        parser.add_argument('--all-rules', action='store_true', help='List the standardized risk of every stratum rule')
        parser.add_argument('--tie-arm', type=int, choices=ARMS, default=-1)

    def run(self, *args, **options):
        name = options['table']
        table = BUILTIN_TABLES[name]() if name in BUILTIN_TABLES else load_table(name)
        risks = stratum_risks(table)
        pooled = pooled_risks(table)
        label = table.arm_label

        self.stdout.write(self.style.MIGRATE_HEADING(f'Table {table.name or name}: {table.total} subjects'))
        self.stdout.write('Stratum risks')
        for stratum in table.strata:
            cells = '  '.join(f'{label(arm)} {risks[(stratum, arm)]:.2f}' for arm in ARMS)
            self.stdout.write(f'  {table.describe(stratum):<40} {cells}  pooled {pooled["stratum"][stratum]:.2f}')
        arms = ', '.join(f'{label(arm)} {pooled["arm"][arm]:.2f}' for arm in ARMS)
        self.stdout.write(f'Arm risks: {arms}; overall {pooled["overall"]:.2f}')

        tailored = stratified_optimal_rule(table, options['tie_arm'])
        self.stdout.write('Standardized risk')
        for arm in ARMS:
            value = standardized_risk(table, StratumRule.universal(table, arm))
            self.stdout.write(f'  {"everyone " + label(arm):<40} {value:.2f}')
        self.stdout.write(f'  {"tailored rule":<40} {standardized_risk(table, tailored):.2f}')

        self.stdout.write('Tailored rule')
        for stratum in table.strata:
            self.stdout.write(f'  {table.describe(stratum):<40} {label(tailored[stratum])}')

        if options['all_rules']:
            self.stdout.write('Every stratum rule')
            for rule in enumerate_rules(table):
                arms = ' '.join(f'{arm:+d}' for _, arm in rule.assignments)
                self.stdout.write(f'  {arms}  {standardized_risk(table, rule):.4f}')

        if options.get('out'):
            out = Path(options['out'])
            rule_path = save_rule(StratumLookupRule(tailored, table.modifiers), out / 'rule.json', table.modifiers)
            manifest = write_manifest(out, 'toy', {'table': name, 'tie_arm': options['tie_arm']}, {}, [rule_path])
            self.written([rule_path, manifest])
        self.stdout.write(self.style.SUCCESS('Done.'))
