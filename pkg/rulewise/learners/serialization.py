import json
from pathlib import Path

import numpy as np

from cohort.exceptions import ArgumentError
from forest.serialization import check_format_version, forest_from_document, forest_to_document
from learners.api.serializers import LearnerConfigSerializer, RuleDocumentSerializer
from learners.config import LearnerConfig
from learners.rules import LinearRule, PairedForestRule, StratumLookupRule, UniversalRule
from toystrata.models import StratumRule

FORMAT = 'rulewise-rule'
FORMAT_VERSION = '1.0'


def learner_config_from_dict(data, base=None):
    serializer = LearnerConfigSerializer(data=data or {})
    serializer.is_valid(raise_exception=True)
    values = dict(serializer.validated_data)
    base = base or LearnerConfig()
    if 'forest' in values:
        values['forest'] = base.forest.with_overrides(**values['forest'])
    return base.with_overrides(**values)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def rule_to_document(rule, covariates=None):
    document = {'format': FORMAT, 'format_version': FORMAT_VERSION, 'variant': rule.variant}
    if covariates is not None:
        document['covariates'] = list(covariates)
    if isinstance(rule, UniversalRule):
        document['arm'] = rule.arm
    elif isinstance(rule, LinearRule):
        document.update(weights=list(rule.weights), intercept=rule.intercept, tie_arm=rule.tie_arm)
    elif isinstance(rule, PairedForestRule):
        document.update(
            forest_minus=forest_to_document(rule.forest_minus),
            forest_plus=forest_to_document(rule.forest_plus),
            tie_arm=rule.tie_arm,
        )
    elif isinstance(rule, StratumLookupRule):
        document.update(
            modifiers=list(rule.modifiers),
            strata=[{'stratum': list(s), 'arm': a} for s, a in rule.stratum_rule.assignments],
        )
    else:
        raise ArgumentError(f'cannot serialize rule of type {type(rule).__name__}')
    document['diagnostics'] = _jsonable(rule.diagnostics)
    return document


def rule_from_document(document):
    serializer = RuleDocumentSerializer(data=document)
    serializer.is_valid(raise_exception=True)
    data = serializer.validated_data
    check_format_version(data['format_version'], FORMAT_VERSION, 'rule')
    diagnostics = data.get('diagnostics', {})
    variant = data['variant']
    if variant == 'universal':
        return UniversalRule(data['arm'], diagnostics=diagnostics)
    if variant == 'linear':
        return LinearRule(data['weights'], data['intercept'], data['tie_arm'], diagnostics=diagnostics)
    if variant == 'paired-forest':
        return PairedForestRule(
            forest_minus=forest_from_document(data['forest_minus']),
            forest_plus=forest_from_document(data['forest_plus']),
            tie_arm=data['tie_arm'],
            diagnostics=diagnostics,
        )
    rule = StratumRule.from_mapping({tuple(entry['stratum']): entry['arm'] for entry in data['strata']})
    return StratumLookupRule(rule, tuple(data['modifiers']), diagnostics=diagnostics)


def save_rule(rule, path, covariates=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(rule_to_document(rule, covariates), indent=2))
    return path


def load_rule(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f'Rule file not found: {path}')
    document = json.loads(path.read_text())
    return rule_from_document(document), document.get('covariates')
