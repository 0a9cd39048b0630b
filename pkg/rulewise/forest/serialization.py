import json
from pathlib import Path

import numpy as np
from packaging.version import InvalidVersion, Version

from cohort.exceptions import ArgumentError
from forest.api.serializers import ForestDocumentSerializer
from forest.ensemble import Forest
from forest.params import ForestParams
from forest.tree import Tree, TreeNode

FORMAT = 'rulewise-forest'
FORMAT_VERSION = '1.1'


def check_format_version(found, supported, kind):
    """Accept documents whose major version matches ``supported``."""
    try:
        found_version = Version(str(found))
    except InvalidVersion:
        raise ArgumentError(f"{kind} document has an invalid format_version '{found}'") from None
    if found_version.major != Version(supported).major:
        raise ArgumentError(f'{kind} document version {found} is not compatible with {supported}')
    return found_version


def forest_to_document(forest):
    return {
        'format': FORMAT,
        'format_version': FORMAT_VERSION,
        'mode': forest.mode,
        'n_features': forest.n_features,
        'classes': list(forest.classes) if forest.classes is not None else None,
        'seed': forest.seed,
        'n_train': forest.n_train,
        'params': forest.params.as_dict(),
        'trees': [
            {'nodes': tree.root().to_nested(), 'oob': [int(i) for i in rows]}
            for tree, rows in zip(forest.trees, forest.oob)
        ],
    }


def forest_from_document(document):
    serializer = ForestDocumentSerializer(data=document)
    serializer.is_valid(raise_exception=True)
    data = serializer.validated_data
    check_format_version(data['format_version'], FORMAT_VERSION, 'forest')
    trees = tuple(Tree.from_root(TreeNode.from_nested(entry['nodes'])) for entry in data['trees'])
    classes = data.get('classes')
    return Forest(
        trees=trees,
        mode=data['mode'],
        params=ForestParams(**data['params']),
        oob=tuple(np.asarray(entry['oob'], dtype=np.int64) for entry in data['trees']),
        seed=data.get('seed'),
        classes=tuple(classes) if classes is not None else None,
        n_features=data['n_features'],
        n_train=data['n_train'],
    )


def save_forest(forest, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(forest_to_document(forest)))
    return path


def load_forest(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f'Forest file not found: {path}')
    return forest_from_document(json.loads(path.read_text()))
