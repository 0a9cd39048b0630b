from rest_framework import serializers


class ForestParamsSerializer(serializers.Serializer):
    n_trees = serializers.IntegerField(min_value=1, required=False)
    mtry = serializers.IntegerField(min_value=1, required=False, allow_null=True)
    min_leaf = serializers.IntegerField(min_value=1, required=False)
    max_depth = serializers.IntegerField(min_value=0, required=False, allow_null=True)
    sample_fraction = serializers.FloatField(min_value=0.0, max_value=1.0, required=False)
    bootstrap = serializers.BooleanField(required=False)
    n_jobs = serializers.IntegerField(required=False)

    def validate_sample_fraction(self, value):
        if value <= 0:
            raise serializers.ValidationError('sample_fraction must be positive')
        return value


class TreeDocumentSerializer(serializers.Serializer):
    nodes = serializers.ListField()
    oob = serializers.ListField(child=serializers.IntegerField(min_value=0))


class ForestDocumentSerializer(serializers.Serializer):
    """Versioned JSON form of a fitted forest; trees are nested arrays."""
    format = serializers.ChoiceField(choices=['rulewise-forest'])
    format_version = serializers.CharField()
    mode = serializers.ChoiceField(choices=['classification', 'regression'])
    n_features = serializers.IntegerField(min_value=1)
    classes = serializers.ListField(child=serializers.FloatField(), allow_null=True, required=False)
    seed = serializers.IntegerField(allow_null=True, required=False)
    n_train = serializers.IntegerField(min_value=0)
    params = ForestParamsSerializer()
    trees = TreeDocumentSerializer(many=True)
