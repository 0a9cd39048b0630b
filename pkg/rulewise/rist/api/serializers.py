from rest_framework import serializers


class RistParamsSerializer(serializers.Serializer):
    n_trees = serializers.IntegerField(min_value=1, required=False)
    n_imputation_cycles = serializers.IntegerField(min_value=1, required=False)
    min_events_per_leaf = serializers.IntegerField(min_value=1, required=False)
    n_random_splits = serializers.IntegerField(min_value=1, required=False)
    min_leaf = serializers.IntegerField(min_value=1, required=False)
    mtry = serializers.IntegerField(min_value=1, required=False, allow_null=True)
    subsample = serializers.FloatField(min_value=0.0, max_value=1.0, required=False)
    horizon = serializers.FloatField(required=False, allow_null=True)
    n_jobs = serializers.IntegerField(required=False)

    def validate_subsample(self, value):
        if value <= 0:
            raise serializers.ValidationError('subsample must be positive')
        return value

    def validate_horizon(self, value):
        if value is not None and value <= 0:
            raise serializers.ValidationError('horizon must be positive')
        return value
