from rest_framework import serializers

from cohort.api.serializers import SchemaConfigSerializer
from forest.api.serializers import ForestParamsSerializer
from learners.api.serializers import LearnerConfigSerializer
from rist.api.serializers import RistParamsSerializer


class RunConfigSerializer(serializers.Serializer):
    """JSON run configuration shared by the pipeline commands."""
    input = serializers.CharField(required=False)
    schema = SchemaConfigSerializer(required=False)
    schema_path = serializers.CharField(required=False)
    outcomes = serializers.ListField(child=serializers.CharField(), required=False, allow_empty=False)
    horizons = serializers.ListField(child=serializers.FloatField(), required=False, allow_empty=False)
    learners = serializers.ListField(child=serializers.CharField(), required=False, allow_empty=False)
    comparator = serializers.CharField(required=False)
    k = serializers.IntegerField(required=False)
    seed = serializers.IntegerField(min_value=0, required=False)
    output_dir = serializers.CharField(required=False)
    select_variables = serializers.BooleanField(required=False)
    top_m = serializers.IntegerField(min_value=1, required=False)
    normalized = serializers.BooleanField(required=False)
    clip = serializers.FloatField(required=False)
    forest = ForestParamsSerializer(required=False)
    rist = RistParamsSerializer(required=False)
    learner = LearnerConfigSerializer(required=False)
    n_jobs = serializers.IntegerField(required=False)

    def validate_horizons(self, value):
        if any(h <= 0 for h in value):
            raise serializers.ValidationError('horizons must be positive')
        return value
