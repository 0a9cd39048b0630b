from rest_framework import serializers

from forest.api.serializers import ForestParamsSerializer
from learners.api.serializers import LearnerConfigSerializer
from rist.api.serializers import RistParamsSerializer


class EvaluationConfigSerializer(serializers.Serializer):
    k = serializers.IntegerField(min_value=2, required=False)
    clip = serializers.FloatField(min_value=0.0, max_value=0.5, required=False)
    normalized = serializers.BooleanField(required=False)
    forest = ForestParamsSerializer(required=False)
    rist = RistParamsSerializer(required=False)
    learner = LearnerConfigSerializer(required=False)
    n_jobs = serializers.IntegerField(required=False)

    def validate_clip(self, value):
        if value >= 0.5:
            raise serializers.ValidationError('clip must be below 0.5')
        return value
