from rest_framework import serializers

from synthgen.constants import ASSIGNMENTS, COVARIATE_LAWS, EVENT_LAWS, FUNCTION_KINDS


class ScenarioFunctionSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=FUNCTION_KINDS)
    value = serializers.FloatField(required=False)
    intercept = serializers.FloatField(required=False)
    coefficients = serializers.ListField(child=serializers.FloatField(), required=False)
    covariate = serializers.IntegerField(min_value=0, required=False)
    pair = serializers.ListField(
        child=serializers.IntegerField(min_value=0), min_length=2, max_length=2, required=False,
    )
    cutoff = serializers.FloatField(required=False)
    scale = serializers.FloatField(required=False)


class ScenarioSpecSerializer(serializers.Serializer):
    name = serializers.CharField(required=False, allow_blank=True)
    p = serializers.IntegerField(min_value=1)
    covariate_law = serializers.ChoiceField(choices=COVARIATE_LAWS, required=False)
    prevalence = serializers.ListField(
        child=serializers.FloatField(min_value=0.0, max_value=1.0), required=False,
    )
    assignment = serializers.ChoiceField(choices=ASSIGNMENTS, required=False)
    p_treated = serializers.FloatField(required=False)
    assignment_intercept = serializers.FloatField(required=False)
    assignment_coefficients = serializers.ListField(child=serializers.FloatField(), required=False)
    baseline = ScenarioFunctionSerializer(required=False)
    contrast = ScenarioFunctionSerializer(required=False)
    noise = serializers.FloatField(min_value=0.0, required=False)
    event_law = serializers.ChoiceField(choices=EVENT_LAWS, required=False)
    censoring_rate = serializers.FloatField(min_value=0.0, max_value=1.0, required=False)
    horizon = serializers.FloatField(required=False)

    def validate_p_treated(self, value):
        if not 0 < value < 1:
            raise serializers.ValidationError('p_treated must lie in (0, 1)')
        return value

    def validate_censoring_rate(self, value):
        if value >= 1:
            raise serializers.ValidationError('censoring rate must be below 1')
        return value

    def validate_horizon(self, value):
        if value <= 0:
            raise serializers.ValidationError('horizon must be positive')
        return value
