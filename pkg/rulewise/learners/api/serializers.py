from rest_framework import serializers

from forest.api.serializers import ForestParamsSerializer


class LearnerConfigSerializer(serializers.Serializer):
    surrogate = serializers.ChoiceField(choices=['ramp', 'hinge'], required=False)
    lam = serializers.FloatField(min_value=0.0, required=False, allow_null=True)
    lam_grid = serializers.ListField(child=serializers.FloatField(min_value=0.0), required=False, allow_empty=False)
    inner_folds = serializers.IntegerField(min_value=2, required=False)
    max_dc_iter = serializers.IntegerField(min_value=1, required=False)
    tol = serializers.FloatField(min_value=0.0, required=False)
    subgradient_iter = serializers.IntegerField(min_value=1, required=False)
    max_iter = serializers.IntegerField(min_value=1, required=False)
    outcome_model = serializers.ChoiceField(choices=['forest', 'linear'], required=False)
    forest = ForestParamsSerializer(required=False)
    tie_arm = serializers.ChoiceField(choices=[-1, 1], required=False)

    def validate_lam(self, value):
        if value is not None and value <= 0:
            raise serializers.ValidationError('lam must be positive')
        return value


class StratumEntrySerializer(serializers.Serializer):
    stratum = serializers.ListField(child=serializers.ChoiceField(choices=[0, 1]))
    arm = serializers.ChoiceField(choices=[-1, 1])


class RuleDocumentSerializer(serializers.Serializer):
    """Versioned JSON form of a treatment rule, tagged by variant."""
    format = serializers.ChoiceField(choices=['rulewise-rule'])
    format_version = serializers.CharField()
    variant = serializers.ChoiceField(choices=['universal', 'linear', 'paired-forest', 'stratum-lookup'])
    covariates = serializers.ListField(child=serializers.CharField(), required=False)
    arm = serializers.ChoiceField(choices=[-1, 1], required=False)
    weights = serializers.ListField(child=serializers.FloatField(), required=False)
    intercept = serializers.FloatField(required=False)
    tie_arm = serializers.ChoiceField(choices=[-1, 1], required=False, default=-1)
    forest_minus = serializers.DictField(required=False)
    forest_plus = serializers.DictField(required=False)
    modifiers = serializers.ListField(child=serializers.CharField(), required=False)
    strata = StratumEntrySerializer(many=True, required=False)
    diagnostics = serializers.DictField(required=False)

    REQUIRED = {
        'universal': ('arm',),
        'linear': ('weights', 'intercept'),
        'paired-forest': ('forest_minus', 'forest_plus'),
        'stratum-lookup': ('modifiers', 'strata'),
    }

    def validate(self, attrs):
        missing = [name for name in self.REQUIRED[attrs['variant']] if name not in attrs]
        if missing:
            raise serializers.ValidationError(f"{attrs['variant']} rule needs field '{missing[0]}'")
        return attrs
