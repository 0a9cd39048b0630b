from rest_framework import serializers


class OutcomeColumnsSerializer(serializers.Serializer):
    time = serializers.CharField()
    event = serializers.CharField()


class SchemaConfigSerializer(serializers.Serializer):
    """Column mapping for cohort CSV files."""
    id_column = serializers.CharField(default='id')
    treatment_column = serializers.CharField(default='treatment')
    treatment_labels = serializers.DictField(
        child=serializers.IntegerField(),
        default=lambda: {'-1': -1, '1': 1, '+1': 1},
    )
    outcomes = serializers.DictField(
        child=OutcomeColumnsSerializer(),
        default=lambda: {'days_alive': {'time': 'time', 'event': 'event'}},
    )
    covariates = serializers.ListField(child=serializers.CharField(), required=False, allow_null=True)
    missing = serializers.ChoiceField(choices=['reject-file', 'drop-row'], default='reject-file')

    def validate_treatment_labels(self, value):
        bad = {label: arm for label, arm in value.items() if arm not in (-1, 1)}
        if bad:
            raise serializers.ValidationError(
                f'Treatment labels must map to -1 or +1, got {bad}'
            )
        if set(value.values()) != {-1, 1}:
            raise serializers.ValidationError('Treatment labels must cover both arms')
        return value

    def validate_outcomes(self, value):
        if not value:
            raise serializers.ValidationError('At least one outcome is required')
        return value
