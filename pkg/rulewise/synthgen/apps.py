from django.apps import AppConfig


class SynthgenConfig(AppConfig):
    name = 'synthgen'
    verbose_name = 'Synthetic cohorts'
