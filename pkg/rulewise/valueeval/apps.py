from django.apps import AppConfig


class ValueevalConfig(AppConfig):
    name = 'valueeval'
    verbose_name = 'Value estimation'
