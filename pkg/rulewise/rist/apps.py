from django.apps import AppConfig


class RistConfig(AppConfig):
    name = 'rist'
    verbose_name = 'Recursively imputed survival trees'
