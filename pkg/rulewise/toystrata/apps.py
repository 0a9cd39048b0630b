from django.apps import AppConfig


class ToystrataConfig(AppConfig):
    name = 'toystrata'
    verbose_name = 'Stratified toy tables'
