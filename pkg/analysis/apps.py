from django.apps import AppConfig


class AnalysisConfig(AppConfig):
    name = 'analysis'
    verbose_name = 'Corpus statistics and ranking models'
