from django.apps import AppConfig


class TreebankConfig(AppConfig):
    name = 'treebank'
    verbose_name = 'Treebank ingestion and counterfactual variants'
