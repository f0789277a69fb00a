#!/usr/bin/env python
"""Command-line entry point for the ordolex treebank pipeline.

    python manage.py variants --input hi_hdtb-ud-train.conllu --out runs/
    python manage.py stats --out runs/
    python manage.py classify --out runs/
    python manage.py report --out runs/
"""
import os
import sys


def main():
    """Run a pipeline stage (or any Django command)."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'OrdoLex.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
