import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'OrdoLex.settings')
django.setup()
