import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'rulewise.settings')
django.setup()
