import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "segbench_site.settings")
django.setup()
