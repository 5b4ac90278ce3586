from celery import Celery

from . import settings

app = Celery('eresonance')

# Load the CELERY_ prefixed values from the settings module
app.config_from_object(settings, namespace='CELERY')

# Scan tasks live in the oracle app
app.autodiscover_tasks(['oracle'])
