from .base import *  # isort:skip


ENVIRONMENT = 'TEST'

LOGGING['loggers']['SuperHedge']['level'] = 'WARNING'
