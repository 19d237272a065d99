from .base import *  # noqa  isort:skip
