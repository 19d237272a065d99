from django.apps import AppConfig
from django.utils.translation import gettext_lazy as _


class LatticeConfig(AppConfig):
    name = "lattice"
    verbose_name = _("Superreplication lattice")
