from django.apps import AppConfig


class FlipmodeConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "flipmode"
    verbose_name = "Flipped-mode noise analysis"
