# flipmode_project/settings.py

from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / "subdir".
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config("DJANGO_SECRET_KEY", default="flipmode-dev-key-not-for-deployment")
DEBUG = config("DEBUG", default=False, cast=bool)
ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = [
    "django.contrib.auth",
    "django.contrib.contenttypes",

    # Third-party apps
    "rest_framework",

    # Your apps
    "flipmode",
]

# No models: scenarios and reports live on disk.
DATABASES = {}

# Internationalization
LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Django REST Framework Settings
REST_FRAMEWORK = {
    "UNAUTHENTICATED_USER": None,
}


# FLIPMODE SETTINGS
FLIPMODE_DEFAULT_SEED = config("FLIPMODE_DEFAULT_SEED", default=20050101, cast=int)
FLIPMODE_EXPORT_DIR = config("FLIPMODE_EXPORT_DIR", default="exports")
FLIPMODE_MC_WORKERS = config("FLIPMODE_MC_WORKERS", default=4, cast=int)
FLIPMODE_LOG_LEVEL = config("FLIPMODE_LOG_LEVEL", default="INFO")


LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {
            "format": "{levelname} {name}: {message}",
            "style": "{",
        },
    },
    "handlers": {
        "stderr": {
            "class": "logging.StreamHandler",
            "formatter": "plain",
        },
    },
    "loggers": {
        "flipmode": {
            "handlers": ["stderr"],
            "level": FLIPMODE_LOG_LEVEL,
            "propagate": False,
        },
    },
}
