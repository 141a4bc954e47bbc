"""Quality-diversity optimization toolkit with learned competition functions."""

__version__ = "0.1.0"
