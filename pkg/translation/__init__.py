from .main import install
