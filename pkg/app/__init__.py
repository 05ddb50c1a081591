from app.core.config import VERSION

__version__ = VERSION
