import os

try:
    from ._version import __version__
except(ImportError):
    pass

__abspath__ = os.path.dirname(os.path.dirname(os.path.abspath(__file__))) + '/'
