"""Random-field mean-field spherical model: maximizers, Gibbs states and metastates."""

try:
    from . import _rfmfs as _ext
except ImportError:  # in-tree build: the extension sits next to, not inside, the package
    import _rfmfs as _ext

__all__ = [name for name in dir(_ext) if not name.startswith("_")]
globals().update({name: getattr(_ext, name) for name in __all__})
__version__ = "0.1.0"
