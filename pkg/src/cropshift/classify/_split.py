"""Split-kernel backend selection: compiled if built, numpy otherwise."""

try:
    from cropshift.classify import _split_fast as _impl

    BACKEND = "compiled"
except ImportError:  # extension not built; results are identical either way
    from cropshift.classify import _split_py as _impl

    BACKEND = "python"

best_split_node = _impl.best_split_node
