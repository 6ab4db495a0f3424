"""Project metadata, read from the installed distribution."""
try:
    from importlib.metadata import metadata
    from importlib.metadata import PackageNotFoundError
except ImportError:
    from importlib_metadata import metadata  # type: ignore
    from importlib_metadata import PackageNotFoundError  # type: ignore


package = "sortnumber"
project = "sortnumber"
project_no_spaces = project.replace(" ", "")
try:
    _package_metadata = metadata(package)
    version = _package_metadata["Version"]
    description = _package_metadata["Summary"]
except PackageNotFoundError:
    # Running from a source checkout.
    version = "0+unknown"
    description = ""
authors = ["The sortnumber developers"]
authors_string = ", ".join(authors)
license = "BSD"
copyright = "2026 " + authors_string
