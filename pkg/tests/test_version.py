import inspect

from packaging import version

import fracshe.version
from fracshe.version import NAME, __version__


class TestVersion:
    def test_version(self):
        assert isinstance(version.parse(__version__), version.Version)

    def test_name(self):
        assert NAME == "fracshe"

    def test_python3_only(self):
        assert "__future__" not in inspect.getsource(fracshe.version)
