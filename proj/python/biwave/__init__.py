from ._biwave import *  # noqa: F401,F403
from ._biwave import __version__  # noqa: F401
