from slowapi import Limiter
from slowapi.util import get_remote_address

from tsgd.config import get_settings

limiter = Limiter(key_func=get_remote_address, default_limits=[])
EXPENSIVE_LIMIT = get_settings().rate_limit
