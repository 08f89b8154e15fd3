import logging
import logging.config
import os
import time
from functools import lru_cache, wraps

import yaml

import tomography
from tomography.utils.configuration import configuration


@lru_cache(maxsize=None)
def initialize_logging():
    if os.path.exists(configuration.LOGGING_CONFIG):
        with open(configuration.LOGGING_CONFIG, "rt") as f:
            config = yaml.safe_load(f.read())
        # Configure the logging module with the config file
        logging.config.dictConfig(config)
    else:
        logging.basicConfig(level=configuration.LOG_LEVEL)
    logger = logging.getLogger(tomography.__name__)
    logger.setLevel(configuration.LOG_LEVEL)
    return logger


def timeit(method):
    """Decorator for measuring function run times"""

    @wraps(method)
    def timed(*args, **kw):
        t1 = time.time()
        result = method(*args, **kw)
        t2 = time.time()
        log.debug("%r run time: %2.2f s", method.__name__, t2 - t1)
        return result

    return timed


log = initialize_logging()
