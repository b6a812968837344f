# Sets up logging from a JSON dictConfig file:
#
#   from nf4lut import LogConfigLoader
#   import logging
#
#   LogConfigLoader.setup_logging_config()
#   logger = logging.getLogger(__name__)
#
# Without an explicit filepath the packaged config/logging_config.json is used.

import os
from logging import config
import logging

from .JsonUtil import JsonUtil

logger = logging.getLogger(__name__)

DEFAULT_LOG_CONFIG = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "config", "logging_config.json")


class LogConfigLoader:
    @classmethod
    def setup_logging_config(cls, log_config_json_filepath: str = DEFAULT_LOG_CONFIG, level: str = None):
        """
        Performs the following function calls in order to setup the logging configuration:
            log_config_dict = JsonUtil.load_json(log_config_json_filepath)
            config.dictConfig(log_config_dict)

        If 'level' is given (eg. "DEBUG"), it overrides the root logger level of the file.
        """
        log_config_dict = JsonUtil.load_json(log_config_json_filepath)
        if level is not None:
            log_config_dict.setdefault("loggers", {}).setdefault("", {})["level"] = level.upper()
        config.dictConfig(log_config_dict)
        logger.debug(f"Setup log config using: {log_config_json_filepath}")
