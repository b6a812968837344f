import time
from datetime import datetime, timedelta

import logging
logger = logging.getLogger(__name__)


class Timer:
    def __init__(self):
        """
        Measures elapsed wall time on the monotonic high-resolution clock (time.perf_counter).
        The reference start time is taken on construction.
        """
        self.start_time = time.perf_counter()

    def set_start_time(self):
        """
        Sets a new reference start time.
        """
        self.start_time = time.perf_counter()

    def get_elapsed(self, format: str = "seconds") -> float:
        """
        Returns the elapsed time unformatted (contains decimal places).

        'format' can be "seconds" or "milliseconds"
        """
        elapsed = time.perf_counter() - self.start_time
        if format == "seconds":
            return elapsed
        elif format == "milliseconds":
            return elapsed * 1000
        raise ValueError(f"Unknown format {format}, expected 'seconds' or 'milliseconds'")

    def get_elapsed_formatted(self, format: str = "seconds", reset_start_time: bool = False) -> str:
        """
        If format is 'seconds':
            Gets elapsed time in hh:mm:ss format
        If format is 'milliseconds':
            Gets elapsed time in ss:ms format

        If 'reset_start_time', self.start_time will be reset to the time of calling this function.
        """
        if format == "seconds":
            return_value = str(timedelta(seconds=int(self.get_elapsed("seconds"))))
        else:
            seconds, milliseconds = divmod(int(self.get_elapsed("milliseconds")), 1000)
            return_value = f"{seconds}s:{milliseconds:03d}ms"

        if reset_start_time:
            self.set_start_time()
        return return_value

    def print_elapsed_time(self, prefix: str = "Elapsed: "):
        """
        Logs the elapsed time in ss:ms format at INFO level.
        """
        logger.info(f"{prefix}{self.get_elapsed_formatted('milliseconds')}")

    @classmethod
    def get_current_time(cls):
        """
        Gets the current time and returns it in the format "%Y-%m-%d %H:%M:%S"
        """
        return datetime.now().strftime("%Y-%m-%d %H:%M:%S")
