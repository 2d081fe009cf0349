import sys


class bcolors:
    HEADER = '\033[95m'
    OKBLUE = '\033[94m'
    OKGREEN = '\033[92m'
    WARNING = '\033[93m'
    FAIL = '\033[91m'
    BOLD = '\033[1m'
    ENDC = '\033[0m'

    def __init__(self, enabled: bool = True, stream=None):
        stream = sys.stdout if stream is None else stream
        if not enabled or not getattr(stream, "isatty", lambda: False)():
            self.disable()

    def disable(self):
        self.HEADER = ''
        self.OKBLUE = ''
        self.OKGREEN = ''
        self.WARNING = ''
        self.FAIL = ''
        self.BOLD = ''
        self.ENDC = ''

    def status(self, passed: bool) -> str:
        """PASS in green or FAIL in red."""
        if passed:
            return f"{self.OKGREEN}PASS{self.ENDC}"
        return f"{self.FAIL}FAIL{self.ENDC}"

    def header(self, text: str) -> str:
        return f"{self.HEADER}{self.BOLD}{text}{self.ENDC}"
