""" Logging set up for surfspin runs: a console handler on stderr and an optional log file. """
import logging
import sys

root_logger = logging.getLogger()

PLAIN_FORMAT = '%(asctime)s %(levelname)-8s %(name)-25s %(message)s'
LEVEL_COLORS = {'DEBUG': 'cyan', 'INFO': 'green', 'WARNING': 'yellow', 'ERROR': 'red', 'CRITICAL': 'bold_red'}
THEME_TEXT = {'light': 'white', 'dark': 'black'}

console_hdlr = logging.StreamHandler(sys.stderr)


def get_log_colors(theme_color=None):
    """
    Format of the coloured part of a console line and the colour of each level.

    :param theme_color: 'light' or 'dark' terminal background, anything else disables colours.
    """
    text = THEME_TEXT.get(theme_color)
    if text is None:
        return '%(name)-25.25s%(reset)s %(message)s%(reset)s', dict.fromkeys(LEVEL_COLORS, '')
    return '%(name)-25.25s%(reset)s %({})s%(message)s%(reset)s'.format(text), dict(LEVEL_COLORS)


def _console_formatter(theme_color) -> logging.Formatter:
    stream = console_hdlr.stream
    if not (hasattr(stream, 'isatty') and stream.isatty()):
        return logging.Formatter(PLAIN_FORMAT)
    from colorlog import ColoredFormatter
    log_format, colors = get_log_colors(theme_color)
    return ColoredFormatter('%(asctime)s %(log_color)s%(levelname)-8s%(reset)s ' + log_format,
                            datefmt='%H:%M:%S', reset=True, log_colors=colors)


def format_logs(formatter=None, theme_color=None):
    """
    Attach the console handler to the root logger.

    A TTY gets the colorlog formatter in `theme_color`, redirected output the plain format.
    Python warnings, scipy's integration warnings among them, go through the same handler.
    """
    console_hdlr.setFormatter(formatter or _console_formatter(theme_color))
    if console_hdlr not in root_logger.handlers:
        root_logger.addHandler(console_hdlr)
    logging.captureWarnings(True)


def add_file_handler(log_file):
    """ Mirror the log into log_file with the plain format. """
    hdlr = logging.FileHandler(log_file, encoding='utf-8')
    hdlr.setFormatter(logging.Formatter(PLAIN_FORMAT))
    root_logger.addHandler(hdlr)
    return hdlr
