import logging

from surfspin import logs


def test_no_theme_means_no_colors():
    log_format, colors = logs.get_log_colors(None)
    assert '%(message)s' in log_format
    assert not any(colors.values())


def test_themes_color_the_levels():
    for theme in ('light', 'dark'):
        _, colors = logs.get_log_colors(theme)
        assert colors['ERROR'] == 'red'


def test_console_handler_is_attached_once():
    logs.format_logs(theme_color='light')
    logs.format_logs(theme_color='light')
    assert logs.root_logger.handlers.count(logs.console_hdlr) == 1


def test_file_handler_uses_the_plain_format(tmpdir):
    path = str(tmpdir.join('surfspin.log'))
    handler = logs.add_file_handler(path)
    try:
        logging.getLogger('surfspin.test').warning('written to %s', path)
        handler.flush()
        with open(path, encoding='utf-8') as f:
            assert 'written to' in f.read()
    finally:
        logs.root_logger.removeHandler(handler)
        handler.close()
