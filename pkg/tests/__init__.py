import logging

logging.getLogger('surfspin').setLevel(logging.INFO)
