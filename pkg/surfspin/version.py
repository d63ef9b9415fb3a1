# Single source of the surfspin version.
# It is read by setup.py without importing the package and written into every run manifest.
VERSION = '0.1.0'
