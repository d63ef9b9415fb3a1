##########################################################################
#                                                                        #
#  This is the config-template for surfspin. Copy it to config.py,       #
#  change what you need and pass it with --config.                       #
#                                                                        #
#  This is a regular Python file: upper case names are settings, the     #
#  rest is ignored. Anything left out keeps its built-in default, and    #
#  command line flags override whatever is set here.                     #
#                                                                        #
##########################################################################

import logging
import math

##########################################################################
# Physical constants                                                     #
##########################################################################

# Gyromagnetic ratios in rad/μs/G.
# GAMMA_E = 2 * math.pi * 2.80
# GAMMA_N = 2 * math.pi * 4.2577e-3  # protons

# Dipolar constant J0 = ħγ_e² in nm³/μs and ħ in erg·s.
# J0 = 326.7
# HBAR = 1.054571817e-27

##########################################################################
# Surface spin ensembles                                                 #
##########################################################################

# Exclusion radius around the NV centre and the largest disc the sampler
# may draw from, both in nm.
# ENSEMBLE_MIN_RADIUS = 2.0
# ENSEMBLE_MAX_RADIUS = 5000.0

# Polar angle of the applied field against the surface normal and its
# azimuth. The defaults put the field along [1,1,1]/√3.
# FIELD_TILT = math.acos(1 / math.sqrt(3))
# FIELD_AZIMUTH = math.pi / 4

# Depths beyond this (nm) are refused by the depth inversion.
# DEPTH_MAX = 1.0e4

##########################################################################
# Sequence response                                                      #
##########################################################################

# Filter function quadrature tolerance and maximum bisection depth.
# QUAD_RTOL = 1e-6
# QUAD_MAX_LEVELS = 20

# Number of π-pulse durations added to the free evolution time.
# PI_EQUIVALENTS = {'Ramsey': 1, 'SpinLock': 1, 'Echo': 2, 'XY4': 5, 'MREV8InEcho': 10}

# t³ envelope coefficients of the closed forms:
# 'filter'    - computed from each filter function (1/12, 1/192, ...)
# 'published' - the literal coefficients 1/12, 13/4500 and 49/2592
# ENVELOPE_COEFFS = 'filter'

##########################################################################
# Cluster simulations                                                    #
##########################################################################

# Largest cluster (central spin included). 2^N sized matrices are
# exponentiated so every extra spin doubles the cost.
# CLUSTER_MAX_SPINS = 10

# Prefactor of the rotating frame relaxation rate Γ = c·γ_e²V(Ω).
# T1RHO_PREFACTOR = 0.5

# Worker threads for disorder realizations and density scans.
# THREADS = 1

##########################################################################
# Hopping model and fits                                                 #
##########################################################################

# HOPPING_ALPHA = 5.0
# HOPPING_BETA = 1.0
# HOPPING_KAPPA = 0.31

# FIT_MAX_NFEV = 500
# FIT_XTOL = 1e-8
# FIT_STARTS = 5

# Neighbours per cluster and realizations per grid point of the density scan.
# DENSITY_NEIGHBORS = 5
# DENSITY_REALIZATIONS = 500

##########################################################################
# Storage and output                                                     #
##########################################################################

# Where simulated curves are cached between runs:
# 'Memory' - only for the lifetime of the process
# 'Shelf'  - a python shelf per namespace under DATA_DIR
# STORAGE = 'Shelf'
# DATA_DIR = '~/.surfspin'

# Default output directory. The SURFSPIN_OUTPUT_DIR environment variable
# overrides it, --out overrides both.
# OUTPUT_DIR = '.'

##########################################################################
# Logging                                                                #
##########################################################################

# LOG_LEVEL = logging.INFO
# LOG_FILE = None

# Colors on the console: 'light', 'dark' or None for none at all.
# LOG_COLOR_THEME = 'light'
