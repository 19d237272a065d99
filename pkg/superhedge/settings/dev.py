from .base import *  # isort:skip
import logging

ENVIRONMENT = 'DEV'

DEBUG = True


logging.getLogger('SuperHedge.lattice').setLevel(logging.DEBUG)
logging.getLogger('SuperHedge.simulate').setLevel(logging.DEBUG)
logging.getLogger('SuperHedge.analysis').setLevel(logging.DEBUG)
logging.getLogger('SuperHedge.cli').setLevel(logging.DEBUG)
logging.getLogger('SuperHedge.expr').setLevel(logging.DEBUG)

SIMULATION_BLOCK_SIZE = 1024
