"""
Package to simulate space-time SINR networks with nearest neighbor power control and conic forwarding.
"""

import logging

logging.getLogger(__name__).addHandler(logging.NullHandler())
