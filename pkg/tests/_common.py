"""
Module to define common functions for the tests.
"""

###########
# Imports #
###########

import os

#############
# Constants #
#############

tolerance = 0.1
output_folder = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(output_folder, exist_ok=True)

# Small windows keeping the simulations fast
fast_exit_time_parameters = {
    "L_x": 50.,
    "L_y": 50.,
    "guard": 10.,
    "hop_horizon": 2000,
    "seed": 7
}
fast_traversal_parameters = {
    "L_x": 100.,
    "L_y": 60.,
    "guard": 20.,
    "horizon": 100000,
    "seed": 11
}

#############
# Functions #
#############

def check_value(true_value, test_value, tolerance=tolerance):
    assert abs(true_value - test_value) / true_value < tolerance
