"""
Subcommands of the binding-bench CLI, one module each
"""
from . import coeffs, oracle_fit, rs_check, scaling, series

COMMANDS = {
    "coeffs": coeffs,
    "series": series,
    "scaling": scaling,
    "rs-check": rs_check,
    "oracle-fit": oracle_fit,
}
