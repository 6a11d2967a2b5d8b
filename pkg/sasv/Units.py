from pint import UnitRegistry

# Initialize a UnitRegistry
ureg = UnitRegistry()

# Error rates are dimensionless; reports quote them in percent
ureg.define("error_fraction = 1 = frac")
