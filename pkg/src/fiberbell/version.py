"""The version number for Fiberbell is governed by this file"""

__version__ = "0.1.0.dev0"
