"""Simulator of fiber transport of spatially entangled photon pairs"""
