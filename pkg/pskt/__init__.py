# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
"""Top-level package for the PolySketch Toolkit."""

__author__ = """PolySketch Toolkit developers"""
__email__ = "pskt-dev@users.noreply.github.com"
__version__ = "0.1.0-dev0"

from .attention import exact_poly_attention, polysketch_attention, softmax_attention
from .causal import causal_exact_poly_attention, causal_polysketch_attention, lt_multiply_blocked
from .learnable import init_params, load_params, save_params
from .sketch import SketchTree, load_sketch, sample_sketch, save_sketch
