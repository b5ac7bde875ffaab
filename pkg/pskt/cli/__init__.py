# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
