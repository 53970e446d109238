"""Error pre-compensation for noisy quantum channels.

Given a channel in Kraus form and a target output state, find an input state
the channel maps onto the target (:mod:`qepc.precomp`), or the input whose
output is as close to the target as possible (:mod:`qepc.sdp`).
"""

__version__ = "0.1.0"
