"""Uplink cell-free network simulator and DDPG beamforming optimizer.

The package is organized bottom-up:

* ``config``   -- typed configuration objects, unit parsing, config files
* ``netmodel`` -- topology, pilots, channel draws, MMSE estimation,
                  closed-form effective-channel statistics
* ``envsim``   -- SIC-ordered SINR, rate/power/energy-efficiency,
                  constraint checks, the MDP environment and baselines
* ``neural``   -- minimal dense network engine (forward, backprop, Adam,
                  Polyak averaging, inference FLOPS)
* ``ddpg``     -- replay buffer, actor/critic agent and training loop
* ``harness``  -- experiment orchestration, CSV emission, figures
"""

__version__ = "0.1.0"
