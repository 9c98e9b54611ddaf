"""
Recovering a channel versus forgetting its environment
=======================================================

The best fidelity with which a recovery can undo N equals the best fidelity
with which the environment output can be reproduced from nothing at all.
Both sides are computed here by see-saw ascent over channels, on a few
random qubit channels.
"""
import numpy as np

from aqec.channels import complementary, identity_channel, random_channel, trace_channel
from aqec.oracles import SeesawConfig, seesaw_optimal_recovery

cfg = SeesawConfig(restarts=2)
for child in np.random.SeedSequence(0).spawn(3):
    n = random_channel(2, 2, 2, np.random.default_rng(child))
    recover = seesaw_optimal_recovery(n, identity_channel(2), cfg).best_fidelity
    forget = seesaw_optimal_recovery(trace_channel(2), complementary(n), cfg).best_fidelity
    print(f"recover {recover:.6f}   forget {forget:.6f}   gap {abs(recover - forget):.1e}")
