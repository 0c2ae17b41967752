"""Workbench for quantum channels, error-correcting codes, and NMR simulation.

Subpackages/modules:

* ``qop_core``      -- channels, Choi/chi representations, process tomography,
                       unital-channel structure
* ``qec_engine``    -- exact and approximate error-correction criteria,
                       recovery construction, the four-qubit loss-code pipeline
* ``bosonic_codes`` -- multimode excitation-loss codes over quasi-classical
                       states
* ``stabilizer``    -- Pauli words, stabilizer codes, loss-error checks,
                       measurement-based gate constructions
* ``recoupler``     -- Hadamard-matrix pulse schedules for decoupling and
                       selective recoupling
* ``nmr_sim``       -- bulk-NMR simulation, readout, labeling, and the two-spin
                       phase-damping-code experiment
* ``cli``           -- command-line frontend and fixture registry
"""

__version__ = "0.1.0"
