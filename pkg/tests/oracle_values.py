"""Reference values produced by ``tools/oracles.py`` (mpmath, 30 digits).

Keys: ``A_N_mu``, ``B_N_mu`` and ``C_N_mu`` are the half-space bubble constants.
``Ainf_N`` and ``Binf_N`` are the same integrals over the whole line in t.
``trace_quotient_N`` and ``space_quotient_N`` are the Sobolev quotients of the
standard profiles evaluated directly.
"""

ORACLE = {
    'pi_over_8_line': 0.39269908169872415,
    'sphere_3': 19.739208802178717,
    'A_4_0': 1.6449340668482264,
    'B_4_0': 0.82246703342411322,
    'C_4_0': 2.4674011002723397,
    'A_4_0.5': 1.339850745871421,
    'B_4_0.5': 0.52911768633103107,
    'C_4_0.5': 2.3222598590798491,
    'A_4_1': 1.0564245641317756,
    'B_4_1': 0.30752121854721876,
    'C_4_1': 1.9739208802178717,
    'Ainf_4': 3.2898681336964529,
    'Binf_4': 1.6449340668482264,
    'trace_quotient_4': 2.7025676900634902,
    'space_quotient_4': 10.260398641294913,
    'A_5_0': 0.80745512188280782,
    'B_5_0': 0.48447307312968469,
    'C_5_0': 1.6449340668482264,
    'A_5_0.5': 0.67164572633501632,
    'B_5_0.5': 0.3510800934431987,
    'C_5_0.5': 1.5787001857072747,
    'A_5_1': 0.54336581288618294,
    'B_5_1': 0.23719304812190553,
    'C_5_1': 1.4044693280518978,
    'Ainf_5': 1.6149102437656156,
    'Binf_5': 0.96894614625936938,
    'trace_quotient_5': 3.3974914968924907,
    'space_quotient_5': 14.811911720005934,
    'A_6_0': 0.38757845850374775,
    'B_6_0': 0.2583856390024985,
    'C_6_0': 0.96894614625936938,
    'A_6_0.5': 0.32748981403001771,
    'B_6_0.5': 0.19890762835823703,
    'C_6_0.5': 0.93936175504813656,
    'A_6_1': 0.27015779514782806,
    'B_6_1': 0.14541026391767088,
    'C_6_1': 0.85830523682490852,
    'Ainf_6': 0.7751569170074955,
    'Binf_6': 0.516771278004997,
    'trace_quotient_6': 3.9748424498764304,
    'space_quotient_6': 19.259456665473206,
    'trace_quotient_3': 1.772453850905516,
}

# Mesh-refinement oracle, not mpmath: smallest Neumann eigenvalue of
# -Lap + 1 + z^2 on the unit half-ball, P1 on ring meshes with h = 0.1 ... 0.0125
# (1.19626713, 1.19637315, 1.19639437, 1.19639984) extrapolated in h^2.
ORACLE['lambda1_one_plus_z2'] = 1.1964016632
