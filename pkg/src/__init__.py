# ChainBound - Rosenthal and Bernstein bounds for Markov chains
