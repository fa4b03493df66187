"""Pauli-path surrogates of Clifford + Rz expectation landscapes."""
