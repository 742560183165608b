"""Recursive Neural Gas and Echo State reservoir computing."""
