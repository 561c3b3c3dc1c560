"""Shared test configuration (also puts this directory on sys.path so the
reference implementations in it can be imported by test modules)."""
